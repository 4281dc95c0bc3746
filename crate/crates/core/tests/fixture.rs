mod common;

use mvpir::decode::DecodingPoly;

// Carry-less multiplication mod x^9 + x^4 + 1.
fn mul512(mut a: u64, mut b: u64) -> u64 {
    let mut r = 0;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & 0x200 != 0 {
            a ^= 0x211;
        }
    }
    r
}

fn pow512(a: u64, mut e: u64) -> u64 {
    let (mut base, mut r) = (a, 1);
    while e > 0 {
        if e & 1 == 1 {
            r = mul512(r, base);
        }
        base = mul512(base, base);
        e >>= 1;
    }
    r
}

#[test]
fn cached_decoder_checks_out_bitwise() {
    let text = std::fs::read_to_string(common::fixture_path()).unwrap();
    let line = text.lines().find(|l| l.starts_with("m=511")).unwrap();
    let (poly, target) = DecodingPoly::from_fixture_line(line).unwrap();
    assert_eq!(target, [0, 1, 147, 365]);
    assert_eq!(poly.sparsity(), 3);

    // x generates GF(512)^* since 511 = 7 * 73 and x^73, x^7 != 1
    assert_ne!(pow512(2, 73), 1);
    assert_ne!(pow512(2, 7), 1);
    assert_eq!(pow512(2, 511), 1);
    for s in target {
        let value = poly.terms().iter().fold(0, |acc, &(d, c)| {
            acc ^ mul512(c.bits(), pow512(2, s * d % 511))
        });
        assert_eq!(value, u64::from(s == 0), "P(gamma^{s})");
    }
}
