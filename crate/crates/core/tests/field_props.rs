mod common;

use mvpir::field::{Field, FieldElement};
use mvpir::mvf::{canonical_set, crt, crt_split};
use mvpir::primitive_root_of_unity;
use proptest::prelude::*;

use common::{all_elements, dense_mul};

fn fields() -> Vec<Field> {
    vec![
        Field::gf4(),
        Field::gf9(),
        Field::gf512(),
        Field::prime(7).unwrap(),
        Field::with_degree(5, 2).unwrap(),
        Field::with_degree(3, 5).unwrap(),
    ]
}

fn field_and_elements(count: usize) -> impl Strategy<Value = (Field, Vec<FieldElement>)> {
    (
        0..fields().len(),
        prop::collection::vec(any::<u64>(), count),
    )
        .prop_map(|(i, raw)| {
            let f = fields()[i].clone();
            let xs = raw
                .into_iter()
                .map(|r| f.from_index(r % f.order()).unwrap())
                .collect();
            (f, xs)
        })
}

proptest! {
    #[test]
    fn ring_axioms((f, xs) in field_and_elements(3)) {
        let (a, b, c) = (xs[0], xs[1], xs[2]);
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), f.zero());
        prop_assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
        prop_assert_eq!(f.mul(a, f.one()), a);
        prop_assert_eq!(f.square(a), f.mul(a, a));
    }

    #[test]
    fn inverses((f, xs) in field_and_elements(1)) {
        let a = xs[0];
        if a.is_zero() {
            prop_assert!(f.inv(a).is_err());
        } else {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
            prop_assert_eq!(f.pow(a, f.order() - 1), f.one());
        }
    }

    #[test]
    fn frobenius_is_additive((f, xs) in field_and_elements(2)) {
        let p = f.characteristic();
        let (a, b) = (xs[0], xs[1]);
        prop_assert_eq!(f.pow(f.add(a, b), p), f.add(f.pow(a, p), f.pow(b, p)));
        prop_assert_eq!(f.pow(a, f.order()), a);
    }

    #[test]
    fn encoding_round_trips((f, xs) in field_and_elements(1)) {
        let a = xs[0];
        let bytes = f.encode(a);
        prop_assert_eq!(bytes.len(), f.element_width());
        prop_assert_eq!(f.decode(&bytes).unwrap(), a);
        prop_assert_eq!(f.from_hex(&f.to_hex(a)).unwrap(), a);
        prop_assert_eq!(f.from_coeffs(&f.coeffs(a)).unwrap(), a);
        prop_assert_eq!(f.from_bits(a.bits()).unwrap(), a);
    }

    #[test]
    fn crt_round_trip(a in 2u64..200, b in 2u64..200, x in any::<u64>()) {
        match crt(a, b, x % a, x % b) {
            Ok(y) => {
                prop_assert!(y < a * b);
                prop_assert_eq!(crt_split(a, b, y), (x % a, x % b));
            }
            Err(_) => prop_assert!(gcd(a, b) > 1),
        }
    }

    #[test]
    fn idempotents_split_into_zeros_and_ones(m in 2u64..3000) {
        let set = canonical_set(m).unwrap();
        let primes = distinct_primes(m);
        prop_assert_eq!(set.len(), 1 << primes.len());
        for &s in set.elements() {
            for &p in &primes {
                let q = prime_power_part(m, p);
                prop_assert!(s % q == 0 || s % q == 1);
            }
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn distinct_primes(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

fn prime_power_part(mut m: u64, p: u64) -> u64 {
    let mut q = 1;
    while m.is_multiple_of(p) {
        q *= p;
        m /= p;
    }
    q
}

#[test]
fn roots_of_unity_split_z_m_minus_1() {
    for (f, m) in [
        (Field::gf4(), 3),
        (Field::gf9(), 4),
        (Field::gf9(), 8),
        (Field::gf512(), 7),
        (Field::gf512(), 73),
        (Field::prime(7).unwrap(), 6),
    ] {
        let h = primitive_root_of_unity(&f, m).unwrap();
        let mut prod = vec![f.one()];
        for &r in h.elements() {
            prod = dense_mul(&f, &prod, &[f.neg(r), f.one()]);
        }
        let mut expected = vec![f.zero(); m as usize + 1];
        expected[0] = f.neg(f.one());
        expected[m as usize] = f.one();
        assert_eq!(prod, expected, "m={m} over {}", f.descriptor());
    }
}

#[test]
fn gf4_tables_by_enumeration() {
    // Products of polynomials mod x^2+x+1 listed by hand.
    let f = Field::gf4();
    let table = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];
    let els = all_elements(&f);
    assert_eq!(
        els.iter().map(|a| a.bits()).collect::<Vec<_>>(),
        [0, 1, 2, 3]
    );
    for (i, &a) in els.iter().enumerate() {
        for (j, &b) in els.iter().enumerate() {
            assert_eq!(f.mul(a, b).bits(), table[i][j]);
            assert_eq!(f.add(a, b).bits(), (i ^ j) as u64);
        }
    }
}
