//! Arithmetic in GF(p^d) over a polynomial basis.
//!
//! A [`Field`] is a cheap handle (an `Arc`) to an immutable [`FieldSpec`].
//! Elements are plain `Copy` values that remember which field they belong
//! to; every operation checks membership, so elements of different fields
//! never mix.
//!
//! Internally an element is its coefficient vector packed low-degree-first
//! into an integer, `w = bitlen(p - 1)` bits per coefficient. The byte
//! encoding is exactly the little-endian form of that integer, truncated to
//! `ceil(d * w / 8)` bytes.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported extension degree.
pub const MAX_DEGREE: usize = 16;
/// Largest supported characteristic.
pub const MAX_CHARACTERISTIC: u64 = 1 << 16;
/// Packed elements must fit in this many bits.
pub const MAX_PACKED_BITS: u32 = 32;

/// Immutable description of GF(p^d).
#[derive(Debug, PartialEq, Eq)]
pub struct FieldSpec {
    p: u64,
    degree: usize,
    /// `degree + 1` coefficients, lowest degree first, monic.
    modulus: Vec<u64>,
    coeff_bits: u32,
    order: u64,
    id: u64,
    /// Full modulus packed as a bit polynomial, used by the p = 2 fast path.
    binary_modulus: u64,
}

/// Shared handle to a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field(Arc<FieldSpec>);

/// An element of some [`Field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    field: u64,
    bits: u64,
}

impl FieldElement {
    /// Packed coefficient vector (lowest degree in the lowest bits).
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

/// Distinct prime factors of `n`, ascending.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn bit_length(x: u64) -> u32 {
    64 - x.leading_zeros()
}

// Dense polynomial helpers over Z_p, used only for the irreducibility test.
// Coefficients are lowest degree first.

fn zp_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn zp_inv(a: u64, p: u64) -> u64 {
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

fn zp_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    zp_trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = zp_inv(b[db], p);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let c = r[r.len() - 1] * lead_inv % p;
        for (i, &bi) in b.iter().enumerate() {
            let idx = shift + i;
            r[idx] = (r[idx] + p - c * bi % p) % p;
        }
        zp_trim(&mut r);
    }
    r
}

fn zp_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    zp_rem(&prod, m, p)
}

fn zp_powmod(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut b = zp_rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            result = zp_mulmod(&result, &b, m, p);
        }
        b = zp_mulmod(&b, &b, m, p);
        e >>= 1;
    }
    result
}

fn zp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    zp_trim(&mut x);
    zp_trim(&mut y);
    while !y.is_empty() {
        let r = zp_rem(&x, &y, p);
        x = y;
        y = r;
    }
    x
}

/// Ben-Or test: f of degree d is irreducible iff gcd(x^{p^i} - x, f) = 1
/// for every 1 <= i <= d/2.
fn is_irreducible(modulus: &[u64], p: u64) -> bool {
    let d = modulus.len() - 1;
    if d == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let mut h = x.clone();
    for _ in 1..=d / 2 {
        h = zp_powmod(&h, p, modulus, p);
        let mut diff = h.clone();
        diff.resize(diff.len().max(2), 0);
        diff[1] = (diff[1] + p - 1) % p;
        zp_trim(&mut diff);
        if diff.is_empty() {
            return false;
        }
        if zp_gcd(modulus, &diff, p).len() > 1 {
            return false;
        }
    }
    true
}

fn fingerprint(p: u64, modulus: &[u64]) -> u64 {
    // FNV-1a over (p, modulus coefficients).
    let mut h: u64 = 0xcbf29ce484222325;
    for word in std::iter::once(p).chain(modulus.iter().copied()) {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

impl Field {
    /// Builds GF(p^d) from a monic irreducible modulus of degree d
    /// (coefficients lowest degree first).
    pub fn new(p: u64, modulus: Vec<u64>) -> Result<Self> {
        if !is_prime(p) || p > MAX_CHARACTERISTIC {
            return Err(Error::InvalidField(format!(
                "characteristic {p} is not a prime <= {MAX_CHARACTERISTIC}"
            )));
        }
        if modulus.len() < 2 {
            return Err(Error::InvalidField("modulus must have degree >= 1".into()));
        }
        let degree = modulus.len() - 1;
        if degree > MAX_DEGREE {
            return Err(Error::InvalidField(format!(
                "degree {degree} exceeds {MAX_DEGREE}"
            )));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidField(
                "modulus coefficient out of range".into(),
            ));
        }
        if modulus[degree] != 1 {
            return Err(Error::InvalidField("modulus is not monic".into()));
        }
        let coeff_bits = bit_length(p - 1);
        if coeff_bits * degree as u32 > MAX_PACKED_BITS {
            return Err(Error::InvalidField(format!(
                "GF({p}^{degree}) does not fit the {MAX_PACKED_BITS}-bit element encoding"
            )));
        }
        if !is_irreducible(&modulus, p) {
            return Err(Error::InvalidField(format!(
                "modulus {} is reducible over Z_{p}",
                format_modulus(&modulus)
            )));
        }
        let order = p.pow(degree as u32);
        let binary_modulus = if p == 2 {
            modulus
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &c)| acc | (c << i))
        } else {
            0
        };
        let id = fingerprint(p, &modulus);
        Ok(Field(Arc::new(FieldSpec {
            p,
            degree,
            modulus,
            coeff_bits,
            order,
            id,
            binary_modulus,
        })))
    }

    /// The prime field Z_p.
    pub fn prime(p: u64) -> Result<Self> {
        Field::new(p, vec![0, 1])
    }

    /// GF(4) with modulus x^2 + x + 1.
    pub fn gf4() -> Self {
        Field::new(2, vec![1, 1, 1]).expect("x^2+x+1 is irreducible")
    }

    /// GF(9) with modulus x^2 + 1.
    pub fn gf9() -> Self {
        Field::new(3, vec![1, 0, 1]).expect("x^2+1 is irreducible over Z_3")
    }

    /// GF(512) with modulus x^9 + x^4 + 1.
    pub fn gf512() -> Self {
        Field::new(2, vec![1, 0, 0, 0, 1, 0, 0, 0, 0, 1]).expect("x^9+x^4+1 is irreducible")
    }

    /// GF(p^d) using a built-in modulus when one exists, otherwise the
    /// smallest monic irreducible polynomial of degree d.
    pub fn with_degree(p: u64, d: usize) -> Result<Self> {
        match (p, d) {
            (2, 2) => return Ok(Field::gf4()),
            (3, 2) => return Ok(Field::gf9()),
            (2, 9) => return Ok(Field::gf512()),
            (_, 1) => return Field::prime(p),
            _ => {}
        }
        if !is_prime(p) || d == 0 || d > MAX_DEGREE {
            return Err(Error::InvalidField(format!("unsupported GF({p}^{d})")));
        }
        let low_count = p
            .checked_pow(d as u32)
            .ok_or_else(|| Error::InvalidField(format!("GF({p}^{d}) too large")))?;
        for index in 0..low_count {
            let mut modulus = Vec::with_capacity(d + 1);
            let mut rest = index;
            for _ in 0..d {
                modulus.push(rest % p);
                rest /= p;
            }
            modulus.push(1);
            if modulus[0] == 0 {
                continue;
            }
            match Field::new(p, modulus) {
                Ok(f) => return Ok(f),
                Err(Error::InvalidField(msg)) if msg.contains("reducible") => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::InvalidField(format!(
            "no irreducible polynomial of degree {d} over Z_{p}"
        )))
    }

    /// Smallest field of characteristic p containing all m-th roots of unity.
    pub fn containing_roots_of_unity(p: u64, m: u64) -> Result<Self> {
        if m == 0 || gcd(m, p) != 1 {
            return Err(Error::NotCoprime {
                a: m,
                b: p,
                gcd: gcd(m, p),
            });
        }
        let mut q = 1u64;
        for d in 1..=MAX_DEGREE {
            q = q.saturating_mul(p);
            if (q - 1).is_multiple_of(m) {
                return Field::with_degree(p, d);
            }
        }
        Err(Error::InvalidField(format!(
            "no GF({p}^d) with d <= {MAX_DEGREE} contains the {m}-th roots of unity"
        )))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0
    }

    pub fn characteristic(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn order(&self) -> u64 {
        self.0.order
    }

    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    /// Width in bytes of [`Field::encode`].
    pub fn element_width(&self) -> usize {
        (self.0.degree * self.0.coeff_bits as usize).div_ceil(8)
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        a.field == self.0.id
    }

    #[inline]
    fn check(&self, a: FieldElement) {
        assert!(
            a.field == self.0.id,
            "field element used with a different field"
        );
    }

    #[inline]
    fn wrap(&self, bits: u64) -> FieldElement {
        FieldElement {
            field: self.0.id,
            bits,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.wrap(0)
    }

    pub fn one(&self) -> FieldElement {
        self.wrap(1)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, c: u64) -> FieldElement {
        self.wrap(c % self.0.p)
    }

    /// Element with the given coefficients (lowest degree first). Missing
    /// trailing coefficients are zero.
    pub fn from_coeffs(&self, coeffs: &[u64]) -> Result<FieldElement> {
        if coeffs.len() > self.0.degree {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a degree-{} field",
                coeffs.len(),
                self.0.degree
            )));
        }
        if coeffs.iter().any(|&c| c >= self.0.p) {
            return Err(Error::InvalidArgument("coefficient out of range".into()));
        }
        Ok(self.wrap(self.pack(coeffs)))
    }

    /// Element from its packed integer form, rejecting invalid packings.
    pub fn from_bits(&self, bits: u64) -> Result<FieldElement> {
        let total = self.0.coeff_bits * self.0.degree as u32;
        if total < 64 && bits >> total != 0 {
            return Err(Error::ElementDecode(format!(
                "bits beyond degree {} set in {bits:#x}",
                self.0.degree
            )));
        }
        if self.0.p != 2 {
            let mask = (1u64 << self.0.coeff_bits) - 1;
            for i in 0..self.0.degree {
                let c = (bits >> (i as u32 * self.0.coeff_bits)) & mask;
                if c >= self.0.p {
                    return Err(Error::ElementDecode(format!(
                        "coefficient {c} >= p = {}",
                        self.0.p
                    )));
                }
            }
        }
        Ok(self.wrap(bits))
    }

    /// The element whose coefficients are the base-p digits of `index`,
    /// a bijection from `[0, q)` onto the field.
    pub fn from_index(&self, mut index: u64) -> Result<FieldElement> {
        if index >= self.0.order {
            return Err(Error::InvalidArgument(format!(
                "index {index} >= field order {}",
                self.0.order
            )));
        }
        let p = self.0.p;
        let coeffs: Vec<u64> = (0..self.0.degree)
            .map(|_| {
                let c = index % p;
                index /= p;
                c
            })
            .collect();
        Ok(self.wrap(self.pack(&coeffs)))
    }

    /// A uniformly random element.
    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        self.from_index(rng.random_range(0..self.0.order))
            .expect("index below the order")
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u64> {
        self.check(a);
        self.unpack(a.bits)
    }

    /// The x basis element (the constant x when d = 1 is 0, so this
    /// returns the residue of x modulo the linear modulus).
    pub fn generator_x(&self) -> FieldElement {
        if self.0.degree == 1 {
            // x mod (x - r) = r
            self.wrap((self.0.p - self.0.modulus[0]) % self.0.p)
        } else {
            self.wrap(1 << self.0.coeff_bits)
        }
    }

    fn pack(&self, coeffs: &[u64]) -> u64 {
        coeffs.iter().enumerate().fold(0u64, |acc, (i, &c)| {
            acc | (c << (i as u32 * self.0.coeff_bits))
        })
    }

    fn unpack(&self, bits: u64) -> Vec<u64> {
        let mask = (1u64 << self.0.coeff_bits) - 1;
        (0..self.0.degree)
            .map(|i| (bits >> (i as u32 * self.0.coeff_bits)) & mask)
            .collect()
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        if self.0.p == 2 {
            return self.wrap(a.bits ^ b.bits);
        }
        let p = self.0.p;
        let w = self.0.coeff_bits;
        let mask = (1u64 << w) - 1;
        let mut out = 0u64;
        for i in 0..self.0.degree as u32 {
            let x = (a.bits >> (i * w)) & mask;
            let y = (b.bits >> (i * w)) & mask;
            out |= ((x + y) % p) << (i * w);
        }
        self.wrap(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        self.check(a);
        if self.0.p == 2 {
            return a;
        }
        let p = self.0.p;
        let w = self.0.coeff_bits;
        let mask = (1u64 << w) - 1;
        let mut out = 0u64;
        for i in 0..self.0.degree as u32 {
            let x = (a.bits >> (i * w)) & mask;
            out |= ((p - x) % p) << (i * w);
        }
        self.wrap(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        self.wrap(self.mul_bits(a.bits, b.bits))
    }

    /// Multiplication that reports mismatched fields instead of panicking.
    pub fn try_mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        if !self.contains(a) || !self.contains(b) {
            return Err(Error::FieldMismatch);
        }
        Ok(self.mul(a, b))
    }

    pub fn try_add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        if !self.contains(a) || !self.contains(b) {
            return Err(Error::FieldMismatch);
        }
        Ok(self.add(a, b))
    }

    fn mul_bits(&self, a: u64, b: u64) -> u64 {
        let d = self.0.degree;
        if self.0.p == 2 {
            let mut prod = 0u64;
            let mut x = a;
            let mut y = b;
            while y != 0 {
                if y & 1 == 1 {
                    prod ^= x;
                }
                x <<= 1;
                y >>= 1;
            }
            let m = self.0.binary_modulus;
            for i in (d..2 * d).rev() {
                if (prod >> i) & 1 == 1 {
                    prod ^= m << (i - d);
                }
            }
            return prod;
        }
        let p = self.0.p;
        let w = self.0.coeff_bits;
        let mask = (1u64 << w) - 1;
        let mut xa = [0u64; MAX_DEGREE];
        let mut xb = [0u64; MAX_DEGREE];
        for i in 0..d {
            xa[i] = (a >> (i as u32 * w)) & mask;
            xb[i] = (b >> (i as u32 * w)) & mask;
        }
        let mut prod = [0u64; 2 * MAX_DEGREE];
        for i in 0..d {
            if xa[i] == 0 {
                continue;
            }
            for j in 0..d {
                prod[i + j] = (prod[i + j] + xa[i] * xb[j]) % p;
            }
        }
        let modulus = &self.0.modulus;
        for i in (d..2 * d - 1).rev() {
            let c = prod[i];
            if c == 0 {
                continue;
            }
            prod[i] = 0;
            for (j, &mj) in modulus[..d].iter().enumerate() {
                let idx = i - d + j;
                prod[idx] = (prod[idx] + (p - c) * mj) % p;
            }
        }
        prod[..d]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &c)| acc | (c << (i as u32 * w)))
    }

    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        self.check(a);
        let mut result = 1u64;
        let mut base = a.bits;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul_bits(result, base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul_bits(base, base);
            }
        }
        self.wrap(result)
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if !self.contains(a) {
            return Err(Error::FieldMismatch);
        }
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.0.order - 2))
    }

    /// Every element, ordered by packed integer value (zero first).
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let total = 1u64 << (self.0.coeff_bits * self.0.degree as u32);
        (0..total).filter_map(move |bits| self.from_bits(bits).ok())
    }

    pub fn multiplicative_order(&self, a: FieldElement) -> Result<u64> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let mut order = self.0.order - 1;
        for r in prime_factors(order) {
            while order.is_multiple_of(r) && self.pow(a, order / r) == self.one() {
                order /= r;
            }
        }
        Ok(order)
    }

    pub fn is_primitive(&self, a: FieldElement) -> bool {
        if a.is_zero() {
            return false;
        }
        let n = self.0.order - 1;
        prime_factors(n)
            .into_iter()
            .all(|r| self.pow(a, n / r) != self.one())
    }

    /// The smallest primitive element in packed-integer order.
    pub fn smallest_primitive(&self) -> FieldElement {
        self.elements()
            .find(|&a| self.is_primitive(a))
            .expect("every finite field has a primitive element")
    }

    pub fn encode(&self, a: FieldElement) -> Vec<u8> {
        self.check(a);
        a.bits.to_le_bytes()[..self.element_width()].to_vec()
    }

    pub fn encode_into(&self, a: FieldElement, out: &mut Vec<u8>) {
        self.check(a);
        out.extend_from_slice(&a.bits.to_le_bytes()[..self.element_width()]);
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<FieldElement> {
        if bytes.len() != self.element_width() {
            return Err(Error::ElementDecode(format!(
                "expected {} bytes, got {}",
                self.element_width(),
                bytes.len()
            )));
        }
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        self.from_bits(u64::from_le_bytes(buf))
    }

    /// Lowercase hex of [`Field::encode`].
    pub fn to_hex(&self, a: FieldElement) -> String {
        self.encode(a).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(&self, s: &str) -> Result<FieldElement> {
        let s = s.trim();
        if !s.len().is_multiple_of(2) {
            return Err(Error::ElementDecode(format!("odd-length hex {s:?}")));
        }
        let bytes = (0..s.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&s[i..i + 2], 16)
                    .map_err(|_| Error::ElementDecode(format!("bad hex {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        self.decode(&bytes)
    }

    /// Compact textual description, e.g. `GF(2^9):x^9+x^4+1`.
    pub fn descriptor(&self) -> String {
        format!(
            "GF({}^{}):{}",
            self.0.p,
            self.0.degree,
            format_modulus(&self.0.modulus)
        )
    }

    pub fn from_descriptor(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad field descriptor {s:?}"));
        let s = s.trim();
        let (head, modulus) = s.split_once(':').ok_or_else(bad)?;
        let inner = head
            .strip_prefix("GF(")
            .and_then(|h| h.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (p, d) = inner.split_once('^').ok_or_else(bad)?;
        let p: u64 = p.parse().map_err(|_| bad())?;
        let d: usize = d.parse().map_err(|_| bad())?;
        let coeffs = parse_modulus(modulus, p)?;
        if coeffs.len() != d + 1 {
            return Err(bad());
        }
        Field::new(p, coeffs)
    }

    pub fn display(&self, a: FieldElement) -> ElementDisplay<'_> {
        ElementDisplay { field: self, a }
    }
}

/// Renders an element as a polynomial in `x`.
pub struct ElementDisplay<'a> {
    field: &'a Field,
    a: FieldElement,
}

impl fmt::Display for ElementDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs = self.field.coeffs(self.a);
        if coeffs.iter().all(|&c| c == 0) {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "x")?,
                (1, c) => write!(f, "{c}x")?,
                (i, 1) => write!(f, "x^{i}")?,
                (i, c) => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}

/// Formats a modulus (lowest degree first) as `x^9+x^4+1`.
pub fn format_modulus(coeffs: &[u64]) -> String {
    let mut parts = Vec::new();
    for (i, &c) in coeffs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let part = match (i, c) {
            (0, c) => format!("{c}"),
            (1, 1) => "x".to_string(),
            (1, c) => format!("{c}x"),
            (i, 1) => format!("x^{i}"),
            (i, c) => format!("{c}x^{i}"),
        };
        parts.push(part);
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// Parses `x^9+x^4+1` (or `2x^2+1`, etc.) into coefficients lowest first.
pub fn parse_modulus(s: &str, p: u64) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("bad polynomial {s:?}"));
    let mut coeffs: Vec<u64> = Vec::new();
    for term in s.split('+') {
        let term = term.trim().replace('*', "");
        if term.is_empty() {
            return Err(bad());
        }
        let (coef, exp) = match term.find('x') {
            None => (term.parse::<u64>().map_err(|_| bad())?, 0usize),
            Some(pos) => {
                let coef = if pos == 0 {
                    1
                } else {
                    term[..pos].parse::<u64>().map_err(|_| bad())?
                };
                let rest = &term[pos + 1..];
                let exp = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^')
                        .ok_or_else(bad)?
                        .parse::<usize>()
                        .map_err(|_| bad())?
                };
                (coef, exp)
            }
        };
        if exp > MAX_DEGREE {
            return Err(bad());
        }
        if coeffs.len() <= exp {
            coeffs.resize(exp + 1, 0);
        }
        coeffs[exp] = (coeffs[exp] + coef) % p;
    }
    zp_trim(&mut coeffs);
    Ok(coeffs)
}

/// A primitive m-th root of unity together with all of H_m.
#[derive(Clone, Debug)]
pub struct RootOfUnity {
    field: Field,
    gamma: FieldElement,
    powers: Vec<FieldElement>,
    index: HashMap<u64, usize>,
}

impl RootOfUnity {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn gamma(&self) -> FieldElement {
        self.gamma
    }

    pub fn order(&self) -> u64 {
        self.powers.len() as u64
    }

    /// H_m in the order gamma^0, gamma^1, ..., gamma^(m-1).
    pub fn elements(&self) -> &[FieldElement] {
        &self.powers
    }

    /// gamma^i for any integer exponent.
    pub fn pow(&self, i: u64) -> FieldElement {
        self.powers[(i % self.order()) as usize]
    }

    /// Discrete log base gamma for members of H_m.
    pub fn log(&self, a: FieldElement) -> Option<usize> {
        if !self.field.contains(a) {
            return None;
        }
        self.index.get(&a.bits).copied()
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        self.log(a).is_some()
    }
}

/// The primitive m-th root of unity g^((q-1)/m), where g is the smallest
/// primitive element of the field.
pub fn primitive_root_of_unity(field: &Field, m: u64) -> Result<RootOfUnity> {
    let q = field.order();
    if m == 0 || !(q - 1).is_multiple_of(m) {
        return Err(Error::NoRootOfUnity { m, order: q });
    }
    let g = field.smallest_primitive();
    let gamma = field.pow(g, (q - 1) / m);
    let mut powers = Vec::with_capacity(m as usize);
    let mut cur = field.one();
    for _ in 0..m {
        powers.push(cur);
        cur = field.mul(cur, gamma);
    }
    debug_assert_eq!(cur, field.one());
    let index = powers
        .iter()
        .enumerate()
        .map(|(i, a)| (a.bits, i))
        .collect::<HashMap<_, _>>();
    if index.len() != m as usize {
        return Err(Error::NoRootOfUnity { m, order: q });
    }
    Ok(RootOfUnity {
        field: field.clone(),
        gamma,
        powers,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf4_gamma() -> (Field, FieldElement) {
        let f = Field::gf4();
        let g = f.from_coeffs(&[0, 1]).unwrap();
        (f, g)
    }

    #[test]
    fn gf4_products() {
        let (f, g) = gf4_gamma();
        let g2 = f.mul(g, g);
        assert_eq!(f.coeffs(g2), vec![1, 1]);
        assert_eq!(f.mul(g, g2), f.one());
        assert_eq!(f.mul(g, f.one()), g);
    }

    #[test]
    fn gf512_reduction() {
        let f = Field::gf512();
        let x4 = f.from_coeffs(&[0, 0, 0, 0, 1]).unwrap();
        let x5 = f.from_coeffs(&[0, 0, 0, 0, 0, 1]).unwrap();
        let expect = f.from_coeffs(&[1, 0, 0, 0, 1]).unwrap();
        assert_eq!(f.mul(x4, x5), expect);
    }

    #[test]
    fn inverses() {
        let (f, g) = gf4_gamma();
        assert_eq!(f.inv(f.one()).unwrap(), f.one());
        assert_eq!(f.inv(g).unwrap(), f.mul(g, g));
        assert!(matches!(f.inv(f.zero()), Err(Error::ZeroInverse)));
        let f9 = Field::gf9();
        for a in f9.elements().skip(1) {
            assert_eq!(f9.mul(a, f9.inv(a).unwrap()), f9.one());
        }
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let f4 = Field::gf4();
        let f9 = Field::gf9();
        assert!(matches!(
            f4.try_mul(f4.one(), f9.one()),
            Err(Error::FieldMismatch)
        ));
        assert!(matches!(f9.inv(f4.one()), Err(Error::FieldMismatch)));
    }

    #[test]
    #[should_panic(expected = "different field")]
    fn mixing_fields_panics_on_unchecked_ops() {
        let f4 = Field::gf4();
        let f9 = Field::gf9();
        f4.mul(f4.one(), f9.one());
    }

    #[test]
    fn roots_of_unity() {
        let (f, g) = gf4_gamma();
        let h3 = primitive_root_of_unity(&f, 3).unwrap();
        assert_eq!(h3.gamma(), g);
        assert_eq!(h3.elements(), &[f.one(), g, f.mul(g, g)]);
        assert!(matches!(
            primitive_root_of_unity(&f, 5),
            Err(Error::NoRootOfUnity { .. })
        ));

        let f = Field::gf512();
        let x = f.generator_x();
        assert_eq!(f.pow(x, 511), f.one());
        assert_ne!(f.pow(x, 511 / 7), f.one());
        assert_ne!(f.pow(x, 511 / 73), f.one());
        let h = primitive_root_of_unity(&f, 511).unwrap();
        assert_eq!(h.gamma(), x);
        assert_eq!(h.order(), 511);
    }

    #[test]
    fn encoding() {
        let (f, g) = gf4_gamma();
        assert_eq!(f.encode(f.zero()), vec![0x00]);
        assert_eq!(f.encode(f.mul(g, g)), vec![0x03]);
        assert!(f.decode(&[0x07]).is_err());
        assert!(f.decode(&[0x01, 0x00]).is_err());
        assert_eq!(Field::gf512().element_width(), 2);
        // coefficient 3 is out of range in GF(9)
        assert!(Field::gf9().decode(&[0b0011]).is_err());
        assert_eq!(Field::gf9().decode(&[0b1000]).unwrap().bits(), 0b1000);
    }

    #[test]
    fn construction_checks() {
        assert!(Field::new(4, vec![1, 1]).is_err());
        assert!(Field::new(2, vec![1, 0, 1]).is_err()); // x^2+1 = (x+1)^2
        assert!(Field::new(2, vec![1, 1, 2]).is_err());
        assert!(Field::new(3, vec![1, 0, 2]).is_err()); // not monic
        assert!(Field::prime(65521).is_ok());
        assert!(Field::with_degree(65521, 3).is_err()); // 48 packed bits
        assert!(Field::new(2, vec![1; 18]).is_err()); // degree 17
        let f = Field::with_degree(2, 4).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 0, 0, 1]);
        let f = Field::containing_roots_of_unity(2, 7).unwrap();
        assert_eq!(f.order(), 8);
    }

    #[test]
    fn descriptors_round_trip() {
        for f in [
            Field::gf4(),
            Field::gf9(),
            Field::gf512(),
            Field::prime(7).unwrap(),
        ] {
            let d = f.descriptor();
            assert_eq!(Field::from_descriptor(&d).unwrap(), f, "{d}");
        }
        assert_eq!(Field::gf512().descriptor(), "GF(2^9):x^9+x^4+1");
        assert_eq!(parse_modulus("x^2+2x+1", 3).unwrap(), vec![1, 2, 1]);
    }

    #[test]
    fn display() {
        let (f, g) = gf4_gamma();
        assert_eq!(f.display(f.mul(g, g)).to_string(), "x+1");
        assert_eq!(f.display(f.zero()).to_string(), "0");
    }
}
