//! Sparse polynomials, Hasse derivatives and the chain rule along monomial
//! curves.
//!
//! Hasse derivatives are used throughout instead of iterated derivatives:
//! `(Z^s)^{(j)} = C(s, j) Z^{s-j}` with the binomial reduced mod p, which
//! stays meaningful in positive characteristic. Derivative orders are capped
//! at the characteristic.

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, RootOfUnity};

/// `C(n, k) mod p` by Lucas' theorem.
pub fn binomial_mod(mut n: u64, mut k: u64, p: u64) -> u64 {
    let mut result = 1u64;
    while k > 0 || n > 0 {
        let (nd, kd) = (n % p, k % p);
        if kd > nd {
            return 0;
        }
        result = result * small_binomial(nd, kd, p) % p;
        n /= p;
        k /= p;
    }
    result
}

// C(n, k) mod p for n < p.
fn small_binomial(n: u64, k: u64, p: u64) -> u64 {
    let k = k.min(n - k);
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    // den is a product of integers < p, hence invertible.
    let mut inv = 1u64;
    let mut base = den;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            inv = inv * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    num * inv % p
}

/// Exact binomial coefficient (saturating).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    r as u64
}

/// Number of multi-indices of arity k with weight < e, i.e. C(k+e-1, e-1).
pub fn hasse_len(arity: usize, e: usize) -> usize {
    if e == 0 {
        return 0;
    }
    binomial((arity + e - 1) as u64, (e - 1) as u64) as usize
}

/// A vector of nonnegative integers used as a derivative order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u64>);

impl MultiIndex {
    pub fn weight(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

/// All multi-indices of the given arity with weight < e, in graded order:
/// by weight, and within one weight lexicographically descending, so
/// `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
pub fn multi_indices(arity: usize, e: usize) -> Vec<MultiIndex> {
    fn fill(rest: usize, weight: u64, prefix: &mut Vec<u64>, out: &mut Vec<MultiIndex>) {
        if rest == 1 {
            prefix.push(weight);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=weight).rev() {
            prefix.push(first);
            fill(rest - 1, weight - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(hasse_len(arity, e));
    if arity == 0 {
        if e > 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    for w in 0..e as u64 {
        fill(arity, w, &mut Vec::with_capacity(arity), &mut out);
    }
    out
}

/// Hasse derivatives of orders `< e` at one point, laid out in
/// [`multi_indices`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HasseVector {
    pub arity: usize,
    pub multiplicity: usize,
    pub values: Vec<FieldElement>,
}

impl HasseVector {
    pub fn new(arity: usize, multiplicity: usize, values: Vec<FieldElement>) -> Result<Self> {
        let expect = hasse_len(arity, multiplicity);
        if values.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "Hasse vector of arity {arity}, multiplicity {multiplicity} needs {expect} values, got {}",
                values.len()
            )));
        }
        Ok(HasseVector {
            arity,
            multiplicity,
            values,
        })
    }

    /// Univariate vector `(A(b), A'(b), ..., A^{(e-1)}(b))`.
    pub fn univariate(values: Vec<FieldElement>) -> Self {
        HasseVector {
            arity: 1,
            multiplicity: values.len(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Univariate polynomial stored as sorted `(exponent, coefficient)` pairs
/// with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseUniPoly {
    field: Field,
    terms: Vec<(u64, FieldElement)>,
}

impl SparseUniPoly {
    /// Canonicalizes: sorts, combines equal exponents, drops zeros.
    pub fn new(field: &Field, mut terms: Vec<(u64, FieldElement)>) -> Self {
        terms.sort_by_key(|&(s, _)| s);
        let mut out: Vec<(u64, FieldElement)> = Vec::with_capacity(terms.len());
        for (s, c) in terms {
            match out.last_mut() {
                Some((last, acc)) if *last == s => *acc = field.add(*acc, c),
                _ => out.push((s, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        SparseUniPoly {
            field: field.clone(),
            terms: out,
        }
    }

    pub fn zero(field: &Field) -> Self {
        SparseUniPoly {
            field: field.clone(),
            terms: Vec::new(),
        }
    }

    pub fn monomial(field: &Field, exponent: u64, coeff: FieldElement) -> Self {
        Self::new(field, vec![(exponent, coeff)])
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn terms(&self) -> &[(u64, FieldElement)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u64> {
        self.terms.last().map(|&(s, _)| s)
    }

    pub fn coeff(&self, exponent: u64) -> FieldElement {
        self.terms
            .binary_search_by_key(&exponent, |&(s, _)| s)
            .map(|i| self.terms[i].1)
            .unwrap_or_else(|_| self.field.zero())
    }

    pub fn eval(&self, z: FieldElement) -> FieldElement {
        let f = &self.field;
        self.terms
            .iter()
            .fold(f.zero(), |acc, &(s, c)| f.add(acc, f.mul(c, f.pow(z, s))))
    }

    pub fn add(&self, other: &SparseUniPoly) -> SparseUniPoly {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        SparseUniPoly::new(&self.field, terms)
    }

    pub fn scale(&self, c: FieldElement) -> SparseUniPoly {
        let f = &self.field;
        SparseUniPoly::new(
            f,
            self.terms.iter().map(|&(s, a)| (s, f.mul(a, c))).collect(),
        )
    }

    pub fn mul(&self, other: &SparseUniPoly) -> SparseUniPoly {
        let f = &self.field;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(s, a) in &self.terms {
            for &(t, b) in &other.terms {
                terms.push((s + t, f.mul(a, b)));
            }
        }
        SparseUniPoly::new(f, terms)
    }

    /// The j-th Hasse derivative, termwise `C(s, j) Z^{s-j}`.
    pub fn hasse(&self, j: u64) -> SparseUniPoly {
        let f = &self.field;
        let p = f.characteristic();
        let terms = self
            .terms
            .iter()
            .filter(|&&(s, _)| s >= j)
            .filter_map(|&(s, c)| {
                let binom = binomial_mod(s, j, p);
                (binom != 0).then(|| (s - j, f.mul(c, f.from_int(binom))))
            })
            .collect();
        SparseUniPoly::new(f, terms)
    }

    /// `(A(b), A^{(1)}(b), ..., A^{(e-1)}(b))` evaluated termwise.
    pub fn hasse_at(&self, b: FieldElement, e: usize) -> HasseVector {
        let values = (0..e as u64).map(|j| self.hasse(j).eval(b)).collect();
        HasseVector::univariate(values)
    }

    /// Remainder modulo `Z^modulus - 1`: exponents reduced mod `modulus`.
    pub fn mod_cyclotomic(&self, modulus: u64) -> SparseUniPoly {
        SparseUniPoly::new(
            &self.field,
            self.terms.iter().map(|&(s, c)| (s % modulus, c)).collect(),
        )
    }

    /// `A^{(<p)}(b)` for p the characteristic, computed from the remainder of
    /// A modulo `(Z - b)^p = Z^p - b^p`: each `Z^s` becomes
    /// `b^{p * floor(s / p)} Z^{s mod p}`.
    pub fn mod_linear_power(&self, b: FieldElement) -> Result<HasseVector> {
        let f = &self.field;
        if b.is_zero() {
            return Err(Error::InvalidArgument(
                "reduction point must be nonzero".into(),
            ));
        }
        let p = f.characteristic();
        let mut rem = vec![f.zero(); p as usize];
        for &(s, c) in &self.terms {
            let lift = f.pow(b, p * (s / p));
            let slot = (s % p) as usize;
            rem[slot] = f.add(rem[slot], f.mul(c, lift));
        }
        let remainder = SparseUniPoly::new(
            f,
            rem.into_iter()
                .enumerate()
                .map(|(s, c)| (s as u64, c))
                .collect(),
        );
        Ok(remainder.hasse_at(b, p as usize))
    }
}

/// Multivariate polynomial `sum a_i X^{u_i}` with exponent entries below a
/// fixed bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMultiPoly {
    field: Field,
    arity: usize,
    exponent_bound: u64,
    terms: Vec<(Vec<u64>, FieldElement)>,
}

impl SparseMultiPoly {
    pub fn new(
        field: &Field,
        arity: usize,
        exponent_bound: u64,
        mut terms: Vec<(Vec<u64>, FieldElement)>,
    ) -> Result<Self> {
        for (u, _) in &terms {
            if u.len() != arity {
                return Err(Error::ShapeMismatch(format!(
                    "exponent vector of length {} in arity {arity}",
                    u.len()
                )));
            }
            if let Some(&bad) = u.iter().find(|&&x| x >= exponent_bound) {
                return Err(Error::InvalidArgument(format!(
                    "exponent {bad} outside [0, {exponent_bound})"
                )));
            }
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Vec<u64>, FieldElement)> = Vec::with_capacity(terms.len());
        for (u, c) in terms {
            match out.last_mut() {
                Some((last, acc)) if *last == u => *acc = field.add(*acc, c),
                _ => out.push((u, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Ok(SparseMultiPoly {
            field: field.clone(),
            arity,
            exponent_bound,
            terms: out,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn exponent_bound(&self) -> u64 {
        self.exponent_bound
    }

    pub fn terms(&self) -> &[(Vec<u64>, FieldElement)] {
        &self.terms
    }

    pub fn eval(&self, x: &[FieldElement]) -> Result<FieldElement> {
        Ok(self.hasse_eval(x, 1)?.values[0])
    }

    /// All Hasse derivatives of weight `< e` at `x`:
    /// `sum_i a_i prod_t C(u_i(t), j(t)) x_t^{u_i(t) - j(t)}`.
    pub fn hasse_eval(&self, x: &[FieldElement], e: usize) -> Result<HasseVector> {
        let f = &self.field;
        let p = f.characteristic();
        if e == 0 || e as u64 > p {
            return Err(Error::BadMultiplicity { e, p });
        }
        if x.len() != self.arity {
            return Err(Error::ShapeMismatch(format!(
                "point of length {} for arity {}",
                x.len(),
                self.arity
            )));
        }
        if x.iter().any(|&c| !f.contains(c)) {
            return Err(Error::FieldMismatch);
        }
        let indices = multi_indices(self.arity, e);
        let mut values = vec![f.zero(); indices.len()];
        // powers[t][r] = x_t^{u(t) - r} for r <= min(e - 1, u(t))
        let mut powers = vec![vec![f.zero(); e]; self.arity];
        for (u, a) in &self.terms {
            for (t, (&xt, &ut)) in x.iter().zip(u).enumerate() {
                let top = (e as u64 - 1).min(ut) as usize;
                powers[t][top] = f.pow(xt, ut - top as u64);
                for r in (0..top).rev() {
                    powers[t][r] = f.mul(powers[t][r + 1], xt);
                }
            }
            for (slot, j) in values.iter_mut().zip(&indices) {
                let mut acc = *a;
                for (t, (&jt, &ut)) in j.0.iter().zip(u).enumerate() {
                    if jt > ut {
                        acc = f.zero();
                        break;
                    }
                    if jt > 0 {
                        let binom = binomial_mod(ut, jt, p);
                        if binom == 0 {
                            acc = f.zero();
                            break;
                        }
                        acc = f.mul(acc, f.from_int(binom));
                    }
                    acc = f.mul(acc, powers[t][jt as usize]);
                }
                *slot = f.add(*slot, acc);
            }
        }
        HasseVector::new(self.arity, e, values)
    }
}

/// The monomial curve `Z -> (beta_1 Z^{v(1)}, ..., beta_k Z^{v(k)})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    field: Field,
    beta: Vec<FieldElement>,
    exponents: Vec<u64>,
}

impl Curve {
    /// Builds a curve whose `beta` coordinates all lie in H_m.
    pub fn new(roots: &RootOfUnity, beta: Vec<FieldElement>, exponents: Vec<u64>) -> Result<Self> {
        if beta.len() != exponents.len() {
            return Err(Error::ShapeMismatch(format!(
                "beta has {} coordinates, exponent vector {}",
                beta.len(),
                exponents.len()
            )));
        }
        if let Some(t) = beta.iter().position(|&b| !roots.contains(b)) {
            return Err(Error::InvalidArgument(format!(
                "beta coordinate {t} is not an m-th root of unity"
            )));
        }
        Ok(Curve {
            field: roots.field().clone(),
            beta,
            exponents,
        })
    }

    pub fn arity(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[FieldElement] {
        &self.beta
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn eval(&self, z: FieldElement) -> Vec<FieldElement> {
        let f = &self.field;
        self.beta
            .iter()
            .zip(&self.exponents)
            .map(|(&b, &v)| f.mul(b, f.pow(z, v)))
            .collect()
    }

    /// Per coordinate t, the orders `0..e` of `beta_t Z^{v(t)}` at `z`.
    pub fn coordinate_hasse(&self, z: FieldElement, e: usize) -> Vec<Vec<FieldElement>> {
        let f = &self.field;
        let p = f.characteristic();
        self.beta
            .iter()
            .zip(&self.exponents)
            .map(|(&b, &v)| {
                (0..e as u64)
                    .map(|i| {
                        if i > v {
                            return f.zero();
                        }
                        let binom = binomial_mod(v, i, p);
                        f.mul(f.mul(b, f.from_int(binom)), f.pow(z, v - i))
                    })
                    .collect()
            })
            .collect()
    }

    /// `F(C(Z))` as an explicit univariate polynomial.
    pub fn compose(&self, poly: &SparseMultiPoly) -> Result<SparseUniPoly> {
        if poly.arity() != self.arity() {
            return Err(Error::ShapeMismatch(format!(
                "polynomial arity {} vs curve arity {}",
                poly.arity(),
                self.arity()
            )));
        }
        let f = &self.field;
        let terms = poly
            .terms()
            .iter()
            .map(|(u, a)| {
                let mut coeff = *a;
                let mut exponent = 0u64;
                for ((&b, &v), &ut) in self.beta.iter().zip(&self.exponents).zip(u) {
                    coeff = f.mul(coeff, f.pow(b, ut));
                    exponent += v * ut;
                }
                (exponent, coeff)
            })
            .collect();
        Ok(SparseUniPoly::new(f, terms))
    }
}

// Product of two power series truncated to `len` coefficients.
fn series_mul(f: &Field, a: &[FieldElement], b: &[FieldElement], len: usize) -> Vec<FieldElement> {
    let mut out = vec![f.zero(); len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    out
}

/// Chain rule for `A = F o C` at `b`: given `F^{(<e)}(C(b))`, returns
/// `A^{(<e)}(b)` by expanding
/// `A(b + W) = sum_{wt(j) < e} F^{(j)}(C(b)) prod_t (C_t(b + W) - C_t(b))^{j(t)}`
/// modulo `W^e`.
pub fn compose_hasse(
    fvals: &HasseVector,
    curve: &Curve,
    b: FieldElement,
    e: usize,
) -> Result<HasseVector> {
    let f = &curve.field;
    if fvals.arity != curve.arity() || fvals.multiplicity != e {
        return Err(Error::ShapeMismatch(format!(
            "Hasse vector (arity {}, multiplicity {}) vs curve arity {} and multiplicity {e}",
            fvals.arity,
            fvals.multiplicity,
            curve.arity()
        )));
    }
    if fvals.values.len() != hasse_len(fvals.arity, e) {
        return Err(Error::ShapeMismatch(format!(
            "Hasse vector has {} values, expected {}",
            fvals.values.len(),
            hasse_len(fvals.arity, e)
        )));
    }
    // delta_t(W) = C_t(b + W) - C_t(b), a series with no constant term.
    let deltas: Vec<Vec<FieldElement>> = curve
        .coordinate_hasse(b, e)
        .into_iter()
        .map(|mut d| {
            d[0] = f.zero();
            d
        })
        .collect();
    // delta_powers[t][r] = delta_t^r mod W^e
    let mut unit = vec![f.zero(); e];
    unit[0] = f.one();
    let delta_powers: Vec<Vec<Vec<FieldElement>>> = deltas
        .iter()
        .map(|d| {
            let mut pows = Vec::with_capacity(e);
            pows.push(unit.clone());
            for r in 1..e {
                let next = series_mul(f, &pows[r - 1], d, e);
                pows.push(next);
            }
            pows
        })
        .collect();

    let mut out = vec![f.zero(); e];
    for (j, &fj) in multi_indices(curve.arity(), e).iter().zip(&fvals.values) {
        if fj.is_zero() {
            continue;
        }
        let mut series = unit.clone();
        for (t, &jt) in j.0.iter().enumerate() {
            if jt > 0 {
                series = series_mul(f, &series, &delta_powers[t][jt as usize], e);
            }
        }
        for (o, s) in out.iter_mut().zip(series) {
            *o = f.add(*o, f.mul(fj, s));
        }
    }
    Ok(HasseVector::univariate(out))
}
