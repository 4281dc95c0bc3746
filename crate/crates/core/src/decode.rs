//! S-decoding polynomials and 0-interpolating sets.
//!
//! A sparse decoding polynomial `P(Y) = sum_j e_j Y^{d_j}` with `P(1) = 1`
//! and `P(gamma^s) = 0` for `s in S \ {0}` is the same object as the point
//! set `B = {gamma^{d_j}}` with recovery functional `R|_B -> sum_j e_j R(b_j)`.
//! Lifting to multiplicity e over `Z_{mp}` keeps B and the functional and
//! inserts a per-point first stage `R_1(b) = sum_{i<e} R^{(i)}(b) (-b)^i`.

use std::fmt;
use std::path::Path;

use log::{debug, info};

use crate::algebra::{HasseVector, SparseUniPoly};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::field::{gcd, Field, FieldElement, RootOfUnity};

/// Fixtures shipped with the crate, in the format read by [`find_fixture`].
pub const BUILTIN_FIXTURES: &str = include_str!("../fixtures/decoders.txt");

/// `P(Y) = sum_j e_j Y^{d_j}` with exponents in `[0, m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodingPoly {
    m: u64,
    field: Field,
    terms: Vec<(u64, FieldElement)>,
}

/// Why a polynomial is not an S-decoding polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodingViolation {
    /// `P(1) != 1`.
    NotOneAtOne,
    /// `P(gamma^s) != 0` for this `s in S \ {0}`.
    NonzeroAt(u64),
}

impl fmt::Display for DecodingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodingViolation::NotOneAtOne => write!(f, "P(1) != 1"),
            DecodingViolation::NonzeroAt(s) => write!(f, "P(gamma^{s}) != 0"),
        }
    }
}

impl DecodingPoly {
    pub fn new(m: u64, field: &Field, terms: Vec<(u64, FieldElement)>) -> Result<Self> {
        if let Some(&(d, _)) = terms.iter().find(|(d, _)| *d >= m) {
            return Err(Error::InvalidArgument(format!(
                "exponent {d} outside [0, {m})"
            )));
        }
        if terms.iter().any(|(_, c)| !field.contains(*c)) {
            return Err(Error::FieldMismatch);
        }
        let canonical = SparseUniPoly::new(field, terms);
        Ok(DecodingPoly {
            m,
            field: field.clone(),
            terms: canonical.terms().to_vec(),
        })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn terms(&self) -> &[(u64, FieldElement)] {
        &self.terms
    }

    /// Number of monomials t.
    pub fn sparsity(&self) -> usize {
        self.terms.len()
    }

    pub fn as_poly(&self) -> SparseUniPoly {
        SparseUniPoly::new(&self.field, self.terms.clone())
    }

    /// Checks `P(1) = 1` and `P(gamma^s) = 0` for every nonzero `s` in
    /// `target`.
    pub fn validate(
        &self,
        roots: &RootOfUnity,
        target: &[u64],
    ) -> std::result::Result<(), DecodingViolation> {
        let poly = self.as_poly();
        if poly.eval(self.field.one()) != self.field.one() {
            return Err(DecodingViolation::NotOneAtOne);
        }
        for &s in target.iter().filter(|&&s| s % self.m != 0) {
            if !poly.eval(roots.pow(s)).is_zero() {
                return Err(DecodingViolation::NonzeroAt(s));
            }
        }
        Ok(())
    }

    /// One fixture line: `m=..., field=..., S=..., terms=d:hex,...`.
    pub fn to_fixture_line(&self, target: &[u64]) -> String {
        let mut kv = KeyValues::default();
        kv.push("m", self.m.to_string());
        kv.push("field", self.field.descriptor());
        kv.push("S", join_ints(target));
        let terms = self
            .terms
            .iter()
            .map(|&(d, c)| format!("{d}:{}", self.field.to_hex(c)))
            .collect::<Vec<_>>()
            .join(",");
        kv.push("terms", terms);
        kv.to_line()
    }

    /// Parses a fixture line, returning the polynomial and its target set.
    pub fn from_fixture_line(line: &str) -> Result<(Self, Vec<u64>)> {
        let kv = KeyValues::parse(line)?;
        kv.reject_unknown(&["m", "field", "S", "terms"])?;
        let m: u64 = kv.parse_value("m")?;
        let field = Field::from_descriptor(kv.require("field")?)?;
        let target = parse_ints(kv.require("S")?)?;
        let terms = kv
            .require("terms")?
            .split(',')
            .map(|t| {
                let (d, c) = t
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad term {t:?}")))?;
                let d = d
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad exponent {d:?}")))?;
                Ok((d, field.from_hex(c)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((DecodingPoly::new(m, &field, terms)?, target))
    }
}

fn join_ints(xs: &[u64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_ints(s: &str) -> Result<Vec<u64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad integer {t:?}")))
        })
        .collect()
}

/// Solves `sum_j x_j a[row][j] = rhs[row]` by Gaussian elimination, with
/// free variables set to zero. `None` if inconsistent. `matrix` is
/// row-major with `cols + 1` entries per row (the last is the right-hand
/// side) and is clobbered.
fn solve_in_place(
    field: &Field,
    matrix: &mut [FieldElement],
    rows: usize,
    cols: usize,
) -> Option<Vec<FieldElement>> {
    let width = cols + 1;
    let mut pivot_cols = Vec::with_capacity(cols);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows).find(|&i| !matrix[i * width + c].is_zero()) else {
            continue;
        };
        if pivot != r {
            for j in 0..width {
                matrix.swap(pivot * width + j, r * width + j);
            }
        }
        let inv = field.inv(matrix[r * width + c]).expect("pivot is nonzero");
        for j in c..width {
            matrix[r * width + j] = field.mul(matrix[r * width + j], inv);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = matrix[i * width + c];
            if factor.is_zero() {
                continue;
            }
            for j in c..width {
                let sub = field.mul(factor, matrix[r * width + j]);
                matrix[i * width + j] = field.sub(matrix[i * width + j], sub);
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if (r..rows).any(|i| !matrix[i * width + cols].is_zero()) {
        return None;
    }
    let mut x = vec![field.zero(); cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        x[c] = matrix[i * width + cols];
    }
    Some(x)
}

// Fills the |S| x (t + 1) system `sum_j e_j gamma^{s d_j} = [s = 0]`.
fn fill_system(
    roots: &RootOfUnity,
    target: &[u64],
    exponents: &[u64],
    out: &mut Vec<FieldElement>,
) {
    let field = roots.field();
    out.clear();
    let m = roots.order();
    for &s in target {
        for &d in exponents {
            out.push(roots.pow((s % m) * (d % m)));
        }
        out.push(if s % m == 0 {
            field.one()
        } else {
            field.zero()
        });
    }
}

/// The Lagrange polynomial vanishing on `gamma^s`, `s in S \ {0}`, scaled so
/// `P(1) = 1`. It has at most |S| monomials.
pub fn lagrange_decoding(roots: &RootOfUnity, target: &[u64]) -> Result<DecodingPoly> {
    let field = roots.field();
    let mut poly = SparseUniPoly::monomial(field, 0, field.one());
    for &s in target.iter().filter(|&&s| s % roots.order() != 0) {
        let root = roots.pow(s);
        let denom = field.inv(field.sub(field.one(), root))?;
        let factor = SparseUniPoly::new(
            field,
            vec![(1, denom), (0, field.neg(field.mul(root, denom)))],
        );
        poly = poly.mul(&factor);
    }
    DecodingPoly::new(roots.order(), field, poly.terms().to_vec())
}

/// Finds the sparsest decoding polynomial with at most `t_max` terms.
///
/// Exponent sets `{d_1 < ... < d_t}` are enumerated for `t = 1, 2, ...` in
/// lexicographic order and the first solvable set wins. `budget` bounds the
/// number of exponent sets examined.
pub fn decoding_search(
    roots: &RootOfUnity,
    target: &[u64],
    t_max: usize,
    budget: u64,
) -> Result<Option<DecodingPoly>> {
    let field = roots.field();
    let m = roots.order();
    let mut examined = 0u64;
    let mut system = Vec::new();
    for t in 1..=t_max.min(m as usize) {
        debug!("decoding search: m={m}, t={t}");
        let mut combo: Vec<u64> = (0..t as u64).collect();
        loop {
            examined += 1;
            if examined > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            fill_system(roots, target, &combo, &mut system);
            if let Some(coeffs) = solve_in_place(field, &mut system, target.len(), t) {
                if coeffs.iter().all(|c| !c.is_zero()) {
                    let terms = combo.iter().copied().zip(coeffs).collect();
                    let poly = DecodingPoly::new(m, field, terms)?;
                    info!(
                        "decoding search: found {t}-term polynomial for m={m} after {examined} sets"
                    );
                    return Ok(Some(poly));
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances to the next t-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [u64], n: u64) -> bool {
    let t = combo.len();
    let mut i = t;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (t - i) as u64 {
            combo[i] += 1;
            for j in i + 1..t {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Looks up a fixture for `(m, target, field)` in `path`.
pub fn load_fixture(
    path: &Path,
    roots: &RootOfUnity,
    target: &[u64],
) -> Result<Option<DecodingPoly>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    find_fixture(&text, roots, target)
}

/// Looks up and validates a fixture for `(m, target, field)` in fixture text.
pub fn find_fixture(
    text: &str,
    roots: &RootOfUnity,
    target: &[u64],
) -> Result<Option<DecodingPoly>> {
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (poly, set) = DecodingPoly::from_fixture_line(line)?;
        if poly.m() == roots.order() && set == target && poly.field() == roots.field() {
            if let Err(v) = poly.validate(roots, target) {
                return Err(Error::Parse(format!(
                    "fixture for m={} is invalid: {v}",
                    poly.m()
                )));
            }
            return Ok(Some(poly));
        }
    }
    Ok(None)
}

/// [`decoding_search`] behind a fixture file: a matching valid fixture is
/// returned directly, otherwise the search result is appended to the file.
pub fn decoding_search_cached(
    roots: &RootOfUnity,
    target: &[u64],
    t_max: usize,
    budget: u64,
    path: &Path,
) -> Result<Option<DecodingPoly>> {
    if let Some(poly) = load_fixture(path, roots, target)? {
        if poly.sparsity() <= t_max {
            return Ok(Some(poly));
        }
    }
    let found = decoding_search(roots, target, t_max, budget)?;
    if let Some(poly) = &found {
        use std::io::Write;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        writeln!(file, "{}", poly.to_fixture_line(target))?;
    }
    Ok(found)
}

/// A point set `B = {gamma^{d_j}}` in H_m with its recovery functional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpSet {
    field: Field,
    base_modulus: u64,
    exponents: Vec<u64>,
    points: Vec<FieldElement>,
    functional: Vec<FieldElement>,
    multiplicity: usize,
    target_modulus: u64,
    target: Vec<u64>,
}

impl InterpSet {
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// The m with `B` inside H_m.
    pub fn base_modulus(&self) -> u64 {
        self.base_modulus
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }

    pub fn functional(&self) -> &[FieldElement] {
        &self.functional
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    /// Modulus of the target set (m before lifting, M = mp after).
    pub fn target_modulus(&self) -> u64 {
        self.target_modulus
    }

    pub fn target(&self) -> &[u64] {
        &self.target
    }

    /// |B|, the number of servers.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// B and functional read off a decoding polynomial, multiplicity 1.
pub fn interp_from_decoding(poly: &DecodingPoly, roots: &RootOfUnity, target: &[u64]) -> InterpSet {
    InterpSet {
        field: poly.field().clone(),
        base_modulus: poly.m(),
        exponents: poly.terms().iter().map(|&(d, _)| d).collect(),
        points: poly.terms().iter().map(|&(d, _)| roots.pow(d)).collect(),
        functional: poly.terms().iter().map(|&(_, c)| c).collect(),
        multiplicity: 1,
        target_modulus: poly.m(),
        target: target.to_vec(),
    }
}

/// Recovers a decoding polynomial from point exponents by solving `eW = w_0`
/// with `W[j][s] = gamma^{s d_j}`. `None` when `w_0` is outside the row span.
pub fn decoding_from_interp(
    exponents: &[u64],
    target: &[u64],
    roots: &RootOfUnity,
) -> Option<DecodingPoly> {
    let field = roots.field();
    let m = roots.order();
    let mut exps: Vec<u64> = exponents.iter().map(|&d| d % m).collect();
    exps.sort_unstable();
    exps.dedup();
    let mut system = Vec::new();
    fill_system(roots, target, &exps, &mut system);
    let coeffs = solve_in_place(field, &mut system, target.len(), exps.len())?;
    DecodingPoly::new(m, field, exps.into_iter().zip(coeffs).collect()).ok()
}

/// Lifts a multiplicity-1 set for `S_m` to multiplicity `e` for
/// `S_M`, `M = mp`, provided `0 in S_M` and every `s in S_M` has
/// `s mod m in S_m` and `s mod p < e`.
pub fn lift_multiplicity(
    set: &InterpSet,
    p: u64,
    e: usize,
    big_target: &[u64],
) -> Result<InterpSet> {
    let m = set.base_modulus;
    if set.multiplicity != 1 || set.target_modulus != m {
        return Err(Error::InvalidArgument(
            "only multiplicity-1 sets over Z_m can be lifted".into(),
        ));
    }
    let g = gcd(m, p);
    if g != 1 {
        return Err(Error::NotCoprime { a: m, b: p, gcd: g });
    }
    if set.field.characteristic() != p {
        return Err(Error::InvalidArgument(format!(
            "field characteristic {} differs from p = {p}",
            set.field.characteristic()
        )));
    }
    if e == 0 || e as u64 > p {
        return Err(Error::BadMultiplicity { e, p });
    }
    let big = m * p;
    if !big_target.contains(&0) {
        return Err(Error::LiftHypothesis {
            residue: 0,
            reason: "0 must belong to the target set".into(),
        });
    }
    for &s in big_target {
        if s >= big {
            return Err(Error::LiftHypothesis {
                residue: s,
                reason: format!("outside Z_{big}"),
            });
        }
        if !set.target.contains(&(s % m)) {
            return Err(Error::LiftHypothesis {
                residue: s,
                reason: format!("{s} mod {m} = {} is not in S_m", s % m),
            });
        }
        if s % p >= e as u64 {
            return Err(Error::LiftHypothesis {
                residue: s,
                reason: format!("{s} mod {p} = {} is not below e = {e}", s % p),
            });
        }
    }
    let mut target = big_target.to_vec();
    target.sort_unstable();
    target.dedup();
    Ok(InterpSet {
        multiplicity: e,
        target_modulus: big,
        target,
        ..set.clone()
    })
}

/// Recovers `R(0)` from order-e evaluations of R at the points of B.
///
/// Stage 1 turns each `R^{(<e)}(b)` into `R_1(b) = sum_{i<e} R^{(i)}(b) (-b)^i`,
/// the constant term of `R mod (Z - b)^p`; stage 2 applies the functional.
/// With multiplicity 1 this is just `sum_j e_j R(b_j)`.
pub fn recover_constant(set: &InterpSet, evals: &[HasseVector]) -> Result<FieldElement> {
    let f = &set.field;
    if evals.len() != set.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} evaluation vectors for {} points",
            evals.len(),
            set.len()
        )));
    }
    let e = set.multiplicity;
    let mut c0 = f.zero();
    for ((hv, &b), &coef) in evals.iter().zip(&set.points).zip(&set.functional) {
        if hv.arity != 1 || hv.values.len() != e {
            return Err(Error::ShapeMismatch(format!(
                "expected a univariate vector of length {e}, got arity {} length {}",
                hv.arity,
                hv.values.len()
            )));
        }
        let minus_b = f.neg(b);
        let mut power = f.one();
        let mut r1 = f.zero();
        for &value in &hv.values {
            r1 = f.add(r1, f.mul(value, power));
            power = f.mul(power, minus_b);
        }
        c0 = f.add(c0, f.mul(coef, r1));
    }
    Ok(c0)
}

/// Number of monomials in the best known S-decoding polynomials for m with
/// r prime factors (characteristic 2).
pub fn sparsity_bound(r: u32) -> Result<u128> {
    let overflow = || Error::InvalidArgument(format!("sparsity for r = {r} overflows u128"));
    match r {
        0 => Err(Error::InvalidArgument("r must be >= 1".into())),
        1 => Ok(2),
        r if r <= 102 && r % 2 == 0 => Ok(3u128.pow(r / 2)),
        r if r <= 103 => Ok(8 * 3u128.pow((r - 3) / 2)),
        // (3/4)^51 * 2^r = 3^51 * 2^(r - 102), an exact integer
        r => 3u128
            .pow(51)
            .checked_mul(1u128.checked_shl(r - 102).ok_or_else(overflow)?)
            .filter(|_| r - 102 < 128)
            .ok_or_else(overflow),
    }
}
