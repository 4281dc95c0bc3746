//! Canonical sets, the Chinese remainder map and S-matching vector families.
//!
//! Vectors are stored as integers in `[0, M)`; inner products are taken over
//! the integers and reduced mod M only when compared against the target set.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{gcd, prime_factors};

/// Largest modulus [`canonical_set`] will enumerate.
pub const MAX_CANONICAL_MODULUS: u64 = 10_000_000;

/// The idempotents `{x in Z_m : x^2 = x}`, sorted, always containing 0 and 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalSet {
    modulus: u64,
    elements: Vec<u64>,
}

impl CanonicalSet {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&(x % self.modulus)).is_ok()
    }

    /// Elements other than 0.
    pub fn nonzero(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().copied().filter(|&s| s != 0)
    }
}

pub fn canonical_set(m: u64) -> Result<CanonicalSet> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "canonical set needs m >= 2, got {m}"
        )));
    }
    if m > MAX_CANONICAL_MODULUS {
        return Err(Error::InvalidArgument(format!(
            "modulus {m} exceeds {MAX_CANONICAL_MODULUS}"
        )));
    }
    let elements = (0..m).filter(|&x| x * x % m == x).collect();
    Ok(CanonicalSet {
        modulus: m,
        elements,
    })
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// The unique `x mod a*b` with `x = ra mod a` and `x = rb mod b`.
pub fn crt(a: u64, b: u64, ra: u64, rb: u64) -> Result<u64> {
    let g = gcd(a, b);
    if g != 1 {
        return Err(Error::NotCoprime { a, b, gcd: g });
    }
    let n = a as u128 * b as u128;
    let inv_a = mod_inverse(a % b, b).unwrap_or(0) as u128;
    // x = ra + a * ((rb - ra) * a^{-1} mod b)
    let ra = (ra % a) as u128;
    let rb = (rb % b) as u128;
    let diff = (rb + b as u128 - ra % b as u128) % b as u128;
    let x = ra + a as u128 * (diff * inv_a % b as u128);
    Ok((x % n) as u64)
}

/// Inverse of [`crt`]: `(x mod a, x mod b)`.
pub fn crt_split(a: u64, b: u64, x: u64) -> (u64, u64) {
    (x % a, x % b)
}

/// First pair of indices at which an S-matching vector family fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvfViolation {
    pub i: usize,
    pub j: usize,
    /// `<u_i, v_j> mod M`.
    pub inner_product: u64,
}

impl fmt::Display for MvfViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.i == self.j {
            write!(
                f,
                "<u_{i}, v_{i}> = {} (must be 0)",
                self.inner_product,
                i = self.i
            )
        } else {
            write!(
                f,
                "<u_{}, v_{}> = {} (must lie in S \\ {{0}})",
                self.i, self.j, self.inner_product
            )
        }
    }
}

/// Pairs `(u_i, v_i)` over `Z_M^k` together with the target set S.
///
/// [`MvFamily::new`] only checks shapes; use [`MvFamily::validate`] for the
/// matching property. Families returned by the constructors in this module
/// are always validated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvFamily {
    modulus: u64,
    dim: usize,
    u: Vec<Vec<u64>>,
    v: Vec<Vec<u64>>,
    target: Vec<u64>,
}

impl MvFamily {
    pub fn new(
        modulus: u64,
        dim: usize,
        target: Vec<u64>,
        u: Vec<Vec<u64>>,
        v: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::InvalidArgument(format!("modulus {modulus} < 2")));
        }
        if u.len() != v.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} u-vectors but {} v-vectors",
                u.len(),
                v.len()
            )));
        }
        for w in u.iter().chain(&v) {
            if w.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "vector of length {} in dimension {dim}",
                    w.len()
                )));
            }
            if w.iter().any(|&x| x >= modulus) {
                return Err(Error::InvalidArgument(format!(
                    "vector entry outside [0, {modulus})"
                )));
            }
        }
        let mut target = target;
        target.sort_unstable();
        target.dedup();
        if target.first() != Some(&0) || target.iter().any(|&s| s >= modulus) {
            return Err(Error::InvalidArgument(
                "target set must contain 0 and lie in [0, M)".into(),
            ));
        }
        Ok(MvFamily {
            modulus,
            dim,
            u,
            v,
            target,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Dimension k.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Size n.
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self, i: usize) -> &[u64] {
        &self.u[i]
    }

    pub fn v(&self, i: usize) -> &[u64] {
        &self.v[i]
    }

    pub fn target(&self) -> &[u64] {
        &self.target
    }

    /// `<u_i, v_j> mod M`.
    pub fn inner(&self, i: usize, j: usize) -> u64 {
        inner_mod(&self.u[i], &self.v[j], self.modulus)
    }

    /// Checks both matching conditions over all `(i, j)` in row-major order.
    pub fn validate(&self) -> std::result::Result<(), MvfViolation> {
        for i in 0..self.len() {
            for j in 0..self.len() {
                let ip = self.inner(i, j);
                let ok = if i == j {
                    ip == 0
                } else {
                    ip != 0 && self.target.binary_search(&ip).is_ok()
                };
                if !ok {
                    return Err(MvfViolation {
                        i,
                        j,
                        inner_product: ip,
                    });
                }
            }
        }
        Ok(())
    }

    /// Text form: header `M k n S=s1 s2 ...`, then one `u | v` line per pair.
    pub fn to_text(&self) -> String {
        let join = |w: &[u64]| {
            w.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = format!(
            "{} {} {} S={}\n",
            self.modulus,
            self.dim,
            self.len(),
            join(&self.target)
        );
        for (u, v) in self.u.iter().zip(&self.v) {
            out.push_str(&format!("{} | {}\n", join(u), join(v)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty family file".into()))?;
        let (dims, set) = header
            .split_once("S=")
            .ok_or_else(|| Error::Parse(format!("bad family header {header:?}")))?;
        let dims = parse_ints(dims)?;
        if dims.len() != 3 {
            return Err(Error::Parse(format!("bad family header {header:?}")));
        }
        let (modulus, dim, n) = (dims[0], dims[1] as usize, dims[2] as usize);
        let target = parse_ints(set)?;
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for line in lines {
            let (a, b) = line
                .split_once('|')
                .ok_or_else(|| Error::Parse(format!("bad family line {line:?}")))?;
            u.push(parse_ints(a)?);
            v.push(parse_ints(b)?);
        }
        if u.len() != n {
            return Err(Error::Parse(format!(
                "header announces {n} pairs, found {}",
                u.len()
            )));
        }
        MvFamily::new(modulus, dim, target, u, v)
    }
}

fn parse_ints(s: &str) -> Result<Vec<u64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad integer {t:?}")))
        })
        .collect()
}

fn inner_mod(u: &[u64], v: &[u64], modulus: u64) -> u64 {
    let sum: u128 = u.iter().zip(v).map(|(&a, &b)| a as u128 * b as u128).sum();
    (sum % modulus as u128) as u64
}

/// Depth-first search for an S-matching family of size `n` in `Z_M^k`.
///
/// Pairs are tried in lexicographic order of `(u, v)` and each family is
/// built with strictly increasing pairs, so the first hit is the
/// lexicographically smallest family. `Ok(None)` means no family exists;
/// `budget` caps both `M^k` and the number of candidate pairs examined.
pub fn mvf_bruteforce(
    modulus: u64,
    target: &[u64],
    dim: usize,
    n: usize,
    budget: u64,
) -> Result<Option<MvFamily>> {
    if modulus < 2 || dim == 0 {
        return Err(Error::InvalidArgument("need M >= 2 and k >= 1".into()));
    }
    let space = modulus
        .checked_pow(dim as u32)
        .filter(|&s| s <= budget)
        .ok_or(Error::BudgetExceeded { budget })?;
    let mut sorted_target = target.to_vec();
    sorted_target.sort_unstable();
    sorted_target.dedup();
    if n == 0 {
        return MvFamily::new(modulus, dim, sorted_target, Vec::new(), Vec::new()).map(Some);
    }

    let vector = |mut index: u64| {
        let mut w = vec![0u64; dim];
        for slot in w.iter_mut().rev() {
            *slot = index % modulus;
            index /= modulus;
        }
        w
    };
    let allowed = |x: u64| x != 0 && sorted_target.binary_search(&x).is_ok();

    struct Search<'a> {
        space: u64,
        n: usize,
        steps: u64,
        budget: u64,
        modulus: u64,
        chosen: Vec<(Vec<u64>, Vec<u64>)>,
        vector: &'a dyn Fn(u64) -> Vec<u64>,
        allowed: &'a dyn Fn(u64) -> bool,
    }

    impl Search<'_> {
        fn run(&mut self, start: u64) -> Result<bool> {
            if self.chosen.len() == self.n {
                return Ok(true);
            }
            let total = self.space * self.space;
            for pair in start..total {
                self.steps += 1;
                if self.steps > self.budget {
                    return Err(Error::BudgetExceeded {
                        budget: self.budget,
                    });
                }
                let (ui, vi) = (pair / self.space, pair % self.space);
                // with two or more pairs a zero vector forces a zero cross product
                if self.n > 1 && (ui == 0 || vi == 0) {
                    continue;
                }
                let u = (self.vector)(ui);
                let v = (self.vector)(vi);
                if inner_mod(&u, &v, self.modulus) != 0 {
                    continue;
                }
                let fits = self.chosen.iter().all(|(cu, cv)| {
                    (self.allowed)(inner_mod(cu, &v, self.modulus))
                        && (self.allowed)(inner_mod(&u, cv, self.modulus))
                });
                if !fits {
                    continue;
                }
                self.chosen.push((u, v));
                if self.run(pair + 1)? {
                    return Ok(true);
                }
                self.chosen.pop();
            }
            Ok(false)
        }
    }

    let mut search = Search {
        space,
        n,
        steps: 0,
        budget,
        modulus,
        chosen: Vec::with_capacity(n),
        vector: &vector,
        allowed: &allowed,
    };
    if !search.run(0)? {
        return Ok(None);
    }
    let (u, v) = search.chosen.into_iter().unzip();
    let family = MvFamily::new(modulus, dim, sorted_target, u, v)?;
    debug_assert!(family.validate().is_ok());
    Ok(Some(family))
}

/// Parameters of the symmetric-polynomial family built by
/// [`mvf_grolmusz_with_weight`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrolmuszShape {
    pub modulus: u64,
    pub h: usize,
    pub weight: usize,
    /// `q_i = p_i^{e_i}` with `prod q_i > weight`.
    pub prime_powers: Vec<u64>,
    /// `a_d` for `d = 0..=weight`: the Newton coefficients of the target
    /// function `phi(w) = sum_d a_d C(w, d)`.
    pub coefficients: Vec<u64>,
    /// Dimension k.
    pub dim: usize,
    /// Size n.
    pub size: usize,
}

pub const MAX_GROLMUSZ_H: usize = 24;

fn squarefree_primes(m: u64) -> Result<Vec<u64>> {
    let primes = prime_factors(m);
    let squarefree = primes.iter().product::<u64>() == m;
    if !squarefree || primes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{m} is not a product of at least two distinct primes"
        )));
    }
    Ok(primes)
}

/// Computes the family shape without materializing the vectors.
pub fn grolmusz_shape(m: u64, h: usize, weight: usize) -> Result<GrolmuszShape> {
    let primes = squarefree_primes(m)?;
    if weight == 0 || weight > h || h > MAX_GROLMUSZ_H {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= weight <= h <= {MAX_GROLMUSZ_H}, got weight {weight}, h {h}"
        )));
    }
    // Raise the smallest prime power until the product exceeds the weight,
    // so phi(w) = 0 only at w = 0 on [0, weight].
    let mut powers = primes.clone();
    while powers.iter().product::<u64>() <= weight as u64 {
        let i = (0..powers.len()).min_by_key(|&i| powers[i]).unwrap();
        powers[i] *= primes[i];
    }
    // phi(w) mod p_i = [q_i does not divide w], combined by CRT; every value
    // is an idempotent of Z_m.
    let phi: Vec<u64> = (0..=weight as u64)
        .map(|w| {
            primes
                .iter()
                .zip(&powers)
                .fold((1u64, 0u64), |(modulus, acc), (&p, &q)| {
                    let residue = u64::from(w % q != 0);
                    let x = crt(modulus, p, acc, residue).expect("distinct primes");
                    (modulus * p, x)
                })
                .1
        })
        .collect();
    // binomials mod m via Pascal's triangle
    let mut pascal = vec![vec![1u64]];
    for d in 1..=weight {
        let prev = &pascal[d - 1];
        let mut row = vec![1u64; d + 1];
        for j in 1..d {
            row[j] = (prev[j - 1] + prev[j]) % m;
        }
        pascal.push(row);
    }
    let coefficients: Vec<u64> = (0..=weight)
        .map(|d| {
            let mut acc: i128 = 0;
            for j in 0..=d {
                let term = pascal[d][j] as i128 * phi[j] as i128;
                if (d - j) % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc.rem_euclid(m as i128) as u64
        })
        .collect();
    let dim = (1..=weight)
        .filter(|&d| coefficients[d] != 0)
        .map(|d| binomial_usize(h, d))
        .sum();
    Ok(GrolmuszShape {
        modulus: m,
        h,
        weight,
        prime_powers: powers,
        coefficients,
        dim,
        size: binomial_usize(h, weight),
    })
}

fn binomial_usize(n: usize, k: usize) -> usize {
    crate::algebra::binomial(n as u64, k as u64) as usize
}

/// All `size`-subsets of `0..h` as bitmasks, in lexicographic order of their
/// sorted element lists.
fn combinations(h: usize, size: usize) -> Vec<u32> {
    fn go(start: usize, h: usize, left: usize, mask: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        for i in start..=h - left {
            go(i + 1, h, left - 1, mask | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if size <= h {
        go(0, h, size, 0, &mut out);
    }
    out
}

/// Symmetric-polynomial matching vector family over `Z_m` for squarefree m
/// with at least two prime factors, indexed by the `weight`-subsets of
/// `[h]`.
///
/// For subsets y, z the inner product equals `phi(|y \ z|)`, where
/// `phi(w) mod p_i = [q_i does not divide w]`; phi vanishes only at 0 on the
/// relevant range and takes idempotent values, so the family matches the
/// canonical set of m. Coordinates are the subsets T with `|T| = d` and
/// `a_d != 0`; `u(y)_T = a_d [T in y]`, `v(z)_T = [T disjoint from z]`.
pub fn mvf_grolmusz_with_weight(m: u64, h: usize, weight: usize) -> Result<MvFamily> {
    let shape = grolmusz_shape(m, h, weight)?;
    let coords: Vec<(u32, u64)> = (1..=weight)
        .filter(|&d| shape.coefficients[d] != 0)
        .flat_map(|d| {
            let a = shape.coefficients[d];
            combinations(h, d).into_iter().map(move |t| (t, a))
        })
        .collect();
    let members = combinations(h, weight);
    let u = members
        .iter()
        .map(|&y| {
            coords
                .iter()
                .map(|&(t, a)| if t & y == t { a } else { 0 })
                .collect()
        })
        .collect();
    let v = members
        .iter()
        .map(|&z| coords.iter().map(|&(t, _)| u64::from(t & z == 0)).collect())
        .collect();
    let target = canonical_set(m)?.elements().to_vec();
    let family = MvFamily::new(m, coords.len(), target, u, v)?;
    if let Err(violation) = family.validate() {
        return Err(Error::Protocol(format!(
            "symmetric family for m={m}, h={h}, weight={weight} is invalid: {violation}"
        )));
    }
    Ok(family)
}

/// [`mvf_grolmusz_with_weight`] with weight `max(1, h / 2)`, so the size
/// `C(h, weight)` grows strictly with h.
pub fn mvf_grolmusz(m: u64, h: usize) -> Result<MvFamily> {
    mvf_grolmusz_with_weight(m, h, (h / 2).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sets() {
        assert_eq!(canonical_set(7).unwrap().elements(), &[0, 1]);
        assert_eq!(canonical_set(6).unwrap().elements(), &[0, 1, 3, 4]);
        assert_eq!(canonical_set(511).unwrap().elements(), &[0, 1, 147, 365]);
        assert_eq!(canonical_set(1022).unwrap().len(), 8);
        assert!(canonical_set(1).is_err());
    }

    #[test]
    fn crt_examples() {
        assert_eq!(crt(3, 2, 1, 0).unwrap(), 4);
        assert_eq!(crt(3, 2, 0, 0).unwrap(), 0);
        let mut image: Vec<u64> = [0, 1]
            .iter()
            .flat_map(|&a| [0, 1].iter().map(move |&b| crt(3, 2, a, b).unwrap()))
            .collect();
        image.sort();
        assert_eq!(image, canonical_set(6).unwrap().elements());
        assert!(matches!(
            crt(4, 2, 1, 1),
            Err(Error::NotCoprime { gcd: 2, .. })
        ));
        for x in 0..1022 {
            let (a, b) = crt_split(511, 2, x);
            assert_eq!(crt(511, 2, a, b).unwrap(), x);
        }
    }

    fn toy_family() -> MvFamily {
        MvFamily::new(
            6,
            2,
            vec![0, 1, 3, 4],
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(toy_family().validate(), Ok(()));
        let single = MvFamily::new(6, 1, vec![0], vec![vec![0]], vec![vec![0]]).unwrap();
        assert_eq!(single.validate(), Ok(()));

        let broken = MvFamily::new(
            6,
            2,
            vec![0, 1, 3, 4],
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![0, 1], vec![0, 1]],
        )
        .unwrap();
        let violation = broken.validate().unwrap_err();
        assert_eq!(
            (violation.i, violation.j, violation.inner_product),
            (0, 1, 0)
        );
    }

    #[test]
    fn shape_checks() {
        assert!(MvFamily::new(6, 2, vec![0], vec![vec![6, 0]], vec![vec![0, 0]]).is_err());
        assert!(MvFamily::new(6, 2, vec![1], vec![vec![0, 0]], vec![vec![0, 0]]).is_err());
        assert!(MvFamily::new(6, 2, vec![0], vec![vec![0]], vec![vec![0, 0]]).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let s = [0, 1, 3, 4];
        let fam = mvf_bruteforce(6, &s, 2, 2, 1_000_000).unwrap().unwrap();
        assert!(fam.validate().is_ok());
        assert_eq!(fam.len(), 2);

        let one = mvf_bruteforce(6, &s, 3, 1, 1_000_000).unwrap().unwrap();
        assert_eq!(one.u(0), &[0, 0, 0]);
        assert_eq!(one.v(0), &[0, 0, 0]);

        // k = 1: the search decides existence; (2, 3), (3, 2) works.
        let k1 = mvf_bruteforce(6, &s, 1, 2, 1_000_000).unwrap().unwrap();
        assert!(k1.validate().is_ok());
        assert!(matches!(
            mvf_bruteforce(6, &s, 8, 2, 1_000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn bruteforce_not_found_is_reproducible() {
        // Over Z_2 with S = {0, 1} and k = 1 no two pairs match.
        assert_eq!(mvf_bruteforce(2, &[0, 1], 1, 2, 1_000).unwrap(), None);
        assert_eq!(mvf_bruteforce(2, &[0, 1], 1, 2, 1_000).unwrap(), None);
        assert!(mvf_bruteforce(2, &[0, 1], 1, 1, 1_000).unwrap().is_some());
    }

    #[test]
    fn grolmusz_families() {
        let mut last = 0;
        for h in 1..=8 {
            let fam = mvf_grolmusz(6, h).unwrap();
            assert!(fam.validate().is_ok());
            assert!(fam.len() > last, "h={h}");
            last = fam.len();
        }
        assert!(mvf_grolmusz(6, 2).unwrap().len() >= 2);
        let big = mvf_grolmusz(6, 8).unwrap();
        assert!(big.len() > big.dim(), "n={} k={}", big.len(), big.dim());
        assert!(mvf_grolmusz(4, 3).is_err());
        assert!(mvf_grolmusz(7, 3).is_err());
    }

    #[test]
    fn grolmusz_shape_matches_family() {
        for (m, h, w) in [(6, 6, 3), (6, 8, 4), (1022, 4, 2), (1022, 8, 1), (30, 6, 3)] {
            let shape = grolmusz_shape(m, h, w).unwrap();
            let fam = mvf_grolmusz_with_weight(m, h, w).unwrap();
            assert_eq!((shape.dim, shape.size), (fam.dim(), fam.len()));
            assert_eq!(shape.coefficients[0], 0);
        }
        // The degree stays below max(q_i) even as the weight grows.
        let shape = grolmusz_shape(6, 8, 4).unwrap();
        assert_eq!(shape.coefficients[3..], [0, 0]);
    }

    #[test]
    fn text_round_trip() {
        let fam = mvf_grolmusz(6, 5).unwrap();
        assert_eq!(MvFamily::from_text(&fam.to_text()).unwrap(), fam);
        assert!(MvFamily::from_text("6 2 3 S=0 1\n1 0 | 0 1\n").is_err());
        assert!(MvFamily::from_text("").is_err());
    }
}
