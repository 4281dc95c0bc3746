//! Shared instances and slow-but-obvious reference computations.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use mvpir::algebra::multi_indices;
use mvpir::decode::DecodingPoly;
use mvpir::mvf::{mvf_grolmusz_with_weight, MvFamily};
use mvpir::{primitive_root_of_unity, DecoderSource, Field, FieldElement, MvfSource, PirParams};

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/decoders.txt")
}

/// m=3, p=2, GF(4), e=2 with a brute-force family of size 2 in Z_6^2.
pub fn toy() -> PirParams {
    PirParams::build(
        &Field::gf4(),
        3,
        2,
        MvfSource::BruteForce {
            dim: 2,
            size: 2,
            budget: 1_000_000,
        },
        DecoderSource::Search {
            t_max: 2,
            budget: 1_000,
        },
    )
    .unwrap()
}

/// The toy instance with u = ((1,0),(0,1)) and v = ((0,1),(1,0)).
pub fn toy_explicit() -> PirParams {
    let f = Field::gf4();
    let g = primitive_root_of_unity(&f, 3).unwrap().gamma();
    let decoder = DecodingPoly::new(3, &f, vec![(0, f.mul(g, g)), (1, g)]).unwrap();
    let family = MvFamily::new(
        6,
        2,
        vec![0, 1, 3, 4],
        vec![vec![1, 0], vec![0, 1]],
        vec![vec![0, 1], vec![1, 0]],
    )
    .unwrap();
    PirParams::build(
        &f,
        3,
        2,
        MvfSource::Family(family),
        DecoderSource::Poly(decoder),
    )
    .unwrap()
}

/// m=511 over GF(512), the cached 3-term decoder, and the symmetric family
/// over Z_1022 with the given size parameters.
pub fn gf512(h: usize, weight: usize, e: usize) -> PirParams {
    PirParams::build(
        &Field::gf512(),
        511,
        e,
        MvfSource::Family(mvf_grolmusz_with_weight(1022, h, weight).unwrap()),
        DecoderSource::Fixture(fixture_path()),
    )
    .unwrap()
}

/// m=4 over GF(9) with e = p = 3: M = 12, S_M = {0, 1, 4, 9}.
pub fn gf9_e3() -> PirParams {
    PirParams::build(
        &Field::gf9(),
        4,
        3,
        MvfSource::BruteForce {
            dim: 2,
            size: 2,
            budget: 1_000_000,
        },
        DecoderSource::Search {
            t_max: 2,
            budget: 1_000,
        },
    )
    .unwrap()
}

/// Every element of a small field.
pub fn all_elements(f: &Field) -> Vec<FieldElement> {
    (0..f.order()).map(|i| f.from_index(i).unwrap()).collect()
}

/// Dense polynomial, coefficient i of Z^i.
pub type Dense = Vec<FieldElement>;

pub fn dense_trim(f: &Field, mut a: Dense) -> Dense {
    while a.len() > 1 && a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    if a.is_empty() {
        a.push(f.zero());
    }
    a
}

pub fn dense_mul(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Dense {
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    dense_trim(f, out)
}

pub fn dense_from_sparse(f: &Field, terms: &[(u64, FieldElement)]) -> Dense {
    let len = terms
        .iter()
        .map(|&(d, _)| d as usize + 1)
        .max()
        .unwrap_or(1);
    let mut out = vec![f.zero(); len];
    for &(d, c) in terms {
        out[d as usize] = f.add(out[d as usize], c);
    }
    dense_trim(f, out)
}

/// Coefficients of `A(b + Y)` by Horner's rule in `Y`, without binomials.
pub fn taylor_shift(f: &Field, a: &[FieldElement], b: FieldElement) -> Dense {
    let mut acc = vec![f.zero()];
    for &c in a.iter().rev() {
        acc = dense_mul(f, &acc, &[b, f.one()]);
        acc[0] = f.add(acc[0], c);
    }
    acc.resize(a.len().max(1), f.zero());
    acc
}

/// Truncated multivariate series keyed by exponent vectors.
pub type Series = HashMap<Vec<u64>, FieldElement>;

fn series_mul(f: &Field, a: &Series, b: &Series, e: usize) -> Series {
    let mut out = Series::new();
    for (ka, &va) in a {
        for (kb, &vb) in b {
            let k: Vec<u64> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            if k.iter().sum::<u64>() >= e as u64 {
                continue;
            }
            let slot = out.entry(k).or_insert(f.zero());
            *slot = f.add(*slot, f.mul(va, vb));
        }
    }
    out
}

/// Coefficients of `F(x + Y)` of total degree below e, listed in the
/// library's multi-index order.
pub fn multi_taylor(
    f: &Field,
    terms: &[(Vec<u64>, FieldElement)],
    x: &[FieldElement],
    e: usize,
) -> Vec<FieldElement> {
    let k = x.len();
    let mut total = Series::new();
    for (u, a) in terms {
        let mut s = Series::from([(vec![0; k], *a)]);
        for (t, (&xt, &ut)) in x.iter().zip(u).enumerate() {
            let mut unit = vec![0; k];
            unit[t] = 1;
            let linear = Series::from([(vec![0; k], xt), (unit, f.one())]);
            for _ in 0..ut {
                s = series_mul(f, &s, &linear, e);
            }
        }
        for (key, v) in s {
            let slot = total.entry(key).or_insert(f.zero());
            *slot = f.add(*slot, v);
        }
    }
    multi_indices(k, e)
        .iter()
        .map(|j| total.get(&j.0).copied().unwrap_or(f.zero()))
        .collect()
}

/// `C(n, k) mod p` from Pascal's triangle.
pub fn pascal_mod(rows: usize, p: u64) -> Vec<Vec<u64>> {
    let mut t: Vec<Vec<u64>> = vec![vec![1]];
    for n in 1..rows {
        let prev = &t[n - 1];
        let mut row = vec![1u64; n + 1];
        for k in 1..n {
            row[k] = (prev[k - 1] + prev[k]) % p;
        }
        t.push(row);
    }
    t
}
