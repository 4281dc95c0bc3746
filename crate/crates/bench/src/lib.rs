//! Fixed instances shared by the benchmarks.

use mvpir::decode::{find_fixture, BUILTIN_FIXTURES};
use mvpir::mvf::mvf_grolmusz_with_weight;
use mvpir::{
    canonical_set, primitive_root_of_unity, rng_from_seed, Database, DecoderSource, Field,
    MvfSource, PirParams, Result,
};

/// m=3 over GF(4), e=2, two records in Z_6^2.
pub fn toy() -> Result<PirParams> {
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
}

/// m=511 over GF(512) with the built-in 3-term decoder and the symmetric
/// family over Z_1022 indexed by `weight`-subsets of `[h]`.
pub fn gf512(h: usize, weight: usize, e: usize) -> Result<PirParams> {
    let field = Field::gf512();
    let roots = primitive_root_of_unity(&field, 511)?;
    let target = canonical_set(511)?;
    let decoder = find_fixture(BUILTIN_FIXTURES, &roots, target.elements())?
        .map_or(DecoderSource::Lagrange, DecoderSource::Poly);
    let family = mvf_grolmusz_with_weight(1022, h, weight)?;
    PirParams::build(&field, 511, e, MvfSource::Family(family), decoder)
}

/// A full database of random records for `params`.
pub fn database(params: &PirParams, seed: u64) -> Database {
    Database::random(params.field(), params.n(), &mut rng_from_seed(Some(seed)))
}
