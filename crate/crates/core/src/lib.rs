//! Multi-server private information retrieval from matching vector families
//! and sparse decoding polynomials, with Hasse-derivative answers.
//!
//! ```
//! use mvpir::{rng_from_seed, run_protocol, Database, DecoderSource, Field, MvfSource, PirParams};
//!
//! let field = Field::gf4();
//! let params = PirParams::build(
//!     &field,
//!     3,
//!     2,
//!     MvfSource::BruteForce { dim: 2, size: 2, budget: 1_000_000 },
//!     DecoderSource::Search { t_max: 2, budget: 1_000 },
//! )
//! .unwrap();
//! let db = Database::from_bits(&field, &[true, false]);
//! let (value, transcript) = run_protocol(&params, &db, 0, &mut rng_from_seed(Some(1))).unwrap();
//! assert_eq!(value, field.one());
//! assert_eq!(transcript.element_counts(), (4, 6));
//! ```

pub mod algebra;
pub mod bundle;
pub mod config;
pub mod decode;
pub mod error;
pub mod field;
pub mod mvf;
pub mod pir;
pub mod wire;

pub use algebra::{compose_hasse, Curve, HasseVector, MultiIndex, SparseMultiPoly, SparseUniPoly};
pub use bundle::{write_bundle, Bundle, Settings};
pub use decode::{
    decoding_search, interp_from_decoding, lagrange_decoding, lift_multiplicity, recover_constant,
    DecodingPoly, InterpSet,
};
pub use error::{Error, Result};
pub use field::{primitive_root_of_unity, Field, FieldElement, RootOfUnity};
pub use mvf::{canonical_set, mvf_bruteforce, mvf_grolmusz, CanonicalSet, MvFamily, MvfViolation};
pub use pir::{
    client_query, client_reconstruct, comm_cost, privacy_audit, rng_from_seed, run_protocol,
    server_answer, Answer, AuditOutcome, CostModel, Database, DecoderSource, MvfSource, PirParams,
    PirServer, Query, Transcript,
};
pub use wire::{remote_query, spawn_server, ServerHandle, ServerState};
