use thiserror::Error;

/// Errors produced by the algebra, construction and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("elements belong to different fields")]
    FieldMismatch,

    #[error("zero has no inverse")]
    ZeroInverse,

    #[error("invalid field parameters: {0}")]
    InvalidField(String),

    #[error("field of order {order} contains no primitive {m}-th root of unity")]
    NoRootOfUnity { m: u64, order: u64 },

    #[error("cannot decode field element: {0}")]
    ElementDecode(String),

    #[error("gcd({a}, {b}) = {gcd}, expected coprime moduli")]
    NotCoprime { a: u64, b: u64, gcd: u64 },

    #[error("multiplicity {e} must lie in 1..={p}")]
    BadMultiplicity { e: usize, p: u64 },

    #[error("residue {residue} of the target set violates the lifting hypothesis: {reason}")]
    LiftHypothesis { residue: u64, reason: String },

    #[error("arity or multiplicity mismatch: {0}")]
    ShapeMismatch(String),

    #[error("search budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("server {index} ({addr}): {reason}")]
    Server {
        index: usize,
        addr: String,
        reason: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
