use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes exactly one argument, got {got} (byte {offset})")]
    Arity { name: String, got: usize, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("partial of order {requested} exceeds jet order {order}")]
    OrderExceeded { requested: usize, order: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("singular {block} block (condition estimate {cond:e})")]
    SingularBlock { block: String, cond: f64 },
    #[error("metric is not positive definite: {0}")]
    NonPositiveDefinite(String),
    #[error("Hessian is rank deficient: {0}")]
    RankDeficientHessian(String),
    #[error("point violates the null-section margin: |fiber| = {norm} < {margin}")]
    NullSection { norm: f64, margin: f64 },
    #[error("singular transform: {0}")]
    SingularTransform(String),
    #[error("valence with {0} indices is not supported (at most 4)")]
    UnsupportedValence(usize),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("non-invertible multivector: {0}")]
    NonInvertible(String),
    #[error("factorization residual {residual:e} exceeds {bound:e}")]
    FactorizationFailure { residual: f64, bound: f64 },
    #[error("frame is not orthonormal: residual {0:e}")]
    NonOrthonormalFrame(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
