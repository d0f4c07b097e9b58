use thiserror::Error;

/// Errors raised by the library layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("incompatible operands: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("antiunitary matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("element is not in the algebra span (residual {0:.3e})")]
    NotInSpan(f64),

    #[error("sub-basis is not closed under adjoint (residual {0:.3e})")]
    NotAdjointClosed(f64),

    #[error("triple has no real structure")]
    MissingRealStructure,

    #[error("not a product operator (Kronecker residual {0:.3e})")]
    NotProductOperator(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing or invalid coupling `{0}`")]
    InvalidCoupling(String),

    #[error("problem too large for exhaustive enumeration: {0}")]
    DimensionTooLarge(String),

    #[error("invalid document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
