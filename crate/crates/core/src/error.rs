use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid subsystem dimensions: {0}")]
    InvalidDims(String),

    #[error("amplitude vector has length {got}, dims require {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("amplitude vector has zero norm")]
    ZeroVector,

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("operation requires a tripartite state, got {0} subsystems")]
    NotTripartite(usize),

    #[error("subsystem dimensions differ: {0:?} vs {1:?}")]
    DimsMismatch(Vec<usize>, Vec<usize>),

    #[error("matrix is not Hermitian (max residual {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max residual {0:e})")]
    NotUnitary(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("exponent must be a positive integer")]
    ZeroExponent,

    #[error("trace of a Hermitian power has imaginary part {0:e}")]
    ImaginaryResidue(f64),

    #[error("{n_eff} retained eigenvectors cannot be padded into a {side}x{side} Gram matrix")]
    PaddingImpossible { n_eff: usize, side: usize },

    #[error("invariant profiles have different label sequences")]
    LabelMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
