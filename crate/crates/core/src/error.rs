use thiserror::Error;

/// Errors raised by the entangling-capacity toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem selection is empty")]
    EmptySelection,

    #[error("not a permutation of {n} subsystems: {perm:?}")]
    NotAPermutation { n: usize, perm: Vec<usize> },

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not a density matrix: {0}")]
    NotDensity(String),

    #[error("trace is {0:.12}, expected unit trace")]
    NotUnitTrace(f64),

    #[error("channel is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("decomposition is not basic")]
    NotBasic,

    #[error("unknown gate family `{0}`")]
    UnknownGate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bracket inverted: lower {lower:.12} exceeds upper {upper:.12}")]
    BracketInverted { lower: f64, upper: f64 },

    #[error("{0} is not computed by this toolkit")]
    Unsupported(&'static str),

    #[error("gate file: {0}")]
    GateFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
