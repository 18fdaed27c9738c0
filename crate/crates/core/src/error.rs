use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which containment guard fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardKind {
    BoundaryMass,
    SpectralTail,
}

impl std::fmt::Display for GuardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GuardKind::BoundaryMass => write!(f, "boundary_mass"),
            GuardKind::SpectralTail => write!(f, "spectral_tail"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} samples but the grid holds {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("vector of length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("t = 0 is not allowed ({0})")]
    ZeroTime(&'static str),

    #[error("containment guard `{kind}` failed: {value:e} > {limit:e}")]
    Containment {
        kind: GuardKind,
        value: f64,
        limit: f64,
    },

    #[error("field contains non-finite samples")]
    NonFinite,

    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
