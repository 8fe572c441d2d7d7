use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("Cayley transform undefined: I + X is near singular (condition estimate {condition:.3e})")]
    CayleySingular { condition: f64 },

    #[error("projection onto the unitary group failed: {0}")]
    ProjectionFailed(String),

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("singular value iteration did not converge after {sweeps} sweeps")]
    SvdNonConvergence { sweeps: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("target reduction unavailable: {0}")]
    ReductionUnavailable(String),

    #[error("unknown builtin constellation `{0}`")]
    UnknownBuiltin(String),

    #[error("constellation needs at least 2 elements, got {0}")]
    TooFewElements(usize),

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("quadrature did not reach tolerance {tolerance:e} within depth {max_depth}")]
    Quadrature { tolerance: f64, max_depth: u32 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid of {points} points exceeds the cap of {cap}; lower the density or raise the cap")]
    GridTooLarge { points: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::CayleySingular { .. }
                | Error::ProjectionFailed(_)
                | Error::SvdNonConvergence { .. }
                | Error::Singular
                | Error::Quadrature { .. }
                | Error::Numeric(_)
                | Error::NonFinite
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
