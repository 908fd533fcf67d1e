//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type. Numeric routines return `Result<T, Error>` so
/// callers (including the scenario runner) can turn failures into failing
/// checks instead of panics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("{what} is singular or ill-conditioned at {location} (condition estimate {cond:.3e}, gate {gate:.1e})")]
    IllConditioned {
        what: String,
        location: String,
        cond: f64,
        gate: f64,
    },

    #[error("integration diverged: non-finite state at tau = {tau}")]
    Divergence { tau: f64 },

    #[error("conformal bracket non-positive at s = {s} (value {value:.6e}); curve leaves the admissible region")]
    SignatureBreakdown { s: f64, value: f64 },

    #[error("missing capability: {0}")]
    MissingCapability(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dim(context: impl Into<String>, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected: expected.into(),
            found: found.into(),
        }
    }
}
