use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trajectory diverged at tau = {tau}: v = {velocity}, |v| exceeds guard {guard}")]
    Divergence { tau: f64, velocity: f64, guard: f64 },

    #[error("orbit is not rotating: {0}")]
    NotRotating(String),

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("initial load bracket [{lo}, {hi}] does not straddle the critical load ({detail})")]
    BracketNotStraddling { lo: f64, hi: f64, detail: String },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("invalid kernel table: {0}")]
    KernelTable(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::BracketNotStraddling { .. }
                | Error::Quadrature(_)
                | Error::NotRotating(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
