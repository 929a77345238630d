use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e} N)")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("infeasible calibration target: {0}")]
    Infeasible(String),

    #[error("protocol constraint violated: {0}")]
    Protocol(String),

    #[error("no 0.2% offset intersection: curve never leaves the elastic line")]
    NoYield,

    #[error("under-determined fit: {0}")]
    UnderDetermined(String),

    #[error("hysteresis loop is open (gap {gap:e} in strain)")]
    OpenLoop { gap: f64 },

    #[error("too few points in fit window {window}: found {found}, need {needed}")]
    TooFewPoints {
        window: String,
        found: usize,
        needed: usize,
    },

    #[error("record metadata mismatch: {0}")]
    MetadataMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("record format error at row {row}: {message}")]
    RecordFormat { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn ensure_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")))
    }
}
