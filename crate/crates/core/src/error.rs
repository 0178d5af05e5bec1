use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("{what} = {value} outside the domain {domain}")]
    Domain { what: &'static str, value: f64, domain: &'static str },

    #[error("time step {dt} exceeds the stability bound; use dt <= {max_dt}")]
    CflViolation { dt: f64, max_dt: f64 },

    #[error("truncation at {k_max} leaves tail mass {tail:e}; increase the truncation level")]
    Truncation { k_max: usize, tail: f64 },

    #[error("fixed-point iteration did not converge after {iterations} steps (last iterates {last:?})")]
    NoConvergence { iterations: usize, last: Vec<f64> },

    #[error("no sign change on [{lo}, {hi}]: {diagnostic}")]
    NoRoot { lo: f64, hi: f64, diagnostic: &'static str },

    #[error("negative entry {value:e} at index {index}; reduce the time step")]
    NegativeState { index: usize, value: f64 },

    #[error("degenerate estimate: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if v < 0.0 {
        return Err(Error::InvalidParameter { name, reason: format!("must be >= 0, got {v}") });
    }
    Ok(())
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if v <= 0.0 {
        return Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {v}") });
    }
    Ok(())
}
