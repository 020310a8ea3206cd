use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A result that must be real carried an imaginary part above tolerance.
    #[error("non-real residue {residue:e} exceeds tolerance {tolerance:e}")]
    NonReal { residue: f64, tolerance: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CsError>;

pub(crate) fn check_pow2(n: usize, what: &str) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(CsError::InvalidDimension(format!(
            "{what} has length {n}; expected a power of two >= 4"
        )));
    }
    Ok(())
}

pub(crate) fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(CsError::InvalidDimension(format!(
            "{what} has length {got}; expected {want}"
        )));
    }
    Ok(())
}
