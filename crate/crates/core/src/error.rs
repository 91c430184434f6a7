use thiserror::Error;

/// Errors produced while building, evaluating or searching over boxes and wirings.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside [-1, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (-1.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange { name, value })
    }
}
