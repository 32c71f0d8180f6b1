use thiserror::Error;

/// Errors raised by the statistics, calibration, engine and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input carries too little information for the requested statistic.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Mismatched lengths or channel counts.
    #[error("shape error: {0}")]
    Shape(String),

    /// A matrix or scale parameter is singular or too close to it.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A configuration or scenario failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative routine did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Shape(_) | Error::Parse(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
