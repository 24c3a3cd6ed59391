use thiserror::Error;

pub type Result<T> = std::result::Result<T, KinflowError>;

#[derive(Debug, Error)]
pub enum KinflowError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("force is singular at x = 0; use the cut-off force near the origin")]
    SingularInput,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("neighbor grid is stale: built for revision {grid}, ensemble is at revision {ensemble}")]
    StaleGrid { grid: u64, ensemble: u64 },

    #[error("particle {index} at {point:?} lies outside the density grid")]
    OutOfBounds { index: usize, point: [f64; 4] },

    #[error("measures have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),

    #[error("exact W1 solver is limited to {limit} points, got {n}")]
    SizeLimit { n: usize, limit: usize },

    #[error("ensemble does not retain its initial points")]
    MissingInitialPoints,

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl KinflowError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        KinflowError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
