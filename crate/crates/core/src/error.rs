use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("shock rejected: strengths fell below {floor:e} without restoring contraction (last r = {last_r})")]
    ShockRejected { floor: f64, last_r: f64 },

    #[error("contraction factor {r} is not below 1")]
    NotContractive { r: f64 },

    #[error("edit rejected: {0}")]
    EditRejected(String),

    #[error("isolation violation: zone {zone} proposed a change to {target} outside the zone")]
    IsolationViolation { zone: String, target: String },

    #[error("mixed shock parameters within one batch window: {0}")]
    MixedBatch(String),
}

impl Error {
    /// Domain rejections: the input was well formed but the requested
    /// change cannot be applied safely.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            Error::ShockRejected { .. }
                | Error::NotContractive { .. }
                | Error::EditRejected(_)
                | Error::IsolationViolation { .. }
        )
    }
}
