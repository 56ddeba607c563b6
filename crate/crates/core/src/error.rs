use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input lies outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A mixing support point violates θ > −α.
    #[error("support point θ = {theta} violates θ > −α for α = {alpha}")]
    SupportViolation { theta: f64, alpha: f64 },

    #[error("confidence interval undefined at boundary estimate α̂ = {alpha_hat}")]
    BoundaryEstimate { alpha_hat: f64 },

    #[error("subset is not a member of the local family: mean block size {mean_size} exceeds n·δ = {limit}")]
    NotMember { mean_size: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code for this error: 2 for configuration and domain
    /// errors, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::SupportViolation { .. }
            | Error::NotMember { .. }
            | Error::Config(_) => 2,
            Error::BoundaryEstimate { .. } | Error::Numerical(_) => 3,
            Error::Io(_) => 4,
            Error::Csv(e) => {
                if e.is_io_error() {
                    4
                } else {
                    2
                }
            }
            Error::Json(e) => {
                if e.is_io() {
                    4
                } else {
                    2
                }
            }
        }
    }
}
