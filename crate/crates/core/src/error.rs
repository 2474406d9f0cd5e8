use ddlqr_sdp::{SdpError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("data are rank deficient: numerical rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("value iteration did not converge in {iterations} iterations (relative step {residual:.3e}); the pair may not be stabilizable")]
    DareNoConvergence { iterations: usize, residual: f64, history: Vec<f64> },
    #[error("solver finished with status {0}")]
    Solver(SolveStatus),
    #[error("Y is ill-conditioned for gain extraction (condition number {0:.3e})")]
    Conditioning(f64),
    #[error("X0 G differs from the identity by {0:.3e}; G is not a data parameterization")]
    InvalidParameterization(f64),
    #[error("noise calibration failed: {0}")]
    Calibration(String),
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
