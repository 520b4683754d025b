use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode count mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: usize, found: usize },

    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("state has no nonzero amplitude")]
    EmptyState,

    #[error("photon count {count} in mode {mode} exceeds cutoff {cutoff}")]
    CutoffExceeded { mode: usize, count: u32, cutoff: u32 },

    #[error("invalid optical element: {0}")]
    InvalidElement(String),

    #[error("invalid detector design: {0}")]
    InvalidDesign(String),

    #[error("stage `{stage}` succeeded with zero probability")]
    ZeroProbability { stage: String },

    #[error(
        "stage `{stage}`: simulated probability {simulated:e} disagrees with closed form {analytic:e}"
    )]
    AnalyticMismatch {
        stage: String,
        simulated: f64,
        analytic: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
