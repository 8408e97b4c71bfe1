use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("construction failed: {0}")]
    Construction(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid diffeomorphism: {0}")]
    InvalidDiffeo(String),

    #[error("numerical failure: {message} (bracket [{lo}, {hi}])")]
    Numerical { message: String, lo: f64, hi: f64 },

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("precondition violated for slot {slot}: {message}")]
    Precondition { slot: usize, message: String },

    #[error("verification failed: max deviation {deviation:e} at x = {at}")]
    VerificationFailed { deviation: f64, at: f64 },

    #[error("rotation number not Diophantine enough: quality {quality} exceeds cap {cap}")]
    NotDiophantine { quality: u64, cap: u64 },

    #[error("linearization did not converge; residual history {history:?}")]
    NonConvergence { history: Vec<f64> },

    #[error("no admissible target in scan range: {0}")]
    ScanRange(String),

    #[error("input outside the decomposition gate: {0}")]
    Gate(String),

    #[error("support margin exceeded for {piece}: overshoot {overshoot:e}")]
    Margin { piece: String, overshoot: f64 },

    #[error("word assembly failed for {piece}: {message}")]
    Assembly { piece: String, message: String },

    #[error("resource limit reached at radius {radius}: {message}")]
    Resource { radius: usize, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, lo: f64, hi: f64) -> Self {
        Error::Numerical { message: message.into(), lo, hi }
    }
}
