use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("effectiveness undefined: {0}")]
    UndefinedEffectiveness(String),

    #[error("infeasible calibration: off-signal probability {q_off} outside [0, 1] (base rate {base_rate}, p_signal {p_signal}, signal fraction {signal_fraction})")]
    InfeasibleCalibration {
        q_off: f64,
        base_rate: f64,
        p_signal: f64,
        signal_fraction: f64,
    },

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("singular normal equations (ridge lambda = {lambda}); raise lambda")]
    SingularSystem { lambda: f64 },

    #[error("unsupported schema {found:?} (expected {expected:?})")]
    UnsupportedSchema { found: String, expected: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
