use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SfsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Invalid(String),

    /// The Monte-Carlo denominator of the drift ratio vanished (every inner
    /// sample had f = 0, or f produced NaN).
    #[error("drift singularity at t = {t}: {detail}")]
    DriftSingularity {
        t: f64,
        x: Vec<f64>,
        detail: String,
        particle: Option<u64>,
        step: Option<u64>,
    },

    #[error("non-finite state for particle {particle} at step {step}")]
    NonFinite { particle: u64, step: u64, state: Vec<f64> },

    #[error("memory budget exceeded: need {needed} bytes, budget {budget} bytes")]
    Budget { needed: u64, budget: u64 },

    #[error("unknown target `{0}`")]
    UnknownTarget(String),

    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl SfsError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SfsError::Domain(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        SfsError::Unsupported(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        SfsError::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SfsError::Io { path: path.into(), source }
    }

    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            SfsError::Domain(_) => "domain",
            SfsError::Unsupported(_) => "unsupported",
            SfsError::Invalid(_) => "invalid",
            SfsError::DriftSingularity { .. } => "drift-singularity",
            SfsError::NonFinite { .. } => "non-finite",
            SfsError::Budget { .. } => "budget",
            SfsError::UnknownTarget(_) => "unknown-target",
            SfsError::ConfigParse { .. } => "config-parse",
            SfsError::Io { .. } => "io",
            SfsError::Serialize(_) => "serialize",
        }
    }

    /// Attach (particle, step) context to a drift failure raised deep inside a run.
    pub(crate) fn at(self, particle_index: u64, step_index: u64) -> Self {
        match self {
            SfsError::DriftSingularity { t, x, detail, .. } => SfsError::DriftSingularity {
                t,
                x,
                detail,
                particle: Some(particle_index),
                step: Some(step_index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, SfsError>;
