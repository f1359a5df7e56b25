use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solvers, learners and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid policy at t={t}, s={state}: {reason}")]
    InvalidPolicy {
        t: usize,
        state: usize,
        reason: String,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("enumeration needs (S*A)^T = {required:.3e} trajectories, guard is {limit:.0e}")]
    Capacity { required: f64, limit: f64 },

    #[error("q is not absolutely continuous w.r.t. p: trajectory {trajectory} has q > 0 but p = 0")]
    AbsoluteContinuity { trajectory: String },

    #[error("invalid demonstrations: {0}")]
    InvalidDemos(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
