use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantile {h}/{k}: need 1 <= h <= k-1")]
    InvalidQuantile { h: u64, k: u64 },

    #[error("cannot parse quantile {0:?}; expected h/k")]
    QuantileSyntax(String),

    #[error("random draw {0} is outside [0, 1]")]
    RandOutOfRange(f64),

    #[error("query on an empty {0}")]
    Empty(&'static str),

    #[error("item {item} is outside the digest domain [1, {max}]")]
    OutOfDomain { item: i64, max: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid stream spec: {0}")]
    StreamSpec(String),

    #[error("cannot read trace {path}: {source}")]
    TraceIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trace {path} has no parsable records ({skipped} lines skipped)")]
    EmptyTrace { path: PathBuf, skipped: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
