use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical quantity outside its mathematical domain (zero distance, negative throughput).
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("no cellular partner available for pair {pair}")]
    NoPartner { pair: usize },
    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("hmm: {0}")]
    Hmm(String),
    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    #[error("config value out of range for `{key}`: {msg}")]
    ConfigRange { key: String, msg: String },
    #[error("demand script line {line}: {msg}")]
    DemandScript { line: usize, msg: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("cannot write output to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
