use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exhausted: all {budget} pulls have been used")]
    BudgetExhausted { budget: usize },

    #[error("unknown dataset `{name}` (valid names: {valid})")]
    UnknownDataset { name: String, valid: String },

    #[error("unknown policy `{0}` (valid: areoa, aarandom, gafs-max, minmaxpics-seq, minmaxpics-grp)")]
    UnknownPolicy(String),

    #[error("unknown objective `{0}` (valid: variance, pics)")]
    UnknownObjective(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
