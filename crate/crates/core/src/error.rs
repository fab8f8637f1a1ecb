use std::path::PathBuf;

/// Errors produced by ingestion, configuration and inference.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Schema(String),

    #[error("line {line}: {msg}")]
    Data { line: u64, msg: String },

    #[error("expected exactly two treatments, found {}: {labels:?}", labels.len())]
    TreatmentCount { labels: Vec<String> },

    #[error("sample '{label}' has {n} observations; at least 2 are required")]
    TooFewRows { label: String, n: usize },

    #[error("income must be positive, got pre = {pre}, post = {post}")]
    NonPositiveIncome { pre: f64, post: f64 },

    #[error("degenerate support box: {0}")]
    DegenerateBox(String),

    #[error("grid/summary mismatch: {0}")]
    GridMismatch(String),

    #[error("combined sample size {n} is too small; the contact-set rule needs n >= {min}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
