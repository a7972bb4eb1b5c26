use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("row {row} has {len} entries, expected {expected}")]
    RaggedMatrix { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("total mass {0} deviates from 1 by more than 1e-9")]
    MassNotOne(f64),
    #[error("{what} has size {size:e}, above the limit {limit:e}")]
    SizeOverflow { what: &'static str, size: f64, limit: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("P(a={a}|e={e}) is zero; entropy density undefined")]
    ZeroAtom { a: usize, e: usize },
    #[error("invalid interval [{lo}, {hi}]")]
    IntervalError { lo: f64, hi: f64 },
    #[error("case mismatch: {0}")]
    CaseMismatch(String),
    #[error("hash family has no certified epsilon; assert mode needs an exhaustive family")]
    UncertifiedFamily,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::DomainError(msg.into())
}
