use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pair `{0}` has no first/second votes")]
    EmptyPair(String),

    #[error("pair `{pair}` is not unanimous ({n_first} of {n} chose the first item); use the ratio estimator")]
    WrongEstimator { pair: String, n: u32, n_first: u32 },

    #[error("pair `{0}` has no confidence scores")]
    MissingScores(String),

    #[error("duplicate pair id `{0}`")]
    DuplicatePair(String),

    #[error("sequence does not cover the model: {0}")]
    Coverage(String),

    #[error("{what}: {needed} exceeds the limit of {cap}")]
    Capacity { what: &'static str, needed: u128, cap: u128 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: value `{value}` out of range ({expected})")]
    Range { line: u64, value: String, expected: &'static str },

    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: &'static str, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
