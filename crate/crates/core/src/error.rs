use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("entry ({row}, {col}) outside declared {nrows}x{ncols} bounds")]
    Range {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("unsupported matrix market format: {0}")]
    UnsupportedFormat(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("brute-force oracle guard exceeded: n = {n} > {limit}")]
    GuardExceeded { n: usize, limit: usize },
    #[error("arena exhausted: need {needed} bytes, budget {budget}")]
    ArenaExhausted { needed: usize, budget: usize },
    #[error("configuration infeasible: {0}")]
    ConfigurationInfeasible(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("rows {first}..{last} of the chunk have no fill structure yet")]
    MissingRows { first: usize, last: usize },
    #[error("spill store i/o: {0}")]
    SpillIo(#[source] io::Error),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
