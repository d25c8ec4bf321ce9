use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: line {line}: malformed header: {detail}")]
    MalformedHeader {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{path}: line {line}: expected {expected} chips, found {found}")]
    WrongLineLength {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line} col {col}: illegal character {found:?} (expected '0' or '1')")]
    IllegalChar {
        path: PathBuf,
        line: usize,
        col: usize,
        found: char,
    },

    #[error("{path}: expected {expected} code lines, found {found}")]
    MissingCodes {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line}: unexpected trailing content")]
    TrailingContent { path: PathBuf, line: usize },

    #[error("invalid family dimensions: n={n}, m={m} (need n >= 2, m >= 1)")]
    InvalidDimensions { n: usize, m: usize },

    #[error("chip value {value} at code {code}, row {row} is not +1 or -1")]
    InvalidChip { code: usize, row: usize, value: i8 },

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("index (code {code}, row {row}) out of range for an {n}x{m} family")]
    IndexOutOfRange {
        code: usize,
        row: usize,
        n: usize,
        m: usize,
    },

    #[error("duplicate index (code {code}, row {row}) in index set")]
    DuplicateIndex { code: usize, row: usize },

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("block of {size} free bits exceeds the enumeration cap of {cap}")]
    BlockTooLarge { size: usize, cap: usize },

    #[error("no assignment of the free bits satisfies the ACZ constraints")]
    Infeasible,

    #[error("assignment has {found} values but the problem has {expected} free bits")]
    AssignmentLength { expected: usize, found: usize },

    #[error("selection strategy is infeasible: {detail}")]
    StrategyInfeasible { detail: String },

    #[error("{p} is not prime")]
    NotPrime { p: usize },

    #[error("invalid generator spec: {detail}")]
    InvalidSpec { detail: String },

    #[error(
        "tap polynomial {taps:?} of degree {degree} is not maximal \
         (sequence period {period}, expected {expected})"
    )]
    NonMaximalTaps {
        degree: u32,
        taps: Vec<u32>,
        period: usize,
        expected: usize,
    },

    #[error("stage two requires an ACZ-feasible family, but code {code} violates it")]
    AczPrecondition { code: usize },

    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },

    #[error("initializer error: {detail}")]
    InitializerError { detail: String },
}
