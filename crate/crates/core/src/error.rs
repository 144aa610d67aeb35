use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("empty history")]
    EmptyHistory,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("perfect recall violated: decision point {0} has more than one parent sequence")]
    PerfectRecallViolation(usize),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("incomplete strategy: {0}")]
    IncompleteStrategy(String),

    #[error("invalid sequence-form strategy: {0}")]
    InvalidSequenceForm(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
