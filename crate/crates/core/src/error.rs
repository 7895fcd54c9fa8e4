use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate entry at ({row}, {col}) (1-based)")]
    DuplicateEntry { row: usize, col: usize },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row index {row} out of range for {num_rows} rows")]
    InvalidRow { row: usize, num_rows: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("delta {delta} does not fit in {bits} bits")]
    DeltaOverflow { delta: usize, bits: u32 },

    #[error("malformed container: {0}")]
    Malformed(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("verification failed: {0}")]
    Verification(String),
}
