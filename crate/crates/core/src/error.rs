//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the failure classes surfaced by the CLI exit codes:
/// configuration problems, data/format problems, and numeric contract
/// violations.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or lengths of numeric operands disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A bounding box has nonpositive width or height.
    #[error("degenerate box: {0}")]
    DegenerateBox(String),

    /// An operation that requires at least one sample received none.
    #[error("empty batch: {0}")]
    EmptyBatch(String),

    /// Inconsistent or invalid configuration detected before any work ran.
    #[error("configuration error: {0}")]
    Config(String),

    /// A text record failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Cross-references inside a dataset do not resolve.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A binary payload does not match its declared format.
    #[error("format error: {0}")]
    Format(String),

    /// A numeric value left the finite range or violated a numeric contract.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A retrieval query cannot be answered against the given vocabulary.
    #[error("query error: {0}")]
    Query(String),

    /// The synthetic generator could not satisfy its contract.
    #[error("generation error: {0}")]
    Generation(String),

    /// Cosine similarity is undefined because a translation vector has zero norm.
    #[error("undefined similarity: predicate {0} has a zero-norm translation vector")]
    UndefinedSimilarity(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
