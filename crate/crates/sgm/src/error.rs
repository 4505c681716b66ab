use thiserror::Error;

/// Errors produced by graph queries, scoring, learning, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation requires a decomposable (chordal) graph.
    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    /// The operation requires a decomposable stratified graph, or the model
    /// cannot be realized by this implementation.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("data validation: {0}")]
    DataValidation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Coordinate ascent failed to settle within the sweep cap. This guards
    /// against numerical pathologies; strict-improvement acceptance makes it
    /// unreachable for well-formed inputs.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Command-line misuse (bad flag combination, incompatible inputs).
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
