//! Error type shared by all library modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown neuron id {0}")]
    UnknownNeuron(u64),

    #[error("invalid network state: {0}")]
    State(String),

    #[error("network has no labeled neuron")]
    UnlabeledNetwork,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("unknown class label `{0}`")]
    Label(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("cannot split class `{0}`: fewer than 2 sequences")]
    Split(String),

    #[error("support corpus has no frames for class `{0}`")]
    MissingClass(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("unknown subject `{0}`")]
    UnknownSubject(String),

    #[error("degenerate data: all values identical")]
    DegenerateData,

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
