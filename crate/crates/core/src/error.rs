use std::path::PathBuf;

use thiserror::Error;

/// Location of a record inside an input file, used for error context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordContext {
    pub source: String,
    pub line: u64,
}

impl std::fmt::Display for RecordContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.source, self.line)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{ctx}: unknown node id {id:?}")]
    UnknownNode { id: String, ctx: RecordContext },

    #[error("{ctx}: duplicate node id {id:?}")]
    DuplicateNode { id: String, ctx: RecordContext },

    #[error("{ctx}: self-loop on node {id:?}")]
    SelfLoop { id: String, ctx: RecordContext },

    #[error("{ctx}: duplicate edge ({u:?}, {v:?})")]
    DuplicateEdge {
        u: String,
        v: String,
        ctx: RecordContext,
    },

    #[error("{ctx}: {message}")]
    Malformed { message: String, ctx: RecordContext },

    #[error("node index {index} out of range for network with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("node set is empty")]
    EmptyNodeSet,

    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("outward accessibility needs at least 2 nodes, network has {0}")]
    TooFewNodes(usize),

    #[error("inconsistent step counts: expected {expected}, found {found}")]
    StepMismatch { expected: usize, found: usize },

    #[error("node count mismatch: expected {expected}, found {found}")]
    NodeCountMismatch { expected: usize, found: usize },

    #[error("node {0} has no accessibility values in this field")]
    MissingNode(usize),

    #[error("exact enumeration budget of {budget} partial paths exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("network has no coordinates")]
    NoCoordinates,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from bad user input rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::BudgetExceeded { .. } | Error::Stream(_) | Error::StepMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
