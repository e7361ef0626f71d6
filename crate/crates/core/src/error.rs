use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is empty: {0}")]
    EmptyGraph(String),

    #[error("density is undefined for a graph with an empty side ({left} left, {right} right)")]
    UndefinedDensity { left: usize, right: usize },

    #[error("edge ({left}, {right}) out of range for a {left_count}x{right_count} graph")]
    IdOutOfRange {
        left: usize,
        right: usize,
        left_count: usize,
        right_count: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot split left node {node:?}: degree {degree} < 2")]
    SplitInfeasible { node: String, degree: usize },

    #[error("unsupported path length {0}: only odd lengths 3, 5 and 7 connect the two sides")]
    UnsupportedLength(usize),

    #[error(
        "katz series diverges: alpha {alpha} * spectral radius {spectral_radius} >= 1 (admissible alpha < {max_alpha})"
    )]
    Divergence {
        alpha: f64,
        spectral_radius: f64,
        max_alpha: f64,
    },

    #[error("graph has {nodes} nodes, above the dense-eigendecomposition cap of {cap}")]
    NodeCapExceeded { nodes: usize, cap: usize },

    #[error("requested {requested} items but only {available} are available")]
    Capacity { requested: usize, available: usize },

    #[error("{0} did not converge within {1} iterations")]
    Convergence(&'static str, usize),

    #[error("labels contain a single class")]
    DegenerateLabels,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("feature width mismatch: expected {expected}, got {actual}")]
    Schema { expected: usize, actual: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),

    #[error("node {id} out of range ({count} embeddings)")]
    Bounds { id: usize, count: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
