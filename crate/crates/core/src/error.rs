use thiserror::Error;

use crate::solver::SolveResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },

    #[error("graph is disconnected: vertices {unreachable:?} are not reachable from vertex 0")]
    Disconnected { unreachable: Vec<usize> },

    #[error(
        "epsilon {eps} is too small for a connected graph: point {a} {point_a:?} cannot reach point {b} {point_b:?}"
    )]
    EpsilonTooSmall {
        eps: f64,
        a: usize,
        b: usize,
        point_a: Vec<f64>,
        point_b: Vec<f64>,
    },

    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("operation requires an epsilon-adjacency graph with a stored point cloud")]
    NotMetric,

    #[error("operation requires a self-loop at every vertex")]
    MissingLoops,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested ladder depth {requested} is too fine for the mesh; deepest feasible depth is {max_depth:?}")]
    MeshTooCoarse {
        requested: usize,
        max_depth: Option<usize>,
    },

    #[error("strategy '{strategy}' moved the token from {from} to {to}, which is not a neighbor")]
    IllegalMove {
        strategy: String,
        from: usize,
        to: usize,
    },

    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("solver did not reach the tolerance (best residual {})", .0.residual)]
    NotConverged(Box<SolveResult>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
