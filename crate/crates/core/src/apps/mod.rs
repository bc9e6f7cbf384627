//! Instances, measures and weights for k-SAT, graph coloring with few
//! colors, and 2-coloring of non-uniform hypergraphs.

pub mod coloring;
pub mod hypergraph;
pub mod sat;

use thiserror::Error;

use crate::csp::CspError;
use crate::lca::LcaError;
use crate::lll::LllError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AppError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Lll(#[from] LllError),
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error("variable {var} out of range for {n} variables")]
    VarOutOfRange { var: usize, n: usize },
    #[error("clause {0} contains a variable twice")]
    RepeatedVariable(usize),
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("probability {p} for variable {var} is outside [0, 1]")]
    BadProbability { var: usize, p: f64 },
    #[error("k = {0} is too small (need 2^k > e)")]
    KTooSmall(usize),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("degenerate formula: {0}")]
    Degenerate(String),
    #[error("edge {edge} has size {size}, minimum is {min}")]
    EdgeTooSmall { edge: usize, size: usize, min: usize },
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("palette is empty")]
    EmptyPalette,
    #[error("maximum degree {0} is below 2")]
    DegreeTooSmall(usize),
    #[error("neighborhood of vertex {vertex} has {edges} edges, more than the allowed {allowed}")]
    DenseNeighborhood { vertex: usize, edges: usize, allowed: f64 },
    #[error("greedy completion found no free color for vertex {0}")]
    GreedyStuck(usize),
    #[error("vertex {0} is not colored")]
    Uncolored(usize),
}
