use thiserror::Error;

/// Errors raised by grid construction, problem setup and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node {0} is a boundary node; boundary values are Dirichlet data and have no neighbors")]
    BoundaryNode(usize),

    #[error("node {node} is out of range for a grid with {len} nodes")]
    NodeOutOfRange { node: usize, len: usize },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("grid function has {found} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("CFL condition violated: dt/dx^2 = {ratio} exceeds the bound 1/{k} = {bound} for a {k}-neighbor stencil")]
    CflViolation { ratio: f64, bound: f64, k: usize },

    #[error("non-finite value produced at node {node} ({context})")]
    NonFinite { node: usize, context: String },

    #[error("implicit step did not converge in {iterations} sweeps (update {update:e}, residual {residual:e})")]
    InnerNotConverged {
        iterations: usize,
        update: f64,
        residual: f64,
    },

    #[error("analysis rejected: {0}")]
    Analysis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
