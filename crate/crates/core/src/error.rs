use thiserror::Error;

use crate::problem::TransformBranch;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("Hopf-Cole transform is undefined for b = 0")]
    ZeroCoefficient,

    #[error("exponent {exponent:.6e} at node {node} exceeds the overflow guard of 700")]
    Range { node: usize, exponent: f64 },

    #[error("value {value:.6e}{} lies outside the {branch} branch domain", node_suffix(*.node))]
    Domain {
        branch: TransformBranch,
        node: Option<usize>,
        value: f64,
    },

    #[error("grid mismatch: expected {expected} nodes, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("singular tridiagonal factorization at row {row}")]
    SingularFactorization { row: usize },

    #[error("Newton failed after {iterations} iterations (residual {residual:.3e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("principal eigenvalue iteration stagnated after {iterations} iterations (increment {increment:.3e}, residual {residual:.3e})")]
    EigenStagnation {
        iterations: usize,
        increment: f64,
        residual: f64,
    },

    #[error("principal eigenvector lost positivity at node {node} (value {value:.3e}); {advice}")]
    PositivityDefect {
        node: usize,
        value: f64,
        advice: String,
    },

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    #[error("lambda* bracket: {0}")]
    Bracket(String),
}

fn node_suffix(node: Option<usize>) -> String {
    node.map(|i| format!(" at node {i}")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;
