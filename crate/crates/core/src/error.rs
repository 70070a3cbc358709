use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the box it is supposed to belong to.
    #[error("coordinate {coord} = {value} lies outside [{lower}, {upper}]")]
    Domain {
        coord: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    /// A rational function was evaluated where its denominator (nearly) vanishes.
    #[error("denominator {denominator:e} vanishes at point {point:?}")]
    Pole { point: Vec<f64>, denominator: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simplex stalled after {iterations} iterations")]
    SolverStalled { iterations: usize },

    #[error("feasibility test at z = {z} failed: simplex stalled after {iterations} iterations")]
    FeasibilityStalled { z: f64, iterations: usize },

    /// An invariant that the algorithm is supposed to guarantee did not hold.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid bisection bracket: {0}")]
    Bracket(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown target function `{0}`")]
    UnknownFunction(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
