use alloc::string::String;

/// Errors raised by grid construction, operator assembly and the spectral calculus.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 1 or 2)")]
    InvalidDimension(usize),
    #[error("degenerate extent on axis {axis}: ({lo}, {hi})")]
    DegenerateExtent { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis} needs at least 2 interior nodes, got {count}")]
    TooFewNodes { axis: usize, count: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("order s = {0} outside (0, 1)")]
    InvalidOrder(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("operator is not positive definite (smallest eigenvalue {lambda_min:e})")]
    PositivityViolated { lambda_min: f64 },
    #[error("non-positive eigenvalue {value:e} at index {index}")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),
    #[error("quadrature did not converge: estimate {estimate:e} exceeds {tolerance:e} ({detail})")]
    QuadratureNonConvergent {
        estimate: f64,
        tolerance: f64,
        detail: String,
    },
    #[error("theta = {0} outside the admissible range")]
    ThetaOutOfRange(f64),
    #[error("hamiltonian evaluation overflow at node {node}: H({u:e}, {v:e}) is not finite")]
    HamiltonianOverflow { node: usize, u: f64, v: f64 },
    #[error("no admissible (mu, nu): 1/p + 1/q = {0} >= 1")]
    Infeasible(f64),
    #[error("sigma = {sigma} below its lower bound {bound}")]
    SigmaTooSmall { sigma: f64, bound: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
