use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmiError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, max {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("eigendecomposition did not converge")]
    EigenNoConvergence,

    #[error("receive correlation has {found} eigenvalues above the rank tolerance, expected at most {max}")]
    RankExceeded { found: usize, max: usize },

    #[error("fixed-point solver produced a non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("fixed-point solver failed to reach residual {tol:e} (got {residual:e})")]
    NoConvergence { residual: f64, tol: f64 },

    #[error(
        "sensitivity denominator vanished ({denominator:e}); configuration is near-degenerate"
    )]
    SingularSensitivity { denominator: f64 },

    #[error("sensing DoF is undefined: upper-bound SMI is zero")]
    UndefinedDof,

    #[error("noise sweep must be strictly decreasing with at least 3 points")]
    BadNoiseSweep,

    #[error("non-finite value: {0}")]
    NonFiniteValue(String),

    #[error("precoder is off the power sphere: |F|^2 = {norm_sq:e}, expected {power:e}")]
    OffSphere { norm_sq: f64, power: f64 },

    #[error("retraction undefined: F + D is zero")]
    ZeroRetraction,

    #[error("Armijo line search failed after {backtracks} backtracks")]
    LineSearchFailure { backtracks: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = SmiError> = std::result::Result<T, E>;
