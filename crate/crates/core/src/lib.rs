//! Sensing mutual information (SMI) of random Gaussian probing signals in
//! Kronecker-correlated MIMO sensing channels.
//!
//! The crate evaluates the SMI `E_S log det(I + σ⁻²(R_R ⊗ R_T^{1/2} F S Sᴴ Fᴴ R_T^{1/2}))`
//! four ways: a random-matrix deterministic equivalent ([`smi_asymptotic`]),
//! the Jensen upper bound ([`smi_upper_bound`]), a rank-based lower bound
//! ([`smi_lower_bound`]) and a seeded Monte-Carlo estimate
//! ([`smi_monte_carlo`]). It also maximises the deterministic equivalent over
//! the precoder on the power sphere ([`optimize_precoder`]).
//!
//! All routines are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below name the double-precision instantiations used by the CLI.

// NaN must fail these checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gradient;
pub mod linalg;
pub mod manifold;
pub mod mc;
pub mod model;
pub mod rmt;
pub mod scalar;

pub use error::{Result, SmiError};
pub use gradient::{
    delta_gradient, euclidean_gradient, finite_difference_gradient, relative_deviation,
    upper_bound_gradient, GradientReport,
};
pub use manifold::{
    armijo_search, baseline_ub_precoder, optimize_from, optimize_precoder, retract,
    riemannian_gradient, ArmijoConfig, ArmijoStep, Init, IterationRecord, Objective,
    OptimizerConfig, OptimizerTrace, Termination,
};
pub use mc::{
    isometric_signal, sample_signal, smi_monte_carlo, smi_realization, smi_realization_with,
    McReport, RandomSignal, RealizationPath,
};
pub use model::{
    build_correlations, db_to_linear, dbm_to_watts, effective_gram, linear_to_db,
    receive_eigenvalues, sample_target_response, steering_vector, watts_to_dbm, CorrelationPair,
    Precoder, Scenario, Target, TargetResponse, TargetSet,
};
pub use rmt::{
    dof_bounds, dof_estimate, smi_asymptotic, smi_asymptotic_at_frames, smi_lower_bound,
    smi_ns_derivative, smi_upper_bound, solve_delta, solve_delta_spectrum, solve_delta_with,
    DofBounds, DofEstimate, FixedPointSolution, SmiEstimate, SmiMethod, SolveMethod,
};
pub use scalar::{CMat, CVec, Real, C};

pub type Scenario64 = Scenario<f64>;
pub type TargetSet64 = TargetSet<f64>;
pub type CorrelationPair64 = CorrelationPair<f64>;
pub type Precoder64 = Precoder<f64>;
pub type SmiEstimate64 = SmiEstimate<f64>;
pub type McReport64 = McReport<f64>;
pub type OptimizerConfig64 = OptimizerConfig<f64>;
pub type OptimizerTrace64 = OptimizerTrace<f64>;
pub type CMat64 = CMat<f64>;

pub type Scenario32 = Scenario<f32>;
pub type Precoder32 = Precoder<f32>;
pub type CorrelationPair32 = CorrelationPair<f32>;
