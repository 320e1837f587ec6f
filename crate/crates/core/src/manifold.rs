//! Steepest ascent on the power sphere `{F : ‖F‖² = P}`.
//!
//! The objectives are non-decreasing in transmit power, so the optimum of
//! the `‖F‖² ≤ P` problem lies on the sphere and the iteration never leaves
//! it: project the Euclidean gradient onto the tangent space, backtrack
//! along it with an Armijo rule, and renormalise.

use crate::error::{Result, SmiError};
use crate::gradient::{euclidean_gradient, upper_bound_gradient};
use crate::linalg::{frob_sq, re_inner, real, scale};
use crate::model::{CorrelationPair, Precoder, Scenario};
use crate::rmt::{smi_asymptotic, smi_upper_bound};
use crate::scalar::{CMat, Real};

/// Relative slack for the on-sphere precondition.
pub const SPHERE_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Deterministic-equivalent SMI.
    AsymptoticSmi,
    /// Jensen upper bound.
    UpperBoundSmi,
}

impl Objective {
    pub fn value<T: Real>(
        self,
        corr: &CorrelationPair<T>,
        precoder: &Precoder<T>,
        scenario: &Scenario<T>,
    ) -> Result<T> {
        Ok(match self {
            Objective::AsymptoticSmi => smi_asymptotic(corr, precoder, scenario)?.nats,
            Objective::UpperBoundSmi => smi_upper_bound(corr, precoder, scenario)?.nats,
        })
    }

    /// Euclidean gradient `∂L/∂F*`.
    pub fn gradient<T: Real>(
        self,
        corr: &CorrelationPair<T>,
        precoder: &Precoder<T>,
        scenario: &Scenario<T>,
    ) -> Result<CMat<T>> {
        Ok(match self {
            Objective::AsymptoticSmi => euclidean_gradient(corr, precoder, scenario)?.grad,
            Objective::UpperBoundSmi => upper_bound_gradient(corr, precoder, scenario)?.grad,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Top-K eigenvectors of `R_T`, scaled to the budget.
    Eigenbeam,
    /// Seeded complex Gaussian matrix, scaled to the budget.
    ScaledRandom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoConfig<T: Real> {
    pub initial_step: T,
    pub contraction: T,
    pub sufficient_decrease: T,
    pub max_backtracks: usize,
}

impl<T: Real> Default for ArmijoConfig<T> {
    fn default() -> Self {
        Self {
            initial_step: T::one(),
            contraction: T::lit(0.5),
            sufficient_decrease: T::lit(1e-4),
            max_backtracks: 40,
        }
    }
}

impl<T: Real> ArmijoConfig<T> {
    fn validate(&self) -> Result<()> {
        let unit = |x: T| x > T::zero() && x < T::one();
        if !(self.initial_step > T::zero())
            || !unit(self.contraction)
            || !unit(self.sufficient_decrease)
        {
            return Err(SmiError::InvalidArgument(
                "Armijo parameters need initial_step > 0 and contraction, sufficient_decrease in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig<T: Real> {
    pub max_iters: usize,
    /// Stop once the Frobenius norm of the Riemannian gradient is below this.
    pub grad_norm_tol: T,
    pub armijo: ArmijoConfig<T>,
    pub objective: Objective,
    pub init: Init,
    pub seed: u64,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 50,
            grad_norm_tol: T::lit(1e-5),
            armijo: ArmijoConfig::default(),
            objective: Objective::AsymptoticSmi,
            init: Init::Eigenbeam,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T: Real> {
    pub iter: usize,
    /// Objective at the iterate, nats.
    pub objective: T,
    /// Riemannian gradient norm at the iterate.
    pub grad_norm: T,
    /// Step that produced this iterate (zero for the start point).
    pub step: T,
    pub backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIters,
    LineSearchFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::MaxIters => "max-iters",
            Termination::LineSearchFailure => "line-search-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace<T: Real> {
    pub records: Vec<IterationRecord<T>>,
    pub precoder: Precoder<T>,
    pub termination: Termination,
}

impl<T: Real> OptimizerTrace<T> {
    pub fn final_objective(&self) -> T {
        self.records
            .last()
            .map(|r| r.objective)
            .unwrap_or_else(T::zero)
    }

    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

fn check_on_sphere<T: Real>(precoder: &Precoder<T>, power: T) -> Result<()> {
    let n2 = precoder.power();
    if !(power > T::zero()) || (n2 - power).abs() > T::lit(SPHERE_RTOL) * power {
        return Err(SmiError::OffSphere {
            norm_sq: n2.as_f64(),
            power: power.as_f64(),
        });
    }
    Ok(())
}

/// Tangent-space projection `∇ − (Re tr(F ∇ᴴ) / ‖F‖²) F`.
///
/// On the sphere `‖F‖² = P`; dividing by the measured norm keeps the
/// result tangent to rounding error.
pub fn riemannian_gradient<T: Real>(
    precoder: &Precoder<T>,
    eucl_grad: &CMat<T>,
    power: T,
) -> Result<CMat<T>> {
    check_on_sphere(precoder, power)?;
    let f = precoder.matrix();
    if f.shape() != eucl_grad.shape() {
        return Err(SmiError::Dimension(
            "gradient and precoder shapes differ".into(),
        ));
    }
    let coeff = re_inner(f, eucl_grad) / frob_sq(f);
    Ok(eucl_grad - scale(f, coeff))
}

/// `√P (F + D) / ‖F + D‖`.
pub fn retract<T: Real>(
    precoder: &Precoder<T>,
    tangent: &CMat<T>,
    power: T,
) -> Result<Precoder<T>> {
    let sum = precoder.matrix() + tangent;
    let n2 = frob_sq(&sum);
    if !(n2 > T::zero()) {
        return Err(SmiError::ZeroRetraction);
    }
    Ok(Precoder::new(sum * real((power / n2).sqrt())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoStep<T: Real> {
    pub step: T,
    pub precoder: Precoder<T>,
    /// Objective at the accepted point.
    pub value: T,
    /// Objective evaluations performed.
    pub evals: usize,
    pub backtracks: usize,
}

/// Backtracking search for the largest `β = β₀ cᵗ` with
/// `L(R(F, β D)) ≥ L(F) + σ β Re tr(D gradᴴ)`.
#[allow(clippy::too_many_arguments)]
pub fn armijo_search<T, F>(
    objective: F,
    precoder: &Precoder<T>,
    current: T,
    direction: &CMat<T>,
    grad: &CMat<T>,
    power: T,
    config: &ArmijoConfig<T>,
) -> Result<ArmijoStep<T>>
where
    T: Real,
    F: Fn(&Precoder<T>) -> Result<T>,
{
    config.validate()?;
    let slope = re_inner(direction, grad);
    if !(slope > T::zero()) {
        return Err(SmiError::InvalidArgument(
            "direction is not an ascent direction".into(),
        ));
    }
    let mut step = config.initial_step;
    for t in 0..=config.max_backtracks {
        let candidate = retract(precoder, &scale(direction, step), power)?;
        let value = objective(&candidate);
        match value {
            Ok(v) if v.is_finite() && v >= current + config.sufficient_decrease * step * slope => {
                return Ok(ArmijoStep {
                    step,
                    precoder: candidate,
                    value: v,
                    evals: t + 1,
                    backtracks: t,
                });
            }
            // a degenerate trial point counts as a rejected step
            Ok(_) | Err(SmiError::SingularSensitivity { .. }) => {}
            Err(e) => return Err(e),
        }
        step *= config.contraction;
    }
    Err(SmiError::LineSearchFailure {
        backtracks: config.max_backtracks,
    })
}

fn initial_precoder<T: Real>(
    corr: &CorrelationPair<T>,
    scenario: &Scenario<T>,
    config: &OptimizerConfig<T>,
) -> Result<Precoder<T>> {
    let k = scenario.n_targets;
    let p = scenario.power_budget;
    match config.init {
        Init::Eigenbeam => Precoder::eigenbeam(corr, k, p),
        Init::ScaledRandom => Ok(Precoder::scaled_random(scenario.n_tx, k, p, config.seed)),
    }
}

/// Riemannian steepest ascent of the configured objective from the
/// configured start point.
pub fn optimize_precoder<T: Real>(
    corr: &CorrelationPair<T>,
    scenario: &Scenario<T>,
    config: &OptimizerConfig<T>,
) -> Result<OptimizerTrace<T>> {
    let start = initial_precoder(corr, scenario, config)?;
    optimize_from(corr, scenario, config, start)
}

/// As [`optimize_precoder`], starting at a caller-supplied point rescaled
/// onto the sphere.
pub fn optimize_from<T: Real>(
    corr: &CorrelationPair<T>,
    scenario: &Scenario<T>,
    config: &OptimizerConfig<T>,
    start: Precoder<T>,
) -> Result<OptimizerTrace<T>> {
    scenario.validate()?;
    config.armijo.validate()?;
    let power = scenario.power_budget;
    let objective = config.objective;
    let eval = |p: &Precoder<T>| objective.value(corr, p, scenario);

    let mut f = start.scaled_to(power);
    if !(f.power() > T::zero()) {
        return Err(SmiError::InvalidArgument("initial precoder is zero".into()));
    }
    let mut value = eval(&f)?;
    let mut rgrad = riemannian_gradient(&f, &objective.gradient(corr, &f, scenario)?, power)?;
    let mut records = vec![IterationRecord {
        iter: 0,
        objective: value,
        grad_norm: rgrad.norm(),
        step: T::zero(),
        backtracks: 0,
    }];

    let mut termination = Termination::MaxIters;
    for iter in 1..=config.max_iters {
        if rgrad.norm() <= config.grad_norm_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let accepted = match armijo_search(eval, &f, value, &rgrad, &rgrad, power, &config.armijo) {
            Ok(s) => s,
            Err(SmiError::LineSearchFailure { .. }) => {
                termination = Termination::LineSearchFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        f = accepted.precoder;
        value = accepted.value;
        rgrad = riemannian_gradient(&f, &objective.gradient(corr, &f, scenario)?, power)?;
        records.push(IterationRecord {
            iter,
            objective: value,
            grad_norm: rgrad.norm(),
            step: accepted.step,
            backtracks: accepted.backtracks,
        });
    }
    if termination == Termination::MaxIters && rgrad.norm() <= config.grad_norm_tol {
        termination = Termination::GradientTolerance;
    }
    Ok(OptimizerTrace {
        records,
        precoder: f,
        termination,
    })
}

/// Maximises the upper bound with the same machinery.
pub fn baseline_ub_precoder<T: Real>(
    corr: &CorrelationPair<T>,
    scenario: &Scenario<T>,
    config: &OptimizerConfig<T>,
) -> Result<OptimizerTrace<T>> {
    let cfg = OptimizerConfig {
        objective: Objective::UpperBoundSmi,
        ..*config
    };
    optimize_precoder(corr, scenario, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_gradient_projects_to_zero() {
        let f = Precoder::<f64>::scaled_random(4, 2, 2.0, 1);
        let g = scale(f.matrix(), 3.5);
        let r = riemannian_gradient(&f, &g, 2.0).unwrap();
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn tangent_gradient_unchanged() {
        let f = Precoder::<f64>::scaled_random(4, 2, 2.0, 1);
        let g0 = Precoder::<f64>::scaled_random(4, 2, 1.0, 2).into_matrix();
        let g = riemannian_gradient(&f, &g0, 2.0).unwrap();
        let again = riemannian_gradient(&f, &g, 2.0).unwrap();
        assert!((again - &g).norm() < 1e-14);
    }

    #[test]
    fn off_sphere_rejected() {
        let f = Precoder::<f64>::scaled_random(4, 2, 2.0, 1);
        assert!(matches!(
            riemannian_gradient(&f, f.matrix(), 3.0),
            Err(SmiError::OffSphere { .. })
        ));
    }

    #[test]
    fn retract_identity_and_zero() {
        let f = Precoder::<f64>::scaled_random(3, 2, 1.5, 3);
        let r = retract(&f, &CMat::zeros(3, 2), 1.5).unwrap();
        assert!((r.matrix() - f.matrix()).norm() < 1e-14);
        let neg = scale(f.matrix(), -1.0);
        assert!(matches!(
            retract(&f, &neg, 1.5),
            Err(SmiError::ZeroRetraction)
        ));
    }

    #[test]
    fn armijo_rejects_descent_direction() {
        let f = Precoder::<f64>::scaled_random(3, 2, 1.0, 3);
        let g = Precoder::<f64>::scaled_random(3, 2, 1.0, 4).into_matrix();
        let d = scale(&g, -1.0);
        let res = armijo_search(|_| Ok(0.0), &f, 0.0, &d, &g, 1.0, &ArmijoConfig::default());
        assert!(res.is_err());
    }

    #[test]
    fn armijo_failure_reported() {
        let f = Precoder::<f64>::scaled_random(3, 2, 1.0, 3);
        let g = riemannian_gradient(
            &f,
            &Precoder::<f64>::scaled_random(3, 2, 1.0, 4).into_matrix(),
            1.0,
        )
        .unwrap();
        let cfg = ArmijoConfig {
            max_backtracks: 5,
            ..ArmijoConfig::default()
        };
        let res = armijo_search(|_| Ok(-1.0), &f, 0.0, &g, &g, 1.0, &cfg);
        assert!(matches!(
            res,
            Err(SmiError::LineSearchFailure { backtracks: 5 })
        ));
    }
}
