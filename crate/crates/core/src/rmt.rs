//! Closed-form SMI machinery built on the deterministic equivalent of the
//! random log-determinant.
//!
//! Every quantity here depends on the precoder only through the spectrum of
//! `T(F) = R_T^{1/2} F Fᴴ R_T^{1/2}` and on the receive side only through
//! the eigenvalues `λ_j` of `R_R / σ²`. The per-mode fixed point
//!
//! ```text
//! δ(ρ) = (1/N_S) Σ_i t_i / (1 + α t_i),    α = ρ / (1 + ρ δ(ρ))
//! ```
//!
//! has a unique non-negative root. Its right-hand side is increasing in δ
//! with slope `(1/N_S) Σ (α t_i / (1 + α t_i))² < 1`, so iterating from
//! `tr(T)/N_S` decreases monotonically to the root.

use crate::error::{Result, SmiError};
use crate::linalg::{numerical_rank, HermitianEigen};
use crate::model::{
    effective_gram, receive_eigenvalues, shaped_precoder, CorrelationPair, Precoder, Scenario,
};
use crate::scalar::{CMat, Real};

/// Residual tolerance for the fixed point in double precision.
pub const DELTA_TOL: f64 = 1e-12;
/// Iteration budget before falling back to bisection.
pub const MAX_FIXED_POINT_ITERS: usize = 1000;
const MAX_BISECTION_ITERS: usize = 400;

/// Residual tolerance usable at the precision of `T`.
pub fn default_tol<T: Real>() -> T {
    T::lit(DELTA_TOL).max(T::machine_eps() * T::lit(64.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    FixedPointIteration,
    Bisection,
}

/// Root `δ(ρ)` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointSolution<T: Real> {
    pub rho: T,
    pub delta: T,
    /// `|δ − RHS(δ)|`.
    pub residual: T,
    pub iterations: usize,
    pub method: SolveMethod,
}

impl<T: Real> FixedPointSolution<T> {
    /// `α(ρ) = ρ / (1 + ρ δ(ρ))`.
    pub fn alpha(&self) -> T {
        self.rho / (T::one() + self.rho * self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmiMethod {
    Asymptotic,
    UpperBound,
    LowerBound,
    MonteCarlo,
    ExactRealization,
}

/// An SMI value in nats tagged with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmiEstimate<T: Real> {
    pub nats: T,
    pub method: SmiMethod,
    /// Standard error; zero for the closed forms.
    pub stderr: T,
    pub scenario: Scenario<T>,
}

impl<T: Real> SmiEstimate<T> {
    fn closed(nats: T, method: SmiMethod, scenario: &Scenario<T>) -> Self {
        Self {
            nats,
            method,
            stderr: T::zero(),
            scenario: *scenario,
        }
    }

    pub fn bits(&self) -> T {
        self.nats / T::ln_2()
    }
}

/// `N_S − min{K, rank(FFᴴ)} ≤ ν_s ≤ N_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofBounds {
    pub lower: usize,
    pub upper: usize,
}

/// Sensing-DoF ratio along a decreasing noise sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DofEstimate<T: Real> {
    /// Ratio at the smallest noise power.
    pub value: T,
    /// `(σ², N_S · I_asym / I_upper)` for every sweep point.
    pub sequence: Vec<(T, T)>,
}

fn rhs<T: Real>(t_eigs: &[T], rho: T, n_frames: T, delta: T) -> T {
    let d = T::one() + rho * delta;
    t_eigs
        .iter()
        .fold(T::zero(), |acc, &t| acc + t * d / (d + rho * t))
        / n_frames
}

/// Slope of the right-hand side at `delta`.
fn rhs_slope<T: Real>(t_eigs: &[T], rho: T, n_frames: T, delta: T) -> T {
    let a = rho / (T::one() + rho * delta);
    t_eigs.iter().fold(T::zero(), |acc, &t| {
        let x = a * t / (T::one() + a * t);
        acc + x * x
    }) / n_frames
}

fn check_inputs<T: Real>(rho: T, n_frames: T) -> Result<()> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(SmiError::InvalidArgument(
            "rho must be finite and non-negative".into(),
        ));
    }
    if !(n_frames > T::zero()) {
        return Err(SmiError::InvalidArgument(
            "n_frames must be positive".into(),
        ));
    }
    Ok(())
}

/// Solves for `δ(ρ)` given the Gram matrix `T`.
pub fn solve_delta<T: Real>(
    gram: &CMat<T>,
    rho: T,
    n_frames: usize,
    tol: T,
) -> Result<FixedPointSolution<T>> {
    if n_frames == 0 {
        return Err(SmiError::InvalidArgument(
            "n_frames must be positive".into(),
        ));
    }
    let eig = HermitianEigen::new(gram)?;
    eig.check_psd()?;
    solve_delta_spectrum(&eig.clamped_values(), rho, T::count(n_frames), tol)
}

/// Fixed-point iteration with bisection fallback, on the spectrum of `T`.
/// `n_frames` may be fractional.
pub fn solve_delta_spectrum<T: Real>(
    t_eigs: &[T],
    rho: T,
    n_frames: T,
    tol: T,
) -> Result<FixedPointSolution<T>> {
    match solve_delta_with(t_eigs, rho, n_frames, tol, SolveMethod::FixedPointIteration) {
        Ok(sol) => Ok(sol),
        Err(SmiError::NoConvergence { .. }) => {
            solve_delta_with(t_eigs, rho, n_frames, tol, SolveMethod::Bisection)
        }
        Err(e) => Err(e),
    }
}

/// Runs exactly one solver. Fixed-point iteration reports `NoConvergence`
/// when its error bound `residual / (1 − slope)` stays above `tol` for
/// `MAX_FIXED_POINT_ITERS` steps.
pub fn solve_delta_with<T: Real>(
    t_eigs: &[T],
    rho: T,
    n_frames: T,
    tol: T,
    method: SolveMethod,
) -> Result<FixedPointSolution<T>> {
    check_inputs(rho, n_frames)?;
    let trace = t_eigs
        .iter()
        .fold(T::zero(), |acc, &t| acc + t.max(T::zero()));
    let start = trace / n_frames;
    if trace == T::zero() || rho == T::zero() {
        return Ok(FixedPointSolution {
            rho,
            delta: start,
            residual: T::zero(),
            iterations: 0,
            method,
        });
    }
    let scale = |d: T| T::one().max(d);
    match method {
        SolveMethod::FixedPointIteration => {
            let mut delta = start;
            let mut residual = T::zero();
            for it in 0..MAX_FIXED_POINT_ITERS {
                let next = rhs(t_eigs, rho, n_frames, delta);
                if !next.is_finite() {
                    return Err(SmiError::NonFinite { iteration: it });
                }
                residual = (delta - next).abs();
                let contraction = T::one() - rhs_slope(t_eigs, rho, n_frames, next);
                if residual <= tol * scale(next) * contraction {
                    let residual = (next - rhs(t_eigs, rho, n_frames, next)).abs();
                    return Ok(FixedPointSolution {
                        rho,
                        delta: next,
                        residual,
                        iterations: it + 1,
                        method,
                    });
                }
                delta = next;
            }
            Err(SmiError::NoConvergence {
                residual: residual.as_f64(),
                tol: tol.as_f64(),
            })
        }
        SolveMethod::Bisection => {
            let g = |d: T| d - rhs(t_eigs, rho, n_frames, d);
            let mut lo = T::zero();
            let mut hi = start;
            let mut iterations = 0;
            while iterations < MAX_BISECTION_ITERS && hi - lo > T::lit(2.0) * T::machine_eps() * hi
            {
                let mid = (lo + hi) * T::lit(0.5);
                if mid <= lo || mid >= hi {
                    break;
                }
                let v = g(mid);
                if !v.is_finite() {
                    return Err(SmiError::NonFinite {
                        iteration: iterations,
                    });
                }
                if v > T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                }
                iterations += 1;
            }
            let (glo, ghi) = (g(lo).abs(), g(hi).abs());
            let (delta, residual) = if glo <= ghi { (lo, glo) } else { (hi, ghi) };
            if residual > tol * scale(delta) {
                return Err(SmiError::NoConvergence {
                    residual: residual.as_f64(),
                    tol: tol.as_f64(),
                });
            }
            Ok(FixedPointSolution {
                rho,
                delta,
                residual,
                iterations,
                method,
            })
        }
    }
}

/// Per-mode term `ϱ̄_j` from the spectrum of `T`, with `N_S` treated as real.
pub fn mode_term<T: Real>(t_eigs: &[T], lambda: T, delta: T, n_frames: T) -> T {
    if lambda == T::zero() {
        return T::zero();
    }
    let ld = lambda * delta;
    let a = lambda / (T::one() + ld);
    let logdet = t_eigs
        .iter()
        .fold(T::zero(), |acc, &t| acc + (a * t).ln_1p());
    logdet + n_frames * (ld.ln_1p() - ld / (T::one() + ld))
}

/// Spectral ingredients shared by the closed forms and the gradient.
#[derive(Debug, Clone)]
pub(crate) struct Spectral<T: Real> {
    pub gram: HermitianEigen<T>,
    pub t_eigs: Vec<T>,
    pub lambdas: Vec<T>,
}

pub(crate) fn check_dims<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<()> {
    scenario.validate()?;
    if corr.n_tx() != scenario.n_tx || corr.n_rx() != scenario.n_rx {
        return Err(SmiError::Dimension(format!(
            "correlations are {}x{} (tx) and {}x{} (rx), scenario has n_tx={} n_rx={}",
            corr.n_tx(),
            corr.n_tx(),
            corr.n_rx(),
            corr.n_rx(),
            scenario.n_tx,
            scenario.n_rx
        )));
    }
    if precoder.n_tx() != scenario.n_tx {
        return Err(SmiError::Dimension(format!(
            "precoder has {} rows, scenario has n_tx={}",
            precoder.n_tx(),
            scenario.n_tx
        )));
    }
    Ok(())
}

pub(crate) fn spectral<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<Spectral<T>> {
    check_dims(corr, precoder, scenario)?;
    let gram = HermitianEigen::new(&effective_gram(corr, precoder)?)?;
    gram.check_psd()?;
    let t_eigs = gram.clamped_values();
    let lambdas = receive_eigenvalues(corr, scenario.noise_power)?;
    Ok(Spectral {
        gram,
        t_eigs,
        lambdas,
    })
}

/// Sums `ϱ̄_j` over the receive modes; returns the per-mode fixed points.
pub(crate) fn asymptotic_from_spectrum<T: Real>(
    t_eigs: &[T],
    lambdas: &[T],
    n_frames: T,
) -> Result<(T, Vec<Option<FixedPointSolution<T>>>)> {
    let tol = default_tol::<T>();
    let mut total = T::zero();
    let mut sols = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if lambda == T::zero() {
            sols.push(None);
            continue;
        }
        let sol = solve_delta_spectrum(t_eigs, lambda, n_frames, tol)?;
        total += mode_term(t_eigs, lambda, sol.delta, n_frames);
        sols.push(Some(sol));
    }
    Ok((total, sols))
}

/// Deterministic-equivalent SMI `Σ_j ϱ̄_j(F)`.
pub fn smi_asymptotic<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<SmiEstimate<T>> {
    let sp = spectral(corr, precoder, scenario)?;
    let (nats, _) = asymptotic_from_spectrum(&sp.t_eigs, &sp.lambdas, scenario.frames())?;
    Ok(SmiEstimate::closed(nats, SmiMethod::Asymptotic, scenario))
}

/// Deterministic-equivalent SMI with a real-valued frame count.
pub fn smi_asymptotic_at_frames<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
    n_frames: T,
) -> Result<T> {
    let sp = spectral(corr, precoder, scenario)?;
    Ok(asymptotic_from_spectrum(&sp.t_eigs, &sp.lambdas, n_frames)?.0)
}

pub(crate) fn upper_from_spectrum<T: Real>(t_eigs: &[T], lambdas: &[T]) -> T {
    lambdas.iter().fold(T::zero(), |acc, &l| {
        acc + t_eigs.iter().fold(T::zero(), |a, &t| a + (l * t).ln_1p())
    })
}

/// Jensen upper bound `Σ_j log det(I + λ_j T(F))`, the SMI of a
/// deterministic signal with identity sample covariance.
pub fn smi_upper_bound<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<SmiEstimate<T>> {
    let sp = spectral(corr, precoder, scenario)?;
    Ok(SmiEstimate::closed(
        upper_from_spectrum(&sp.t_eigs, &sp.lambdas),
        SmiMethod::UpperBound,
        scenario,
    ))
}

/// `(N_S − min{K, rank(FFᴴ)}) / N_S` times the upper bound.
pub fn smi_lower_bound<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<SmiEstimate<T>> {
    let upper = smi_upper_bound(corr, precoder, scenario)?;
    let b = dof_bounds(scenario, precoder)?;
    let factor = T::count(b.lower) / scenario.frames();
    Ok(SmiEstimate::closed(
        factor * upper.nats,
        SmiMethod::LowerBound,
        scenario,
    ))
}

pub fn dof_bounds<T: Real>(scenario: &Scenario<T>, precoder: &Precoder<T>) -> Result<DofBounds> {
    if scenario.n_frames < scenario.n_targets {
        return Err(SmiError::InvalidScenario(format!(
            "n_frames ({}) must be at least n_targets ({})",
            scenario.n_frames, scenario.n_targets
        )));
    }
    let rank = precoder.rank()?;
    let loss = scenario.n_targets.min(rank);
    Ok(DofBounds {
        lower: scenario.n_frames.saturating_sub(loss),
        upper: scenario.n_frames,
    })
}

/// `N_S · I_asym / I_upper` along a strictly decreasing noise sweep.
pub fn dof_estimate<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
    noise_sweep: &[T],
) -> Result<DofEstimate<T>> {
    if noise_sweep.len() < 3
        || noise_sweep.windows(2).any(|w| !(w[1] < w[0]))
        || noise_sweep.iter().any(|&s| !(s > T::zero()))
    {
        return Err(SmiError::BadNoiseSweep);
    }
    check_dims(corr, precoder, scenario)?;
    let shaped = shaped_precoder(corr, precoder)?;
    let gram = HermitianEigen::new(&(&shaped * shaped.adjoint()))?;
    let t_eigs = gram.clamped_values();
    let mut sequence = Vec::with_capacity(noise_sweep.len());
    for &sigma2 in noise_sweep {
        let lambdas = receive_eigenvalues(corr, sigma2)?;
        let upper = upper_from_spectrum(&t_eigs, &lambdas);
        if !(upper > T::zero()) {
            return Err(SmiError::UndefinedDof);
        }
        let (asym, _) = asymptotic_from_spectrum(&t_eigs, &lambdas, scenario.frames())?;
        sequence.push((sigma2, scenario.frames() * asym / upper));
    }
    let value = sequence.last().map(|&(_, v)| v).unwrap_or_else(T::zero);
    Ok(DofEstimate { value, sequence })
}

/// `∂/∂N_S Σ_j ϱ̄_j = Σ_j [log(1+λ_j δ_j) − λ_j δ_j / (1+λ_j δ_j)]`, always ≥ 0.
pub fn smi_ns_derivative<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<T> {
    let sp = spectral(corr, precoder, scenario)?;
    let (_, sols) = asymptotic_from_spectrum(&sp.t_eigs, &sp.lambdas, scenario.frames())?;
    Ok(sols
        .iter()
        .zip(&sp.lambdas)
        .filter_map(|(s, &l)| s.map(|s| l * s.delta))
        .fold(T::zero(), |acc, x| {
            acc + (x.ln_1p() - x / (T::one() + x)).max(T::zero())
        }))
}

/// Numerical rank of `T(F)`.
pub fn gram_rank<T: Real>(t_eigs: &[T]) -> usize {
    numerical_rank(t_eigs)
}
