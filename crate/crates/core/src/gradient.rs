//! Wirtinger gradients (`∂/∂F*`) of the SMI objectives with respect to the
//! precoder.
//!
//! With `α_j = λ_j / (1 + λ_j δ_j)`, `M_j = (I + α_j T)⁻¹` and `Δ'_j` the
//! derivative of the fixed point, the chain rule applied to
//! `ϱ̄_j = log det(I + α_j T) + N_S log(1 + λ_j δ_j) − N_S λ_j δ_j / (1 + λ_j δ_j)`
//! gives
//!
//! ```text
//! ∇ϱ̄_j = [−α_j² tr(M_j T) + N_S α_j − N_S λ_j / (1 + λ_j δ_j)²] Δ'_j
//!        + α_j R_T^{1/2} M_j R_T^{1/2} F.
//! ```
//!
//! The bracket vanishes at the fixed point, which the finite-difference
//! tests confirm; the full expansion is kept so the sensitivity of δ stays
//! part of the computation.

use num_complex::Complex;

use crate::error::{Result, SmiError};
use crate::linalg::{max_abs, real, HermitianEigen};
use crate::model::{CorrelationPair, Precoder, Scenario};
use crate::rmt::{asymptotic_from_spectrum, spectral, FixedPointSolution};
use crate::scalar::{CMat, Real};

#[derive(Debug, Clone)]
pub struct GradientReport<T: Real> {
    /// `∂L/∂F*`.
    pub grad: CMat<T>,
    /// `∇ϱ̄_j` per receive mode (zero for vanishing modes).
    pub per_term: Option<Vec<CMat<T>>>,
    /// Max relative deviation from central differences, when checked.
    pub fd_check: Option<T>,
}

impl<T: Real> GradientReport<T> {
    /// Compares against central differences of `objective` and stores the
    /// deviation in `fd_check`.
    pub fn with_fd_check<F>(mut self, objective: F, precoder: &Precoder<T>, step: T) -> Result<Self>
    where
        F: Fn(&Precoder<T>) -> Result<T>,
    {
        let fd = finite_difference_gradient(objective, precoder, step)?;
        self.fd_check = Some(relative_deviation(&self.grad, &fd));
        Ok(self)
    }
}

/// `max |a − b|` divided by `max(1, max |a|)`.
pub fn relative_deviation<T: Real>(analytic: &CMat<T>, reference: &CMat<T>) -> T {
    max_abs(&(analytic - reference)) / T::one().max(max_abs(analytic))
}

/// Pieces of `T(F)` reused by every mode.
struct GramParts<'a, T: Real> {
    r_sqrt: &'a CMat<T>,
    eig: &'a HermitianEigen<T>,
    t_eigs: &'a [T],
    f: &'a CMat<T>,
}

impl<T: Real> GramParts<'_, T> {
    /// `R_T^{1/2} g(T) R_T^{1/2} F` for a spectral function `g`.
    fn sandwich(&self, g: impl Fn(T) -> T) -> CMat<T> {
        self.r_sqrt * (self.eig.apply(g) * (self.r_sqrt * self.f))
    }

    fn delta_gradient(&self, sol: &FixedPointSolution<T>, n_frames: T) -> Result<CMat<T>> {
        let a = sol.alpha();
        if a == T::zero() {
            // ρ = 0: R_T F / N_S
            return Ok(self.sandwich(|_| T::one()) * real(T::one() / n_frames));
        }
        let tm_sq = self.t_eigs.iter().fold(T::zero(), |acc, &t| {
            let x = t / (T::one() + a * t);
            acc + x * x
        });
        let denom = n_frames - a * a * tm_sq;
        if !(denom > T::lit(1e3) * T::machine_eps() * n_frames) {
            return Err(SmiError::SingularSensitivity {
                denominator: denom.as_f64(),
            });
        }
        let num = self.sandwich(|t| {
            let m = T::one() / (T::one() + a * t.max(T::zero()));
            m * m
        });
        Ok(num * real(T::one() / denom))
    }
}

/// `Δ'_ρ = ∂δ(ρ)/∂F*`.
pub fn delta_gradient<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    rho: T,
    fixed_point: &FixedPointSolution<T>,
    scenario: &Scenario<T>,
) -> Result<CMat<T>> {
    if fixed_point.rho != rho {
        return Err(SmiError::InvalidArgument(
            "fixed point was solved for a different load".into(),
        ));
    }
    let sp = spectral(corr, precoder, scenario)?;
    let parts = GramParts {
        r_sqrt: corr.r_tx_sqrt(),
        eig: &sp.gram,
        t_eigs: &sp.t_eigs,
        f: precoder.matrix(),
    };
    parts.delta_gradient(fixed_point, scenario.frames())
}

/// Gradient of the deterministic-equivalent SMI `L(F) = Σ_j ϱ̄_j(F)`.
pub fn euclidean_gradient<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<GradientReport<T>> {
    let sp = spectral(corr, precoder, scenario)?;
    let n_frames = scenario.frames();
    let (_, sols) = asymptotic_from_spectrum(&sp.t_eigs, &sp.lambdas, n_frames)?;
    let parts = GramParts {
        r_sqrt: corr.r_tx_sqrt(),
        eig: &sp.gram,
        t_eigs: &sp.t_eigs,
        f: precoder.matrix(),
    };
    let shape = precoder.matrix().shape();
    let mut grad = CMat::zeros(shape.0, shape.1);
    let mut per_term = Vec::with_capacity(sols.len());
    for (sol, &lambda) in sols.iter().zip(&sp.lambdas) {
        let Some(sol) = sol else {
            per_term.push(CMat::zeros(shape.0, shape.1));
            continue;
        };
        let a = sol.alpha();
        let one_plus = T::one() + lambda * sol.delta;
        let tr_mt = sp
            .t_eigs
            .iter()
            .fold(T::zero(), |acc, &t| acc + t / (T::one() + a * t));
        let coeff = -(a * a) * tr_mt + n_frames * a - n_frames * lambda / (one_plus * one_plus);
        let dprime = parts.delta_gradient(sol, n_frames)?;
        let direct = parts.sandwich(|t| T::one() / (T::one() + a * t));
        let term = dprime * real(coeff) + direct * real(a);
        grad += &term;
        per_term.push(term);
    }
    Ok(GradientReport {
        grad,
        per_term: Some(per_term),
        fd_check: None,
    })
}

/// Gradient of the Jensen upper bound:
/// `Σ_j λ_j R_T^{1/2} (I + λ_j T)⁻¹ R_T^{1/2} F`.
pub fn upper_bound_gradient<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
) -> Result<GradientReport<T>> {
    let sp = spectral(corr, precoder, scenario)?;
    let lambdas = &sp.lambdas;
    // one spectral function summing all modes keeps this O(N_T³)
    let g = sp.gram.apply(|t| {
        let t = t.max(T::zero());
        lambdas
            .iter()
            .fold(T::zero(), |acc, &l| acc + l / (T::one() + l * t))
    });
    let r = corr.r_tx_sqrt();
    let grad = r * (g * (r * precoder.matrix()));
    Ok(GradientReport {
        grad,
        per_term: None,
        fd_check: None,
    })
}

/// Central differences along the real and imaginary part of every entry,
/// combined as `(∂/∂Re + i ∂/∂Im) / 2`.
pub fn finite_difference_gradient<T, F>(
    objective: F,
    precoder: &Precoder<T>,
    step: T,
) -> Result<CMat<T>>
where
    T: Real,
    F: Fn(&Precoder<T>) -> Result<T>,
{
    if !(step > T::zero()) {
        return Err(SmiError::InvalidArgument(
            "finite-difference step must be positive".into(),
        ));
    }
    let base = precoder.matrix();
    let (rows, cols) = base.shape();
    let two_h = step + step;
    let eval = |m: CMat<T>| -> Result<T> {
        let v = objective(&Precoder::new(m))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SmiError::NonFiniteValue(
                "objective at perturbed point".into(),
            ))
        }
    };
    let mut out = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let mut partial = [T::zero(); 2];
            for (axis, unit) in [Complex::new(step, T::zero()), Complex::new(T::zero(), step)]
                .into_iter()
                .enumerate()
            {
                let mut plus = base.clone();
                plus[(r, c)] += unit;
                let mut minus = base.clone();
                minus[(r, c)] -= unit;
                partial[axis] = (eval(plus)? - eval(minus)?) / two_h;
            }
            out[(r, c)] = Complex::new(partial[0], partial[1]) * real(T::lit(0.5));
        }
    }
    Ok(out)
}
