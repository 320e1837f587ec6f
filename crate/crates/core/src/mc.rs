//! Monte-Carlo reference for the SMI expectation over random signals.
//!
//! Each trial draws `S ∈ C^{K×N_S}` with i.i.d. `CN(0, 1/N_S)` entries and
//! evaluates `log det(I + σ⁻²(R_R ⊗ R_T^{1/2} F S Sᴴ Fᴴ R_T^{1/2}))`.
//! Trial `i` uses ChaCha stream `i` under the master seed, so the estimate
//! depends only on `(seed, n_trials)` and not on how rayon schedules work.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Result, SmiError};
use crate::linalg::HermitianEigen;
use crate::model::{receive_eigenvalues, shaped_precoder, CorrelationPair, Precoder, Scenario};
use crate::rmt::check_dims;
use crate::scalar::{CMat, Real};

/// Largest `N_T · N_R` for which the explicit Kronecker path is allowed.
pub const KRON_DIRECT_MAX_DIM: usize = 64;

/// One realisation of the transmitted symbol block.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSignal<T: Real> {
    /// `K × N_S`.
    pub s: CMat<T>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealizationPath {
    /// Explicit `N_T N_R`-dimensional determinant.
    KronDirect,
    /// Sum over receive eigenmodes of `N_T`-dimensional determinants.
    EigenSum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport<T: Real> {
    pub mean_nats: T,
    pub stderr: T,
    pub n_trials: usize,
    pub seed: u64,
    pub per_trial_path: RealizationPath,
}

fn signal_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_signal<T: Real>(k: usize, n_frames: usize, rng: &mut ChaCha8Rng) -> CMat<T> {
    let sd = (0.5 / n_frames as f64).sqrt();
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut s = CMat::zeros(k, n_frames);
    for c in 0..n_frames {
        for r in 0..k {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s[(r, c)] = Complex::new(T::lit(sd * re), T::lit(sd * im));
        }
    }
    s
}

/// Draws `S` with i.i.d. `CN(0, 1/N_S)` entries.
pub fn sample_signal<T: Real>(k: usize, n_frames: usize, seed: u64) -> Result<RandomSignal<T>> {
    if k == 0 || n_frames < k {
        return Err(SmiError::InvalidArgument(format!(
            "need n_frames ({n_frames}) >= k ({k}) >= 1"
        )));
    }
    let mut rng = signal_rng(seed, 0);
    Ok(RandomSignal {
        s: draw_signal(k, n_frames, &mut rng),
        seed,
    })
}

/// `log det(I + X)` for Hermitian PSD `X`, via its eigenvalues.
fn log_det_eye_plus<T: Real>(x: &CMat<T>) -> Result<T> {
    let eig = HermitianEigen::new(x)?;
    Ok(eig
        .clamped_values()
        .iter()
        .fold(T::zero(), |acc, &v| acc + v.ln_1p()))
}

/// Conditional log-determinant for one fixed signal realisation.
pub fn smi_realization<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    signal: &RandomSignal<T>,
    scenario: &Scenario<T>,
) -> Result<T> {
    smi_realization_with(corr, precoder, signal, scenario, RealizationPath::EigenSum)
}

pub fn smi_realization_with<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    signal: &RandomSignal<T>,
    scenario: &Scenario<T>,
    path: RealizationPath,
) -> Result<T> {
    check_dims(corr, precoder, scenario)?;
    if signal.s.nrows() != precoder.n_streams() {
        return Err(SmiError::Dimension(format!(
            "signal has {} rows, precoder has {} columns",
            signal.s.nrows(),
            precoder.n_streams()
        )));
    }
    let shaped = shaped_precoder(corr, precoder)?;
    let x = &shaped * &signal.s;
    let value = match path {
        RealizationPath::EigenSum => {
            let lambdas = receive_eigenvalues(corr, scenario.noise_power)?;
            eigen_sum(&x, &lambdas)?
        }
        RealizationPath::KronDirect => {
            let n = corr.n_tx() * corr.n_rx();
            if n > KRON_DIRECT_MAX_DIM {
                return Err(SmiError::InvalidArgument(format!(
                    "explicit Kronecker path limited to N_T*N_R <= {KRON_DIRECT_MAX_DIM}, got {n}"
                )));
            }
            let inv_noise = Complex::new(T::one() / scenario.noise_power, T::zero());
            let t_s = &x * x.adjoint();
            let big = corr.r_rx().kronecker(&t_s) * inv_noise;
            log_det_eye_plus(&big)?
        }
    };
    if !value.is_finite() {
        return Err(SmiError::NonFiniteValue(
            "realisation log-determinant".into(),
        ));
    }
    Ok(value)
}

/// `Σ_j log det(I + λ_j X Xᴴ)`, using the smaller Gram of `X`.
fn eigen_sum<T: Real>(x: &CMat<T>, lambdas: &[T]) -> Result<T> {
    let gram = if x.nrows() <= x.ncols() {
        x * x.adjoint()
    } else {
        x.adjoint() * x
    };
    let mu = HermitianEigen::new(&gram)?.clamped_values();
    Ok(lambdas.iter().fold(T::zero(), |acc, &l| {
        if l == T::zero() {
            acc
        } else {
            acc + mu.iter().fold(T::zero(), |a, &m| a + (l * m).ln_1p())
        }
    }))
}

/// Sample mean and standard error of the SMI over `n_trials` independent
/// signal draws.
pub fn smi_monte_carlo<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
    scenario: &Scenario<T>,
    n_trials: usize,
    seed: u64,
) -> Result<McReport<T>> {
    if n_trials < 2 {
        return Err(SmiError::InvalidArgument(
            "n_trials must be at least 2".into(),
        ));
    }
    check_dims(corr, precoder, scenario)?;
    let k = precoder.n_streams();
    if k == 0 || scenario.n_frames < k {
        return Err(SmiError::InvalidArgument(format!(
            "need n_frames ({}) >= precoder streams ({k}) >= 1",
            scenario.n_frames
        )));
    }
    let shaped = shaped_precoder(corr, precoder)?;
    let lambdas = receive_eigenvalues(corr, scenario.noise_power)?;
    let n_frames = scenario.n_frames;

    let values: Vec<T> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = signal_rng(seed, trial);
            let s = draw_signal::<T>(k, n_frames, &mut rng);
            let v = eigen_sum(&(&shaped * s), &lambdas)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SmiError::NonFiniteValue(format!("trial {trial}")))
            }
        })
        .collect::<Result<_>>()?;

    let (mean, stderr) = mean_stderr(&values);
    Ok(McReport {
        mean_nats: mean,
        stderr,
        n_trials,
        seed,
        per_trial_path: RealizationPath::EigenSum,
    })
}

/// Mean and `sample_std / √n`, summed in index order.
pub fn mean_stderr<T: Real>(values: &[T]) -> (T, T) {
    let n = T::count(values.len());
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let ss = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    let var = ss / (n - T::one());
    (mean, (var / n).sqrt())
}

/// A `K × N_S` signal with `S Sᴴ = I` (scaled partial isometry), for which
/// the conditional SMI equals the upper bound.
pub fn isometric_signal<T: Real>(k: usize, n_frames: usize) -> Result<RandomSignal<T>> {
    if k == 0 || n_frames < k {
        return Err(SmiError::InvalidArgument("need n_frames >= k >= 1".into()));
    }
    // rows of the unitary DFT of size N_S, scaled so that S Sᴴ = I_K
    let n = n_frames as f64;
    let s = DMatrix::from_fn(k, n_frames, |r, c| {
        let arg = 2.0 * std::f64::consts::PI * (r * c) as f64 / n;
        Complex::new(T::lit(arg.cos()), T::lit(arg.sin()))
    });
    Ok(RandomSignal {
        s: s * Complex::new(T::lit(1.0 / n.sqrt()), T::zero()),
        seed: 0,
    })
}
