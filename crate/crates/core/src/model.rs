//! Sensing scenario construction: array responses, Kronecker correlation
//! factors, precoders and unit conversions.

use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SmiError};
use crate::linalg::{
    frob_sq, hermitian_part, numerical_rank, psd_sqrt, rank_rtol, real, scale, HermitianEigen,
};
use crate::scalar::{CMat, CVec, Real};

/// Dimensions, powers and noise level of one sensing configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario<T: Real> {
    /// Transmit antennas.
    pub n_tx: usize,
    /// Receive antennas.
    pub n_rx: usize,
    /// Number of targets; also the number of precoder streams.
    pub n_targets: usize,
    /// Frames per coherent processing interval.
    pub n_frames: usize,
    /// Receiver noise power in watts.
    pub noise_power: T,
    /// Transmit power budget in watts.
    pub power_budget: T,
    pub carrier_hz: T,
    /// Per-target SNR, `P σ_k² / σ²`, in dB.
    pub snr_db: T,
}

impl<T: Real> Scenario<T> {
    /// Small configuration used for tests and CI sweeps: 8 TX, 4 RX, 3 targets.
    pub fn desk() -> Self {
        Self {
            n_tx: 8,
            n_rx: 4,
            n_targets: 3,
            n_frames: 16,
            noise_power: dbm_to_watts(T::lit(-90.0)),
            power_budget: dbm_to_watts(T::lit(30.0)),
            carrier_hz: T::lit(28e9),
            snr_db: T::lit(20.0),
        }
    }

    /// Full-size configuration: 32 TX, 16 RX, 7 targets, 32 frames.
    pub fn full_scale() -> Self {
        Self {
            n_tx: 32,
            n_rx: 16,
            n_targets: 7,
            n_frames: 32,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_targets == 0 || self.n_frames == 0 {
            return Err(SmiError::InvalidScenario(
                "antenna, target and frame counts must be positive".into(),
            ));
        }
        if self.n_frames < self.n_targets {
            return Err(SmiError::InvalidScenario(format!(
                "n_frames ({}) must be at least n_targets ({})",
                self.n_frames, self.n_targets
            )));
        }
        let positive = |x: T| x.is_finite() && x > T::zero();
        if !positive(self.noise_power) || !positive(self.power_budget) || !positive(self.carrier_hz)
        {
            return Err(SmiError::InvalidScenario(
                "noise power, power budget and carrier must be positive".into(),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(SmiError::InvalidScenario("snr_db must be finite".into()));
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> T {
        db_to_linear(self.snr_db)
    }

    /// Reflection variance that realises `snr_db` for every target:
    /// `σ_k² = SNR · σ² / P`.
    pub fn reflect_var(&self) -> T {
        self.snr_linear() * self.noise_power / self.power_budget
    }

    /// Frame count as a real number.
    pub fn frames(&self) -> T {
        T::count(self.n_frames)
    }
}

/// Angles and reflection variance of one point target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target<T: Real> {
    /// Angle of departure, radians.
    pub aod: T,
    /// Angle of arrival, radians.
    pub aoa: T,
    /// Variance of the complex reflection coefficient.
    pub reflect_var: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet<T: Real> {
    targets: Vec<Target<T>>,
}

impl<T: Real> TargetSet<T> {
    pub fn new(targets: Vec<Target<T>>) -> Result<Self> {
        for (k, t) in targets.iter().enumerate() {
            if !t.aod.is_finite() || !t.aoa.is_finite() {
                return Err(SmiError::InvalidArgument(format!(
                    "target {k}: non-finite angle"
                )));
            }
            if !(t.reflect_var >= T::zero()) || !t.reflect_var.is_finite() {
                return Err(SmiError::InvalidArgument(format!(
                    "target {k}: reflection variance must be finite and non-negative"
                )));
            }
        }
        Ok(Self { targets })
    }

    /// `k` targets with AOD/AOA drawn uniformly in `[lo_deg, hi_deg]`.
    pub fn auto(k: usize, lo_deg: T, hi_deg: T, reflect_var: T, seed: u64) -> Result<Self> {
        if !(lo_deg <= hi_deg) {
            return Err(SmiError::InvalidArgument("angle range is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = lo_deg.as_f64();
        let hi = hi_deg.as_f64();
        let draw = |rng: &mut ChaCha8Rng| {
            let u: f64 = rng.random();
            T::lit((lo + (hi - lo) * u).to_radians())
        };
        let targets = (0..k)
            .map(|_| {
                let aod = draw(&mut rng);
                let aoa = draw(&mut rng);
                Target {
                    aod,
                    aoa,
                    reflect_var,
                }
            })
            .collect();
        Self::new(targets)
    }

    /// Same angles, every reflection variance replaced by `var`.
    pub fn with_reflect_var(&self, var: T) -> Self {
        Self {
            targets: self
                .targets
                .iter()
                .map(|t| Target {
                    reflect_var: var,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn targets(&self) -> &[Target<T>] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Transmit and receive correlation factors of `E[hhᴴ] ≈ R_R ⊗ R_T`.
#[derive(Debug, Clone)]
pub struct CorrelationPair<T: Real> {
    r_tx: CMat<T>,
    r_rx: CMat<T>,
    r_tx_sqrt: CMat<T>,
    max_rank: usize,
}

impl<T: Real> CorrelationPair<T> {
    /// Validates Hermitian PSD factors of rank at most `max_rank` and caches
    /// the transmit square root.
    pub fn new(r_tx: CMat<T>, r_rx: CMat<T>, max_rank: usize) -> Result<Self> {
        for (name, m) in [("r_tx", &r_tx), ("r_rx", &r_rx)] {
            if m.nrows() != m.ncols() || m.nrows() == 0 {
                return Err(SmiError::Dimension(format!(
                    "{name} must be square and non-empty"
                )));
            }
            let asym = (m - m.adjoint()).norm();
            if asym > T::lit(1e-12).max(T::lit(16.0) * T::machine_eps()) * m.norm() {
                return Err(SmiError::InvalidArgument(format!(
                    "{name} is not Hermitian"
                )));
            }
            let eig = HermitianEigen::new(m)?;
            eig.check_psd()?;
            let rank = eig.rank();
            if rank > max_rank {
                return Err(SmiError::RankExceeded {
                    found: rank,
                    max: max_rank,
                });
            }
        }
        let r_tx = hermitian_part(&r_tx);
        let r_rx = hermitian_part(&r_rx);
        let r_tx_sqrt = psd_sqrt(&r_tx)?;
        Ok(Self {
            r_tx,
            r_rx,
            r_tx_sqrt,
            max_rank,
        })
    }

    pub fn r_tx(&self) -> &CMat<T> {
        &self.r_tx
    }

    pub fn r_rx(&self) -> &CMat<T> {
        &self.r_rx
    }

    pub fn r_tx_sqrt(&self) -> &CMat<T> {
        &self.r_tx_sqrt
    }

    /// Rank limit (the target count) the pair was validated against.
    pub fn max_rank(&self) -> usize {
        self.max_rank
    }

    pub fn n_tx(&self) -> usize {
        self.r_tx.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.r_rx.nrows()
    }

    /// Same transmit factor, receive factor multiplied by `c > 0`.
    pub fn with_rx_scaled(&self, c: T) -> Self {
        Self {
            r_rx: scale(&self.r_rx, c),
            ..self.clone()
        }
    }
}

/// Transmit precoder `F ∈ C^{N_T × K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder<T: Real> {
    f: CMat<T>,
}

impl<T: Real> Precoder<T> {
    pub fn new(f: CMat<T>) -> Self {
        Self { f }
    }

    pub fn zeros(n_tx: usize, k: usize) -> Self {
        Self {
            f: CMat::zeros(n_tx, k),
        }
    }

    /// Columns are the top-`k` eigenvectors of `R_T`, scaled so `‖F‖² = power`.
    pub fn eigenbeam(corr: &CorrelationPair<T>, k: usize, power: T) -> Result<Self> {
        let eig = HermitianEigen::new(corr.r_tx())?;
        let n = corr.n_tx();
        if k > n {
            return Err(SmiError::Dimension(format!(
                "eigenbeam needs k ({k}) <= n_tx ({n})"
            )));
        }
        let f = eig.vectors.columns(0, k).into_owned();
        Ok(Self { f }.scaled_to(power))
    }

    /// Complex Gaussian matrix renormalised to `‖F‖² = power`.
    pub fn scaled_random(n_tx: usize, k: usize, power: T, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = CMat::from_fn(n_tx, k, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        });
        Self { f }.scaled_to(power)
    }

    /// Rescales to `‖F‖² = power`; the zero precoder stays zero.
    pub fn scaled_to(&self, power: T) -> Self {
        let n2 = self.power();
        if n2 <= T::zero() {
            return self.clone();
        }
        Self {
            f: scale(&self.f, (power / n2).sqrt()),
        }
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.f
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.f
    }

    /// Squared Frobenius norm, the transmit power.
    pub fn power(&self) -> T {
        frob_sq(&self.f)
    }

    pub fn n_tx(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_streams(&self) -> usize {
        self.f.ncols()
    }

    /// Checks `‖F‖² ≤ budget` with `1e-9` relative slack.
    pub fn check_budget(&self, budget: T) -> Result<()> {
        let p = self.power();
        if p > budget * (T::one() + T::lit(1e-9)) {
            return Err(SmiError::InvalidArgument(format!(
                "precoder power {:e} exceeds budget {:e}",
                p.as_f64(),
                budget.as_f64()
            )));
        }
        Ok(())
    }

    /// Eigenvalues of `Fᴴ F`, descending.
    pub fn gram_eigenvalues(&self) -> Result<Vec<T>> {
        Ok(HermitianEigen::new(&(self.f.adjoint() * &self.f))?.clamped_values())
    }

    /// `rank(F Fᴴ)` at tolerance `1e-10 · σ_max(F)²`.
    pub fn rank(&self) -> Result<usize> {
        Ok(numerical_rank(&self.gram_eigenvalues()?))
    }
}

/// One draw of the target response `H = Σ ε_k b(ϑ_k) aᴴ(φ_k)`.
#[derive(Debug, Clone)]
pub struct TargetResponse<T: Real> {
    /// `H`, `N_R × N_T`.
    pub h_matrix: CMat<T>,
    /// `vec(Hᴴ)`, length `N_T N_R`.
    pub h_vec: CVec<T>,
}

impl<T: Real> TargetResponse<T> {
    /// Reshapes `h_vec` back into `Hᴴ` (`N_T × N_R`).
    pub fn h_adjoint_from_vec(&self) -> CMat<T> {
        let (n_rx, n_tx) = self.h_matrix.shape();
        CMat::from_column_slice(n_tx, n_rx, self.h_vec.as_slice())
    }
}

/// Half-wavelength ULA response: element `m` is `exp(iπ m sin θ)`.
pub fn steering_vector<T: Real>(n_antennas: usize, angle: T) -> CVec<T> {
    let phase = T::pi() * angle.sin();
    DVector::from_fn(n_antennas, |m, _| {
        let arg = phase * T::count(m);
        Complex::new(arg.cos(), arg.sin())
    })
}

/// `R_T = Σ a(φ_k)aᴴ(φ_k)`, `R_R = Σ σ_k² b(ϑ_k)bᴴ(ϑ_k)`.
pub fn build_correlations<T: Real>(
    targets: &TargetSet<T>,
    scenario: &Scenario<T>,
) -> Result<CorrelationPair<T>> {
    if targets.is_empty() {
        return Err(SmiError::InvalidArgument(
            "at least one target is required".into(),
        ));
    }
    let half_pi = T::frac_pi_2();
    let mut r_tx = CMat::zeros(scenario.n_tx, scenario.n_tx);
    let mut r_rx = CMat::zeros(scenario.n_rx, scenario.n_rx);
    for t in targets.targets() {
        if t.aod.abs() > half_pi || t.aoa.abs() > half_pi {
            return Err(SmiError::InvalidArgument(
                "target angles must lie in [-pi/2, pi/2]".into(),
            ));
        }
        let a = steering_vector(scenario.n_tx, t.aod);
        let b = steering_vector(scenario.n_rx, t.aoa);
        r_tx += &a * a.adjoint();
        r_rx += (&b * b.adjoint()) * real(t.reflect_var);
    }
    CorrelationPair::new(r_tx, r_rx, targets.len())
}

/// Draws `ε_k ~ CN(0, σ_k²)` and forms `H` and `vec(Hᴴ)`.
pub fn sample_target_response<T: Real>(
    targets: &TargetSet<T>,
    scenario: &Scenario<T>,
    seed: u64,
) -> TargetResponse<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMat::zeros(scenario.n_rx, scenario.n_tx);
    for t in targets.targets() {
        let sd = (t.reflect_var.as_f64() / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let eps = Complex::new(T::lit(sd * re), T::lit(sd * im));
        let a = steering_vector(scenario.n_tx, t.aod);
        let b = steering_vector(scenario.n_rx, t.aoa);
        h += (&b * a.adjoint()) * eps;
    }
    let h_adj = h.adjoint();
    let h_vec = CVec::from_column_slice(h_adj.as_slice());
    TargetResponse { h_matrix: h, h_vec }
}

/// The `K` largest eigenvalues of `R_R / σ²`, descending, zero-padded when
/// `N_R < K`. Values under the rank tolerance are returned as exact zeros.
pub fn receive_eigenvalues<T: Real>(corr: &CorrelationPair<T>, noise_power: T) -> Result<Vec<T>> {
    if !(noise_power > T::zero()) {
        return Err(SmiError::InvalidArgument(
            "noise power must be positive".into(),
        ));
    }
    let k = corr.max_rank();
    let eig = HermitianEigen::new(corr.r_rx())?;
    let rank = eig.rank();
    if rank > k {
        return Err(SmiError::RankExceeded {
            found: rank,
            max: k,
        });
    }
    let tol = rank_rtol::<T>() * eig.max();
    let mut out: Vec<T> = eig
        .values
        .iter()
        .take(k)
        .map(|&v| if v > tol { v / noise_power } else { T::zero() })
        .collect();
    out.resize(k, T::zero());
    Ok(out)
}

/// `T(F) = R_T^{1/2} F Fᴴ R_T^{1/2}`.
pub fn effective_gram<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
) -> Result<CMat<T>> {
    let b = shaped_precoder(corr, precoder)?;
    Ok(hermitian_part(&(&b * b.adjoint())))
}

/// `R_T^{1/2} F`.
pub(crate) fn shaped_precoder<T: Real>(
    corr: &CorrelationPair<T>,
    precoder: &Precoder<T>,
) -> Result<CMat<T>> {
    if precoder.n_tx() != corr.n_tx() {
        return Err(SmiError::Dimension(format!(
            "precoder has {} rows, R_T is {}x{}",
            precoder.n_tx(),
            corr.n_tx(),
            corr.n_tx()
        )));
    }
    Ok(corr.r_tx_sqrt() * precoder.matrix())
}

pub fn dbm_to_watts<T: Real>(x_dbm: T) -> T {
    T::lit(10.0).powf((x_dbm - T::lit(30.0)) / T::lit(10.0))
}

pub fn watts_to_dbm<T: Real>(watts: T) -> T {
    T::lit(10.0) * watts.log10() + T::lit(30.0)
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}
