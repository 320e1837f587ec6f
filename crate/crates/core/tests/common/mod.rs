//! Test-only oracles and instance generators. Nothing here calls the
//! eigen-decomposition path used by the library.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use smi_core::*;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat64 {
    CMat64::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-ish unitary via Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMat64 {
    let g = gaussian_matrix(n, n, rng);
    let mut q = CMat64::zeros(n, n);
    for c in 0..n {
        let mut v = g.column(c).into_owned();
        for p in 0..c {
            let qp = q.column(p).into_owned();
            let proj = qp.dotc(&v);
            v -= qp * proj;
        }
        let nrm = v.norm();
        q.set_column(c, &(v / C64::new(nrm, 0.0)));
    }
    q
}

/// Cyclic Jacobi on a real symmetric matrix; returns eigenvalues descending.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 * a.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    v
}

/// Eigenvalues of a Hermitian matrix through its real 2n×2n embedding
/// `[[Re, −Im], [Im, Re]]`; each eigenvalue appears twice there.
pub fn hermitian_eigenvalues_oracle(m: &CMat64) -> Vec<f64> {
    let n = m.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let all = jacobi_eigenvalues(big);
    all.into_iter().step_by(2).collect()
}

/// `log |det(A)|` via LU.
pub fn log_abs_det(a: &CMat64) -> f64 {
    a.clone().lu().determinant().norm().ln()
}

/// Explicit `log det(I + σ⁻² (R_R ⊗ X))`.
pub fn kron_log_det(r_rx: &CMat64, x: &CMat64, noise: f64) -> f64 {
    let big = r_rx.kronecker(x) * C64::new(1.0 / noise, 0.0);
    let n = big.nrows();
    log_abs_det(&(CMat64::identity(n, n) + big))
}

pub struct Instance {
    pub scenario: Scenario64,
    pub targets: TargetSet64,
    pub corr: CorrelationPair64,
    pub precoder: Precoder64,
}

/// Random targets in [-80°, 80°] at the given SNR, random precoder on the
/// power sphere.
pub fn random_instance(
    n_tx: usize,
    n_rx: usize,
    k: usize,
    n_frames: usize,
    snr_db: f64,
    seed: u64,
) -> Instance {
    let scenario = Scenario64 {
        n_tx,
        n_rx,
        n_targets: k,
        n_frames,
        snr_db,
        ..Scenario64::desk()
    };
    let targets = TargetSet64::auto(k, -80.0, 80.0, scenario.reflect_var(), seed).unwrap();
    let corr = build_correlations(&targets, &scenario).unwrap();
    let precoder = Precoder64::scaled_random(n_tx, k, scenario.power_budget, seed ^ 0x5eed);
    Instance {
        scenario,
        targets,
        corr,
        precoder,
    }
}

/// Desk-scale instance with targets in the [30°, 60°] sector.
pub fn sector_instance(
    n_tx: usize,
    n_rx: usize,
    k: usize,
    n_frames: usize,
    snr_db: f64,
    seed: u64,
) -> Instance {
    let scenario = Scenario64 {
        n_tx,
        n_rx,
        n_targets: k,
        n_frames,
        snr_db,
        ..Scenario64::desk()
    };
    let targets = TargetSet64::auto(k, 30.0, 60.0, scenario.reflect_var(), seed).unwrap();
    let corr = build_correlations(&targets, &scenario).unwrap();
    let precoder = Precoder64::scaled_random(n_tx, k, scenario.power_budget, seed ^ 0x5eed);
    Instance {
        scenario,
        targets,
        corr,
        precoder,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
