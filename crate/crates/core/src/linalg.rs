//! Small dense Hermitian helpers on top of nalgebra.

use nalgebra::SymmetricEigen;
use num_complex::Complex;

use crate::error::{Result, SmiError};
use crate::scalar::{CMat, Real};

/// Relative tolerance used for numerical rank and PSD checks.
pub const RANK_RTOL: f64 = 1e-10;

/// Relative eigenvalue tolerance for `T`: `RANK_RTOL`, widened to `64 ε` in single precision.
pub fn rank_rtol<T: Real>() -> T {
    T::lit(RANK_RTOL).max(T::lit(64.0) * T::machine_eps())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMat<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMat<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(SmiError::Dimension(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: CMat::zeros(0, 0),
            });
        }
        let h = hermitian_part(m);
        let eig = SymmetricEigen::try_new(h, T::machine_eps(), 100_000)
            .ok_or(SmiError::EigenNoConvergence)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(SmiError::EigenNoConvergence);
        }
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    /// Largest eigenvalue, or zero for an empty matrix.
    pub fn max(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    /// Fails when the most negative eigenvalue is below `-RANK_RTOL * max(|λ|)`.
    pub fn check_psd(&self) -> Result<()> {
        let scale = self
            .values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        let min = self.values.last().copied().unwrap_or_else(T::zero);
        if min < -(rank_rtol::<T>() * scale) {
            return Err(SmiError::NotPsd {
                min_eig: min.as_f64(),
                max_eig: self.max().as_f64(),
            });
        }
        Ok(())
    }

    /// Eigenvalues with negative round-off clamped to zero.
    pub fn clamped_values(&self) -> Vec<T> {
        self.values.iter().map(|v| v.max(T::zero())).collect()
    }

    /// Number of eigenvalues above `RANK_RTOL * λ_max`.
    pub fn rank(&self) -> usize {
        numerical_rank(&self.values)
    }

    /// `U diag(f(λ)) Uᴴ`.
    pub fn apply(&self, f: impl Fn(T) -> T) -> CMat<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            let s = Complex::new(f(v), T::zero());
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Count of values above `RANK_RTOL` times the largest value.
pub fn numerical_rank<T: Real>(values: &[T]) -> usize {
    let max = values.iter().fold(T::zero(), |acc, &v| acc.max(v));
    if max <= T::zero() {
        return 0;
    }
    let tol = rank_rtol::<T>() * max;
    values.iter().filter(|&&v| v > tol).count()
}

/// `(M + Mᴴ)/2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    let half = Complex::new(T::lit(0.5), T::zero());
    (m + m.adjoint()) * half
}

/// Hermitian PSD square root with negative eigenvalues clamped to zero.
pub fn psd_sqrt<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let eig = HermitianEigen::new(m)?;
    Ok(eig.apply(|v| v.max(T::zero()).sqrt()))
}

/// `Re tr(A Bᴴ)`, the real Frobenius inner product.
pub fn re_inner<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + x.re * y.re + x.im * y.im)
}

/// Squared Frobenius norm.
pub fn frob_sq<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Largest entrywise modulus.
pub fn max_abs<T: Real>(a: &CMat<T>) -> T {
    a.iter()
        .fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()))
}

/// Multiplies every entry by a real scalar.
pub fn scale<T: Real>(a: &CMat<T>, s: T) -> CMat<T> {
    a * Complex::new(s, T::zero())
}

pub(crate) fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}
