//! 2-Wasserstein distance between Gaussians.
//!
//! For `N(μ1, Σ1)` and `N(μ2, Σ2)`:
//!
//! ```text
//! W2² = ‖μ1 − μ2‖² + trace(Σ1 + Σ2 − 2 (Σ2^½ Σ1 Σ2^½)^½)
//! ```
//!
//! The trace term is the unnormalized Bures metric. The outer root only
//! contributes its trace, the sum of the square roots of the eigenvalues of
//! the inner product, so no eigenvectors are needed for it. Those eigenvalues
//! are taken from `Lᵀ Σ2 L` with `Σ1 = L Lᵀ` when the Cholesky factor exists,
//! and from `Σ2^½ Σ1 Σ2^½` otherwise. Square roots come from a symmetric
//! eigendecomposition.
//!
//! When Σ1 and Σ2 nearly coincide that subtraction cancels almost all digits,
//! and the inner product squares the conditioning of Σ. Results below
//! `REFINE_BELOW · trace(Σ1 + Σ2)` are therefore recomputed as
//! `‖Σ1^½ − Σ2^½ Q‖_F²`, where `Q` is the orthogonal polar factor of
//! `Σ2^½ Σ1^½`. That form is a sum of squares and is exactly zero for equal
//! inputs.

use std::sync::OnceLock;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg;
use crate::stats::{GaussianSummary, SYMMETRY_TOLERANCE};

/// Eigenvalues below `-PSD_TOLERANCE · λmax` mean the input is not PSD.
pub const PSD_TOLERANCE: f64 = 1e-8;
/// Eigenvalues below `EIGEN_FLOOR · λmax` are treated as exactly zero.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Negative Bures values within `BURES_CLAMP · trace(Σ1 + Σ2)` of zero become zero.
pub const BURES_CLAMP: f64 = 1e-8;
/// Bures values below `REFINE_BELOW · trace(Σ1 + Σ2)` are recomputed by the
/// cancellation-free route.
pub const REFINE_BELOW: f64 = 1e-4;
/// Negative W2 radicands within this absolute slack become zero.
pub const RADICAND_CLAMP: f64 = 1e-10;

/// A symmetric positive semidefinite matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl PsdMatrix {
    /// Checks shape and symmetry. Positive semidefiniteness is checked by the
    /// operations that decompose the matrix.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != dim * dim {
            return Err(Error::Dim(format!(
                "{} values do not form a {dim}×{dim} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("matrix contains a non-finite value".into()));
        }
        let asym = linalg::max_asymmetry(&values, dim);
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        Ok(PsdMatrix { dim, values })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        PsdMatrix {
            dim,
            values: vec![0.0; dim * dim],
        }
    }

    /// # Panics
    /// If a diagonal entry is negative or non-finite.
    pub fn diagonal(diag: &[f64]) -> Self {
        assert!(diag.iter().all(|v| v.is_finite() && *v >= 0.0));
        let dim = diag.len();
        let mut values = vec![0.0; dim * dim];
        for (i, &v) in diag.iter().enumerate() {
            values[i * dim + i] = v;
        }
        PsdMatrix { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    fn to_mat(&self) -> Mat<f64> {
        linalg::to_mat(&self.values, self.dim)
    }
}

// Validates an ascending spectrum and sets eigenvalues below `floor · λmax`
// to zero.
fn clamp_spectrum(eigenvalues: &mut [f64], floor: f64) -> Result<()> {
    let max = eigenvalues.last().copied().unwrap_or(0.0);
    let min = eigenvalues.first().copied().unwrap_or(0.0);
    if !max.is_finite() || !min.is_finite() || min < -PSD_TOLERANCE * max.max(0.0) {
        return Err(Error::NotPsd { min, max });
    }
    let floor = floor * max;
    for v in eigenvalues.iter_mut() {
        if *v < floor {
            *v = 0.0;
        }
    }
    Ok(())
}

fn sqrt_mat(m: &PsdMatrix) -> Result<Mat<f64>> {
    sqrt_mat_of(m.to_mat().as_ref())
}

fn sqrt_mat_of(m: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (mut w, v) = linalg::sym_eigen(m)?;
    clamp_spectrum(&mut w, EIGEN_FLOOR)?;
    let roots: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    Ok(linalg::recompose(v.as_ref(), &roots))
}

/// Principal square root `S` with `S·S ≈ m`, symmetric and PSD.
pub fn psd_sqrt(m: &PsdMatrix) -> Result<PsdMatrix> {
    let s = sqrt_mat(m)?;
    Ok(PsdMatrix {
        dim: m.dim,
        values: linalg::to_row_major(s.as_ref()),
    })
}

/// The second argument of a Bures or W2 evaluation, kept in a form that is
/// cheap to evaluate many distances against.
#[derive(Debug, Clone)]
pub struct PreparedCovariance {
    sigma: Mat<f64>,
    trace: f64,
    sqrt: OnceLock<Mat<f64>>,
}

impl PreparedCovariance {
    pub fn new(sigma: &PsdMatrix) -> Result<Self> {
        Ok(PreparedCovariance {
            sigma: sigma.to_mat(),
            trace: sigma.trace(),
            sqrt: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    fn sqrt(&self) -> Result<&Mat<f64>> {
        if let Some(s) = self.sqrt.get() {
            return Ok(s);
        }
        let s = sqrt_mat_of(self.sigma.as_ref())?;
        Ok(self.sqrt.get_or_init(|| s))
    }

    /// `bures(sigma1, self)`.
    pub fn bures_from(&self, sigma1: &PsdMatrix) -> Result<f64> {
        if sigma1.dim != self.dim() {
            return Err(Error::Dim(format!(
                "covariances of dimension {} and {}",
                sigma1.dim,
                self.dim()
            )));
        }
        let s1 = sigma1.to_mat();
        // Σ2^½ Σ1 Σ2^½ and Lᵀ Σ2 L with Σ1 = L Lᵀ are similar, so either
        // supplies the spectrum. The second needs no square root.
        let inner = match linalg::cholesky_lower(s1.as_ref()) {
            Some(l) => linalg::congruence(l.as_ref(), self.sigma.as_ref()),
            None => linalg::sandwich(self.sqrt()?.as_ref(), s1.as_ref()),
        };
        let mut w = linalg::sym_eigenvalues(inner.as_ref())?;
        // The inner product has the squared spectrum of Σ, so a relative
        // floor here would discard eigenvalues of Σ below √EIGEN_FLOOR·λmax.
        // Only the negative rounding residue is removed.
        clamp_spectrum(&mut w, 0.0)?;
        let cross: f64 = w.iter().map(|x| x.sqrt()).sum();
        let total = sigma1.trace() + self.trace;
        let mut value = total - 2.0 * cross;
        if value < REFINE_BELOW * total {
            value = self.bures_polar(s1.as_ref())?;
        }
        if value >= 0.0 {
            Ok(value)
        } else if value >= -BURES_CLAMP * total {
            Ok(0.0)
        } else {
            Err(Error::Numerical(format!(
                "Bures metric evaluated to {value:e} (trace sum {total:e})"
            )))
        }
    }

    // ‖S1 − S2·Q‖_F² with Q = U·Vᵀ from the SVD S2·S1 = U·diag(s)·Vᵀ.
    fn bures_polar(&self, sigma1: MatRef<'_, f64>) -> Result<f64> {
        let s2 = self.sqrt()?;
        let s1 = sqrt_mat_of(sigma1)?;
        let k = linalg::matmul(s2.as_ref(), s1.as_ref());
        let (u, _, v) = linalg::svd(k.as_ref())?;
        let q = linalg::matmul(u.as_ref(), v.transpose());
        let s2q = linalg::matmul(s2.as_ref(), q.as_ref());
        let d = self.dim();
        let mut sum = 0.0;
        for j in 0..d {
            for i in 0..d {
                let r = s1[(i, j)] - s2q[(i, j)];
                sum += r * r;
            }
        }
        Ok(sum)
    }
}

/// Unnormalized Bures metric `trace(Σ1 + Σ2 − 2 (Σ2^½ Σ1 Σ2^½)^½)`.
pub fn bures(sigma1: &PsdMatrix, sigma2: &PsdMatrix) -> Result<f64> {
    if sigma1.dim != sigma2.dim {
        return Err(Error::Dim(format!(
            "covariances of dimension {} and {}",
            sigma1.dim, sigma2.dim
        )));
    }
    PreparedCovariance::new(sigma2)?.bures_from(sigma1)
}

/// A Gaussian prepared as the fixed second argument of [`w2`].
#[derive(Debug, Clone)]
pub struct W2Target {
    mean: Vec<f64>,
    covariance: PreparedCovariance,
}

impl W2Target {
    pub fn new(g: &GaussianSummary) -> Result<Self> {
        let sigma = PsdMatrix::new(g.dim(), g.covariance.clone())?;
        Ok(W2Target {
            mean: g.mean.clone(),
            covariance: PreparedCovariance::new(&sigma)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `w2(g, self)`.
    pub fn distance_from(&self, g: &GaussianSummary) -> Result<f64> {
        if g.dim() != self.dim() || g.covariance.len() != g.dim() * g.dim() {
            return Err(Error::Dim(format!(
                "Gaussians of dimension {} and {}",
                g.dim(),
                self.dim()
            )));
        }
        let sigma1 = PsdMatrix::new(g.dim(), g.covariance.clone())?;
        let mean_sq: f64 = g
            .mean
            .iter()
            .zip(&self.mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let radicand = mean_sq + self.covariance.bures_from(&sigma1)?;
        if radicand >= 0.0 {
            Ok(radicand.sqrt())
        } else if radicand >= -RADICAND_CLAMP {
            Ok(0.0)
        } else {
            Err(Error::Numerical(format!(
                "W2 radicand evaluated to {radicand:e}"
            )))
        }
    }
}

/// `√(‖μ1 − μ2‖² + bures(Σ1, Σ2))`.
pub fn w2(g1: &GaussianSummary, g2: &GaussianSummary) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::Dim(format!(
            "Gaussians of dimension {} and {}",
            g1.dim(),
            g2.dim()
        )));
    }
    W2Target::new(g2)?.distance_from(g1)
}
