//! Thin dense linear-algebra layer over `faer`.
//!
//! Matrices cross this boundary as row-major `&[f64]` slices of length `d * d`.
//! All kernels run sequentially so results never depend on the thread count.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

pub(crate) fn to_mat(values: &[f64], dim: usize) -> Mat<f64> {
    debug_assert_eq!(values.len(), dim * dim);
    Mat::from_fn(dim, dim, |i, j| values[i * dim + j])
}

pub(crate) fn to_row_major(m: MatRef<'_, f64>) -> Vec<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Copies the lower triangle onto the upper one, making `m` exactly symmetric.
pub(crate) fn mirror_lower(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// Largest absolute difference between `a[i][j]` and `a[j][i]`.
pub(crate) fn max_asymmetry(values: &[f64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..i {
            worst = worst.max((values[i * dim + j] - values[j * dim + i]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition; eigenvalues ascending, eigenvectors in columns.
pub(crate) fn sym_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition did not converge: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues only, ascending.
pub(crate) fn sym_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalue iteration did not converge: {e:?}")))
}

/// `xᵀx`, computed on the lower triangle and mirrored.
pub(crate) fn gram(x: MatRef<'_, f64>) -> Mat<f64> {
    let d = x.ncols();
    let mut out = Mat::<f64>::zeros(d, d);
    triangular::matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        x.transpose(),
        BlockStructure::Rectangular,
        x,
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    mirror_lower(&mut out);
    out
}

/// `s · a · s` for symmetric `s`, lower triangle computed then mirrored.
pub(crate) fn sandwich(s: MatRef<'_, f64>, a: MatRef<'_, f64>) -> Mat<f64> {
    let d = s.nrows();
    let mut sa = Mat::<f64>::zeros(d, d);
    faer::linalg::matmul::matmul(sa.as_mut(), Accum::Replace, s, a, 1.0, Par::Seq);
    let mut out = Mat::<f64>::zeros(d, d);
    triangular::matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        sa.as_ref(),
        BlockStructure::Rectangular,
        s,
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    mirror_lower(&mut out);
    out
}

/// Lower Cholesky factor of `m`, or `None` when `m` is not numerically
/// positive definite.
pub(crate) fn cholesky_lower(m: MatRef<'_, f64>) -> Option<Mat<f64>> {
    let llt = m.llt(Side::Lower).ok()?;
    let l = llt.L();
    Some(Mat::from_fn(m.nrows(), m.ncols(), |i, j| if i >= j { l[(i, j)] } else { 0.0 }))
}

/// `lᵀ · a · l` for lower triangular `l` and symmetric `a`, lower triangle
/// computed then mirrored.
pub(crate) fn congruence(l: MatRef<'_, f64>, a: MatRef<'_, f64>) -> Mat<f64> {
    let d = l.nrows();
    let mut al = Mat::<f64>::zeros(d, d);
    triangular::matmul(
        al.as_mut(),
        BlockStructure::Rectangular,
        Accum::Replace,
        a,
        BlockStructure::Rectangular,
        l,
        BlockStructure::TriangularLower,
        1.0,
        Par::Seq,
    );
    let mut out = Mat::<f64>::zeros(d, d);
    triangular::matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        l.transpose(),
        BlockStructure::TriangularUpper,
        al.as_ref(),
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    mirror_lower(&mut out);
    out
}

/// `v · diag(w) · vᵀ`, symmetrized.
pub(crate) fn recompose(v: MatRef<'_, f64>, w: &[f64]) -> Mat<f64> {
    let d = v.nrows();
    let scaled = Mat::from_fn(d, w.len(), |i, k| v[(i, k)] * w[k]);
    let mut out = Mat::<f64>::zeros(d, d);
    triangular::matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        scaled.as_ref(),
        BlockStructure::Rectangular,
        v.transpose(),
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    mirror_lower(&mut out);
    out
}

/// Full singular value decomposition `m = u · diag(s) · vᵀ`.
pub(crate) fn svd(m: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = m
        .svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector().iter().copied().collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

pub(crate) fn matmul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}
