//! Thin wrappers over `faer` for least squares and symmetric eigenproblems.

use crate::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct LstsqSolution {
    pub x: Vec<f64>,
    /// Condition number of the column-normalised design matrix.
    pub cond: f64,
    /// RMS of the weighted residual.
    pub rms: f64,
}

/// Weighted least squares `min Σ w_i² (A x − b)_i²` via SVD with column scaling.
/// `design[i]` is row i.
pub fn lstsq(design: &[Vec<f64>], rhs: &[f64], weights: &[f64], max_cond: f64) -> Result<LstsqSolution> {
    let rows = design.len();
    let cols = design.first().map(|r| r.len()).unwrap_or(0);
    if rows < cols || cols == 0 {
        return Err(Error::Precondition(format!("least squares with {rows} rows and {cols} columns")));
    }
    let mut scale = vec![0.0; cols];
    for (r, w) in design.iter().zip(weights) {
        for (s, v) in scale.iter_mut().zip(r) {
            *s += (v * w).powi(2);
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { 1.0 / s.sqrt() } else { 1.0 };
    }
    let a = Mat::<f64>::from_fn(rows, cols, |i, j| design[i][j] * weights[i] * scale[j]);
    let svd = a.thin_svd().map_err(|e| Error::Eigen(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let smax = (0..cols).map(|i| s[i]).fold(0.0, f64::max);
    let smin = (0..cols).map(|i| s[i]).fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > max_cond {
        return Err(Error::IllConditioned { cond });
    }
    let u = svd.U();
    let v = svd.V();
    let mut y = vec![0.0; cols];
    for (k, yk) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..rows {
            acc += u[(i, k)] * rhs[i] * weights[i];
        }
        *yk = acc / s[k];
    }
    let mut x = vec![0.0; cols];
    for (j, xj) in x.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, yk) in y.iter().enumerate() {
            acc += v[(j, k)] * yk;
        }
        *xj = acc * scale[j];
    }
    let mut ss = 0.0;
    for i in 0..rows {
        let pred: f64 = design[i].iter().zip(&x).map(|(a, b)| a * b).sum();
        ss += ((pred - rhs[i]) * weights[i]).powi(2);
    }
    Ok(LstsqSolution { x, cond, rms: (ss / rows as f64).sqrt() })
}

/// Eigenpairs of a real symmetric matrix, ascending. Vectors are the columns.
pub fn symmetric_eigen(a: &Mat<f64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    if vectors {
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let vals = (0..a.nrows()).map(|i| s[i]).collect();
        Ok((vals, Some(evd.U().to_owned())))
    } else {
        let mut vals = a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        vals.sort_by(|x, y| x.total_cmp(y));
        Ok((vals, None))
    }
}

/// Eigenpairs of a complex Hermitian matrix, ascending.
pub fn hermitian_eigen(a: &Mat<Complex64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<Complex64>>)> {
    let to_c = |z: &faer::c64| Complex64::new(z.re, z.im);
    let b = Mat::<faer::c64>::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    if vectors {
        let evd = b.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let vals = (0..a.nrows()).map(|i| s[i].re).collect();
        let u = evd.U();
        let vecs = Mat::<Complex64>::from_fn(a.nrows(), a.ncols(), |i, j| to_c(&u[(i, j)]));
        Ok((vals, Some(vecs)))
    } else {
        let mut vals = b.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        vals.sort_by(|x, y| x.total_cmp(y));
        Ok((vals, None))
    }
}

/// Largest singular value by power iteration on `MᵀM` (real) .
pub fn spectral_norm(m: &Mat<f64>, iterations: usize) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + 0.37 * ((i * 7919) % 13) as f64);
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let norm = v.norm_l2();
        if norm == 0.0 {
            return 0.0;
        }
        v = v * faer::Scale(1.0 / norm);
        let w = m * &v;
        sigma = w.norm_l2();
        v = m.transpose() * &w;
    }
    sigma
}

/// Largest singular value of a complex matrix by power iteration.
pub fn spectral_norm_c(m: &Mat<Complex64>, iterations: usize) -> f64 {
    let b = Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im));
    let n = b.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = Mat::<faer::c64>::from_fn(n, 1, |i, _| faer::c64::new(1.0 + 0.37 * ((i * 7919) % 13) as f64, 0.1));
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let norm = v.norm_l2();
        if norm == 0.0 {
            return 0.0;
        }
        v = v * faer::Scale(faer::c64::new(1.0 / norm, 0.0));
        let w = &b * &v;
        sigma = w.norm_l2();
        v = b.adjoint() * &w;
    }
    sigma
}
