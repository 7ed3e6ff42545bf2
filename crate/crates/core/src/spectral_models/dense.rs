//! Fourier collocation matrices.
//!
//! The circle uses an odd number of points so the first-derivative matrix has
//! no Nyquist ambiguity; the torus uses an even N and the full second
//! derivative (Nyquist mode included).

use super::{DenseSpectrum, Family, ModelGeometry};
use crate::field::PeriodicGrid;
use crate::linalg::{hermitian_eigen, symmetric_eigen};
use crate::{Error, Result};
use faer::Mat;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum DenseMatrix {
    Real(Mat<f64>),
    Complex(Mat<Complex64>),
}

impl DenseMatrix {
    pub fn to_complex(&self) -> Mat<Complex64> {
        match self {
            Self::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::from(m[(i, j)])),
            Self::Complex(m) => m.clone(),
        }
    }
}

/// Collocation grid of a geometry: `N | 1` points on the circle, N per axis on the torus.
pub fn collocation_grid(geometry: &ModelGeometry) -> Result<Arc<PeriodicGrid>> {
    let n = geometry.n;
    match geometry.dim() {
        1 => Ok(Arc::new(PeriodicGrid::new(geometry.domain.clone(), n | 1))),
        _ => {
            if n % 2 != 0 {
                return Err(Error::Precondition(format!("torus collocation needs an even N, got {n}")));
            }
            Ok(Arc::new(PeriodicGrid::new(geometry.domain.clone(), n)))
        }
    }
}

/// `c[d] = D1[j, j − d]` for an odd number `m` of points on a circle of length `l`.
pub fn d1_circulant(m: usize, l: f64) -> Vec<f64> {
    assert!(m % 2 == 1, "first-derivative collocation needs an odd grid");
    let kmax = (m - 1) / 2;
    (0..m)
        .map(|d| {
            let mut acc = 0.0;
            for k in 1..=kmax {
                let w = 2.0 * PI * k as f64 / l;
                acc -= 2.0 * w * (2.0 * PI * (k * d) as f64 / m as f64).sin();
            }
            acc / m as f64
        })
        .collect()
}

/// `c[d] = D2[j, j − d]`; for even `n` the Nyquist mode contributes `−(πn/l)² cos(πd)`.
pub fn d2_circulant(n: usize, l: f64) -> Vec<f64> {
    let kmax = (n - 1) / 2;
    (0..n)
        .map(|d| {
            let mut acc = 0.0;
            for k in 1..=kmax {
                let w = 2.0 * PI * k as f64 / l;
                acc -= 2.0 * w * w * (2.0 * PI * (k * d) as f64 / n as f64).cos();
            }
            if n % 2 == 0 {
                let w = PI * n as f64 / l;
                acc -= w * w * if d % 2 == 0 { 1.0 } else { -1.0 };
            }
            acc / n as f64
        })
        .collect()
}

fn circulant(c: &[f64]) -> Mat<f64> {
    let m = c.len();
    Mat::from_fn(m, m, |i, j| c[(i + m - j) % m])
}

/// `−Δ_flat` on the collocation grid.
pub fn flat_laplacian_matrix(grid: &PeriodicGrid) -> Mat<f64> {
    let n = grid.n;
    match grid.dim() {
        1 => {
            let c = d2_circulant(n, grid.domain.lengths[0]);
            Mat::from_fn(n, n, |i, j| -c[(i + n - j) % n])
        }
        _ => {
            let cx = d2_circulant(n, grid.domain.lengths[0]);
            let cy = d2_circulant(n, grid.domain.lengths[1]);
            Mat::from_fn(n * n, n * n, |p, q| {
                let (i0, i1) = (p / n, p % n);
                let (j0, j1) = (q / n, q % n);
                let mut v = 0.0;
                if i1 == j1 {
                    v -= cx[(i0 + n - j0) % n];
                }
                if i0 == j0 {
                    v -= cy[(i1 + n - j1) % n];
                }
                v
            })
        }
    }
}

/// `−i∂ + 2πa/L` on an odd circle grid.
pub fn flat_dirac_matrix(grid: &PeriodicGrid, twist: f64) -> Mat<Complex64> {
    let l = grid.domain.lengths[0];
    let c = d1_circulant(grid.n, l);
    let m = grid.n;
    let shift = 2.0 * PI * twist / l;
    Mat::from_fn(m, m, |i, j| {
        let mut v = Complex64::new(0.0, -c[(i + m - j) % m]);
        if i == j {
            v += shift;
        }
        v
    })
}

fn weights(geometry: &ModelGeometry, grid: &PeriodicGrid, s: f64) -> Vec<f64> {
    geometry.phi.sample(grid).iter().map(|p| (s * p).exp()).collect()
}

fn scale_rows_cols<T>(m: &Mat<T>, left: &[f64], right: &[f64]) -> Mat<T>
where
    T: Copy + std::ops::Mul<f64, Output = T>,
{
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (left[i] * right[j]))
}

/// Circle Laplacian `D1ᵀ diag(e^{−φ}) D1` (symmetric, positive semidefinite).
fn circle_stiffness(geometry: &ModelGeometry, grid: &PeriodicGrid) -> Mat<f64> {
    let d1 = circulant(&d1_circulant(grid.n, grid.domain.lengths[0]));
    let e = weights(geometry, grid, -1.0);
    let ed1 = scale_rows_cols(&d1, &e, &vec![1.0; grid.n]);
    d1.transpose() * &ed1
}

/// The operator `A_g` itself in its covariant form: `e^{−2φ}(−Δ_flat)` on the torus,
/// `−e^{−φ}∂ e^{−φ}∂` on the circle, `e^{−φ}(−i∂ + 2πa/L)` for Dirac.
pub fn operator_matrix(family: &Family, geometry: &ModelGeometry) -> Result<DenseMatrix> {
    let grid = collocation_grid(geometry)?;
    let ones = vec![1.0; grid.len()];
    match family {
        Family::Laplacian => match geometry.dim() {
            1 => Ok(DenseMatrix::Real(scale_rows_cols(&circle_stiffness(geometry, &grid), &weights(geometry, &grid, -1.0), &ones))),
            _ => Ok(DenseMatrix::Real(scale_rows_cols(&flat_laplacian_matrix(&grid), &weights(geometry, &grid, -2.0), &ones))),
        },
        Family::DiracCircle { twist } => {
            Ok(DenseMatrix::Complex(scale_rows_cols(&flat_dirac_matrix(&grid, *twist), &weights(geometry, &grid, -1.0), &ones)))
        }
        Family::Power { .. } => Err(Error::Unsupported("no collocation matrix for fractional powers".into())),
    }
}

/// Symmetric (Hermitian) matrix similar to [`operator_matrix`].
pub fn symmetrized_matrix(family: &Family, geometry: &ModelGeometry) -> Result<DenseMatrix> {
    let grid = collocation_grid(geometry)?;
    match (family, geometry.dim()) {
        (Family::Laplacian | Family::Power { .. }, 1) => {
            let s = weights(geometry, &grid, -0.5);
            Ok(DenseMatrix::Real(scale_rows_cols(&circle_stiffness(geometry, &grid), &s, &s)))
        }
        (Family::Laplacian | Family::Power { .. }, _) => {
            let s = weights(geometry, &grid, -1.0);
            Ok(DenseMatrix::Real(scale_rows_cols(&flat_laplacian_matrix(&grid), &s, &s)))
        }
        (Family::DiracCircle { twist }, _) => {
            let s = weights(geometry, &grid, -0.5);
            Ok(DenseMatrix::Complex(scale_rows_cols(&flat_dirac_matrix(&grid, *twist), &s, &s)))
        }
    }
}

pub(super) fn dense_spectrum(family: &Family, geometry: &ModelGeometry, vectors: bool) -> Result<DenseSpectrum> {
    let grid = collocation_grid(geometry)?;
    let m = symmetrized_matrix(family, geometry)?;
    log::debug!("dense eigendecomposition of size {}", grid.len());
    let (eigenvalues, densities) = match m {
        DenseMatrix::Real(a) => {
            let (vals, vecs) = symmetric_eigen(&a, vectors)?;
            (vals, vecs.map(|v| Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * v[(i, j)])))
        }
        DenseMatrix::Complex(a) => {
            let (vals, vecs) = hermitian_eigen(&a, vectors)?;
            (vals, vecs.map(|v| Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)].norm_sqr())))
        }
    };
    Ok(DenseSpectrum { eigenvalues, densities, grid })
}
