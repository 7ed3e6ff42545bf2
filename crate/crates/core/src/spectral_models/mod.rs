//! Model geometries, model operators and their spectral functionals.
//!
//! A geometry is the circle or a flat torus with metric `g = e^{2φ}·flat`.
//! Operators are realized by an exact spectrum when φ is constant and by a
//! dense Fourier-collocation matrix otherwise.

mod dense;
mod exact;
mod heat;
mod mellin;

pub use dense::{
    collocation_grid, d1_circulant, d2_circulant, flat_dirac_matrix, flat_laplacian_matrix, operator_matrix,
    symmetrized_matrix, DenseMatrix,
};
pub use exact::{theta1, ExactSpectrum};
pub use heat::{
    default_basis, default_window, geometric_grid, heat_fit, heat_fit_trace, heat_trace, HeatBasis, HeatExpansionFit, HeatTrace,
};
pub use mellin::{
    eta, eta0, eta_hurwitz, mellin_zeta, mellin_zeta0, mellin_zeta_prime0, zeta, zeta0, zeta_closed_form,
    zeta_prime_at_0, zeta_weighted, ExpansionTerm, MellinOptions, SmallTimeExpansion,
};

use crate::field::{Domain, FourierField, PeriodicGrid};
use crate::symbol_core::{ClassicalSymbol, HomTerm, MultiIndex};
use crate::{Error, Result};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

pub const MIN_MODES: usize = 16;

/// Circle or flat torus with conformal factor φ.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGeometry {
    pub domain: Domain,
    /// Collocation modes per axis.
    pub n: usize,
    pub phi: FourierField,
}

impl ModelGeometry {
    pub fn new(phi: FourierField, n: usize) -> Result<Self> {
        if n < MIN_MODES {
            return Err(Error::Precondition(format!("N = {n} is below the minimum of {MIN_MODES} modes")));
        }
        Ok(Self { domain: phi.domain.clone(), n, phi })
    }

    pub fn flat(domain: Domain, n: usize) -> Result<Self> {
        Self::new(FourierField::constant(domain, 0.0), n)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn is_flat(&self) -> bool {
        self.phi.is_constant()
    }

    /// The metric `e^{2tf} g`.
    pub fn conformal_shift(&self, f: &FourierField, t: f64) -> Result<Self> {
        if f.domain != self.domain {
            return Err(Error::Dimension("conformal direction lives on a different domain".into()));
        }
        Self::new(self.phi.add(&f.scale(t)), self.n)
    }

    fn quadrature_grid(&self) -> PeriodicGrid {
        let n = match self.dim() {
            1 => 512,
            _ => 128,
        };
        PeriodicGrid::new(self.domain.clone(), n.max(8 * (self.phi.band() as usize + 1)))
    }

    /// `∫ e^{nφ} dx`.
    pub fn volume(&self) -> f64 {
        let grid = self.quadrature_grid();
        let n = self.dim() as f64;
        self.phi.sample(&grid).iter().map(|p| (n * p).exp()).sum::<f64>() * grid.cell_volume()
    }

    /// `∫ f dvol_g`.
    pub fn integrate(&self, f: &FourierField) -> f64 {
        let grid = self.quadrature_grid();
        let n = self.dim() as f64;
        let phi = self.phi.sample(&grid);
        let fv = f.sample(&grid);
        phi.iter().zip(&fv).map(|(p, f)| f * (n * p).exp()).sum::<f64>() * grid.cell_volume()
    }

    pub fn mean_g(&self, f: &FourierField) -> f64 {
        self.integrate(f) / self.volume()
    }

    /// Gaussian curvature `K = −e^{−2φ} ∇²φ` on `grid` (torus only).
    pub fn curvature(&self, grid: &PeriodicGrid) -> Result<Vec<f64>> {
        if self.dim() != 2 {
            return Err(Error::Dimension("curvature is defined for the torus".into()));
        }
        let lap = self.phi.laplacian().sample(grid);
        let phi = self.phi.sample(grid);
        Ok(phi.iter().zip(&lap).map(|(p, l)| -(-2.0 * p).exp() * l).collect())
    }

    /// `∫ K dvol_g`, which vanishes on the torus.
    pub fn total_curvature(&self) -> Result<f64> {
        let grid = self.quadrature_grid();
        let k = self.curvature(&grid)?;
        let phi = self.phi.sample(&grid);
        Ok(k.iter().zip(&phi).map(|(k, p)| k * (2.0 * p).exp()).sum::<f64>() * grid.cell_volume())
    }
}

/// Operator families with a model realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Laplacian,
    DiracCircle { twist: f64 },
    /// `Δ_g^p` through the eigendecomposition of the Laplacian.
    Power { power: f64 },
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Laplacian => "laplacian",
            Self::DiracCircle { .. } => "dirac_circle",
            Self::Power { .. } => "power",
        }
    }

    pub fn order(&self) -> f64 {
        match self {
            Self::Laplacian => 2.0,
            Self::DiracCircle { .. } => 1.0,
            Self::Power { power } => 2.0 * power,
        }
    }

    /// Conformal bidegree (a, b) of the family in dimension `dim`, if covariant.
    pub fn bidegree(&self, dim: usize) -> Option<(f64, f64)> {
        match (self, dim) {
            (Self::Laplacian, 2) => Some((0.0, 2.0)),
            (Self::DiracCircle { .. }, 1) => Some((0.0, 1.0)),
            _ => None,
        }
    }

    fn power(&self) -> f64 {
        match self {
            Self::Power { power } => *power,
            _ => 1.0,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::DiracCircle { twist } => {
                if dim != 1 {
                    return Err(Error::Dimension("the twisted Dirac operator lives on the circle".into()));
                }
                if !(*twist > 0.0 && *twist < 1.0) {
                    return Err(Error::Precondition(format!("twist {twist} must lie in (0, 1)")));
                }
            }
            Self::Power { power } => {
                if !(power.is_finite() && *power != 0.0) {
                    return Err(Error::Precondition(format!("power {power} must be finite and nonzero")));
                }
            }
            Self::Laplacian => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Use the collocation matrix even when an exact spectrum exists.
    pub force_dense: bool,
    /// Keep eigenvector densities (needed for weighted traces).
    pub vectors: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { force_dense: false, vectors: true }
    }
}

/// Eigendata of a dense realization of the base operator (Δ_g or D_g).
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// `|w_k(x)|²` for the orthonormal eigenvector `w_k` of the symmetrized
    /// matrix; rows are grid points, columns follow `eigenvalues`.
    pub densities: Option<Mat<f64>>,
    pub grid: Arc<PeriodicGrid>,
}

#[derive(Clone, Debug)]
pub enum Realization {
    Exact(ExactSpectrum),
    Dense(DenseSpectrum),
}

/// Source of cached dense eigendata, keyed by [`ModelOperator::cache_key`].
pub trait EigenStore: Sync {
    fn load(&self, key: &str, vectors: bool) -> Option<DenseSpectrum>;
    fn store(&self, key: &str, spectrum: &DenseSpectrum);
}

#[derive(Clone, Debug)]
pub struct ModelOperator {
    pub family: Family,
    pub geometry: ModelGeometry,
    pub order: f64,
    pub kernel_dim: usize,
    pub realization: Realization,
}

/// Nonzero eigenvalues with multiplicity plus the kernel dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
}

pub fn build_operator(family: &Family, geometry: &ModelGeometry, options: BuildOptions) -> Result<ModelOperator> {
    build_operator_cached(family, geometry, options, None)
}

pub fn build_operator_cached(
    family: &Family,
    geometry: &ModelGeometry,
    options: BuildOptions,
    store: Option<&dyn EigenStore>,
) -> Result<ModelOperator> {
    family.validate(geometry.dim())?;
    let kernel_dim = match family {
        Family::DiracCircle { .. } => 0,
        _ => 1,
    };
    let realization = if geometry.is_flat() && !options.force_dense {
        Realization::Exact(ExactSpectrum::new(family, geometry)?)
    } else {
        let key = cache_key(family, geometry);
        let cached = store.and_then(|s| s.load(&key, options.vectors));
        let spectrum = match cached {
            Some(s) => {
                log::info!("eigen cache hit {key}");
                s
            }
            None => {
                let s = dense::dense_spectrum(family, geometry, options.vectors)?;
                if let Some(store) = store {
                    store.store(&key, &s);
                }
                s
            }
        };
        Realization::Dense(spectrum)
    };
    let op = ModelOperator { family: family.clone(), geometry: geometry.clone(), order: family.order(), kernel_dim, realization };
    op.check_kernel()?;
    Ok(op)
}

/// Content hash of the base operator (family without its power, geometry, N).
pub fn cache_key(family: &Family, geometry: &ModelGeometry) -> String {
    let base = match family {
        Family::Power { .. } => Family::Laplacian,
        f => f.clone(),
    };
    let descriptor = serde_json::json!({
        "family": base,
        "lengths": geometry.domain.lengths,
        "N": geometry.n,
        "phi": {
            "constant": geometry.phi.constant,
            "modes": geometry.phi.modes,
        },
    });
    hex::encode(Sha256::digest(descriptor.to_string().as_bytes()))
}

impl ModelOperator {
    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn power(&self) -> f64 {
        self.family.power()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.realization, Realization::Exact(_))
    }

    pub fn bidegree(&self) -> Option<(f64, f64)> {
        self.family.bidegree(self.dim())
    }

    fn check_kernel(&self) -> Result<()> {
        if let Realization::Dense(d) = &self.realization {
            let scale = d.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut abs: Vec<f64> = d.eigenvalues.iter().map(|v| v.abs()).collect();
            abs.sort_by(f64::total_cmp);
            if self.kernel_dim > 0 && abs[self.kernel_dim - 1] > 1e-9 * scale {
                return Err(Error::Eigen(format!("expected a {}-dimensional kernel, smallest |λ| = {}", self.kernel_dim, abs[0])));
            }
            if abs.len() > self.kernel_dim && abs[self.kernel_dim] <= 1e-9 * scale {
                return Err(Error::Eigen("kernel is larger than expected".into()));
            }
        }
        Ok(())
    }

    /// Indices of the dense eigenvalues outside the kernel.
    pub(crate) fn nonkernel_indices(d: &DenseSpectrum, kernel_dim: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..d.eigenvalues.len()).collect();
        idx.sort_by(|&a, &b| d.eigenvalues[a].abs().total_cmp(&d.eigenvalues[b].abs()));
        let mut out = idx[kernel_dim..].to_vec();
        out.sort_unstable();
        out
    }

    /// The lowest `count` nonzero eigenvalues (by modulus) with multiplicity.
    pub fn spectrum(&self, count: usize) -> Result<Spectrum> {
        let p = self.power();
        let mut values = match &self.realization {
            Realization::Exact(e) => e.eigenvalues(count),
            Realization::Dense(d) => {
                let mut v: Vec<f64> = Self::nonkernel_indices(d, self.kernel_dim).into_iter().map(|i| d.eigenvalues[i]).collect();
                v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
                v.truncate(count);
                v
            }
        };
        if p != 1.0 {
            for v in &mut values {
                *v = v.powf(p);
            }
        }
        Ok(Spectrum { eigenvalues: values, kernel_dim: self.kernel_dim })
    }

    /// Smallest nonzero |λ| of the operator (after the power).
    pub fn lambda_min(&self) -> f64 {
        let base = match &self.realization {
            Realization::Exact(e) => e.lambda_min(),
            Realization::Dense(d) => Self::nonkernel_indices(d, self.kernel_dim)
                .into_iter()
                .map(|i| d.eigenvalues[i].abs())
                .fold(f64::INFINITY, f64::min),
        };
        base.powf(self.power())
    }

    /// Eigenvalue of the base operator below which the dense spectrum is trusted.
    pub fn lambda_cut(&self) -> f64 {
        lambda_cut(&self.family, &self.geometry)
    }

    /// Smallest ε accepted by dense heat traces; 0 for exact spectra.
    pub fn eps_floor(&self) -> f64 {
        match self.realization {
            Realization::Exact(_) => 0.0,
            Realization::Dense(_) => 20.0 / self.lambda_cut().powf(self.power()),
        }
    }

    /// Full symbol of the base operator on a grid with `n` points per axis.
    pub fn symbol(&self, n: usize) -> Result<ClassicalSymbol> {
        operator_symbol(&self.family, &self.geometry, n)
    }
}

fn lambda_cut(family: &Family, g: &ModelGeometry) -> f64 {
    let phi_max = g.phi.sup_bound();
    let k = g.n as f64 / 3.0;
    let lmax = g.domain.lengths.iter().fold(0.0f64, |m, &l| m.max(l));
    let w = 2.0 * std::f64::consts::PI * k / lmax;
    match family {
        Family::DiracCircle { .. } => (-phi_max).exp() * w,
        _ => (-2.0 * phi_max).exp() * w * w,
    }
}

/// Trust thresholds of the dense realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrustThresholds {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda_cut: f64,
    pub eps_floor: f64,
}

/// Thresholds a dense build of `family` on `geometry` would use; `None` when
/// the spectrum is exact.
pub fn trust_thresholds(family: &Family, geometry: &ModelGeometry) -> Option<TrustThresholds> {
    if geometry.is_flat() {
        return None;
    }
    let lambda_cut = lambda_cut(family, geometry);
    Some(TrustThresholds { n: geometry.n, lambda_cut, eps_floor: 20.0 / lambda_cut.powf(family.power()) })
}

/// Symbol of Δ_g or of the symmetrized Dirac operator.
pub fn operator_symbol(family: &Family, geometry: &ModelGeometry, n: usize) -> Result<ClassicalSymbol> {
    let domain = geometry.domain.clone();
    let dim = geometry.dim();
    let grid = Arc::new(PeriodicGrid::new(domain.clone(), n));
    let e = |s: f64| geometry.phi.scale(s).to_coefficient(&grid).map(|v| v.exp());
    let zero = MultiIndex::zero(dim);
    match family {
        Family::Laplacian | Family::Power { .. } => {
            let lead = HomTerm::new(e(-2.0), zero, 2.0);
            let mut components = vec![vec![lead]];
            if dim == 1 {
                // −e^{−2φ}(u″ − φ′u′): first-order part e^{−2φ}φ′ ∂ ↦ i e^{−2φ}φ′ ξ
                let dphi = geometry.phi.derivative(0).to_coefficient(&grid);
                let c = e(-2.0).mul(&dphi)?.scale(Complex64::new(0.0, 1.0));
                components.push(vec![HomTerm::new(c, MultiIndex::unit(1, 0), 0.0)]);
            }
            let sym = ClassicalSymbol::new(2.0, domain, components, true)?;
            if let Family::Power { power } = family {
                return crate::complex_powers::power_symbol(&sym, -power, crate::complex_powers::DEFAULT_DEPTH);
            }
            Ok(sym)
        }
        Family::DiracCircle { twist } => {
            // e^{−φ/2}(−i∂ + 2πa/L)e^{−φ/2} = e^{−φ}ξ + e^{−φ}(iφ′/2 + 2πa/L)
            let l = domain.lengths[0];
            let dphi = geometry.phi.derivative(0).to_coefficient(&grid);
            let lower = e(-1.0).mul(&dphi.scale(Complex64::new(0.0, 0.5)).add(&crate::field::CoefficientField::constant(
                2.0 * std::f64::consts::PI * twist / l,
            ))?)?;
            let components = vec![vec![HomTerm::new(e(-1.0), MultiIndex::unit(1, 0), 0.0)], vec![HomTerm::new(lower, zero, 0.0)]];
            ClassicalSymbol::new(1.0, domain, components, true)
        }
    }
}
