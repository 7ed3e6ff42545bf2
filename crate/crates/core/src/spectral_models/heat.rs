//! Heat traces `Tr(f h(A) e^{−t|A|})` and least-squares fits of their small-t expansion.

use super::{ExactSpectrum, ExpansionTerm, Family, ModelOperator, Realization, SmallTimeExpansion};
use crate::field::FourierField;
use crate::linalg::lstsq;
use crate::{Error, Result};
use serde::Serialize;

pub const MAX_FIT_COND: f64 = 1e12;

#[derive(Clone, Debug)]
enum Source {
    Exact { spectrum: ExactSpectrum, factor: f64 },
    Dense { values: Vec<f64>, weights: Vec<f64> },
}

/// Kernel-excluded heat trace of one operator, weight and sign choice.
#[derive(Clone, Debug)]
pub struct HeatTrace {
    source: Source,
    power: f64,
    signed: bool,
    /// `tr(f Π)`: the weight's pairing with the kernel (0 when signed).
    pub kernel_term: f64,
    /// Smallest nonzero |λ|, after the power.
    pub lambda_min: f64,
    /// Smallest trusted t (0 for exact spectra).
    pub eps_floor: f64,
    pub dim: usize,
    pub order: f64,
}

impl HeatTrace {
    pub fn new(op: &ModelOperator, weight: Option<&FourierField>, signed: bool) -> Result<Self> {
        if signed && !matches!(op.family, Family::DiracCircle { .. }) {
            return Err(Error::Precondition("signed traces need an invertible self-adjoint family".into()));
        }
        if let Some(f) = weight {
            if f.domain != op.geometry.domain {
                return Err(Error::Dimension("weight lives on a different domain".into()));
            }
        }
        let (source, kernel_term) = match &op.realization {
            Realization::Exact(spectrum) => {
                let factor = weight.map(|f| f.mean()).unwrap_or(1.0);
                let kernel = if op.kernel_dim > 0 && !signed { factor * op.kernel_dim as f64 } else { 0.0 };
                (Source::Exact { spectrum: spectrum.clone(), factor }, kernel)
            }
            Realization::Dense(d) => {
                let n = d.eigenvalues.len();
                let all_weights: Vec<f64> = match weight {
                    None => vec![1.0; n],
                    Some(f) => {
                        let dens = d.densities.as_ref().ok_or_else(|| {
                            Error::Precondition("weighted traces need eigenvector densities".into())
                        })?;
                        let fv = f.sample(&d.grid);
                        (0..n).map(|k| (0..dens.nrows()).map(|x| fv[x] * dens[(x, k)]).sum()).collect()
                    }
                };
                let keep = ModelOperator::nonkernel_indices(d, op.kernel_dim);
                let mut kernel = 0.0;
                if !signed {
                    let mut kidx: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
                    kidx.sort_unstable();
                    kernel = kidx.iter().map(|&i| all_weights[i]).sum();
                }
                let p = op.power();
                let values = keep.iter().map(|&i| d.eigenvalues[i]).collect::<Vec<_>>();
                let values = if p != 1.0 { values.iter().map(|v| v.abs().powf(p)).collect() } else { values };
                let weights = keep.iter().map(|&i| all_weights[i]).collect();
                (Source::Dense { values, weights }, kernel)
            }
        };
        Ok(Self {
            source,
            power: op.power(),
            signed,
            kernel_term,
            lambda_min: op.lambda_min(),
            eps_floor: op.eps_floor(),
            dim: op.dim(),
            order: op.order,
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.source, Source::Exact { .. })
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    /// Trace at `t` without the trust check.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match &self.source {
            Source::Exact { spectrum, factor } => Ok(factor * spectrum.heat(t, self.power, self.signed)?),
            Source::Dense { values, weights } => Ok(values
                .iter()
                .zip(weights)
                .map(|(&v, &w)| {
                    let s = if self.signed { v.signum() } else { 1.0 };
                    s * w * (-t * v.abs()).exp()
                })
                .sum()),
        }
    }

    /// Known small-t expansion (exact spectra with power 1).
    pub fn expansion(&self) -> Option<SmallTimeExpansion> {
        match &self.source {
            Source::Exact { spectrum, factor } if self.power == 1.0 => {
                let mut e = spectrum.expansion(self.signed);
                for t in &mut e.terms {
                    t.coeff *= factor;
                }
                Some(e)
            }
            _ => None,
        }
    }

    /// Weighted eigenvalue list (dense realizations only).
    pub fn dense_data(&self) -> Option<(&[f64], &[f64])> {
        match &self.source {
            Source::Dense { values, weights } => Some((values, weights)),
            Source::Exact { .. } => None,
        }
    }
}

/// Kernel-excluded `Tr(f h(A) e^{−εA})`, refusing ε below the trust floor.
pub fn heat_trace(op: &ModelOperator, eps: f64, weight: Option<&FourierField>, signed: bool) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let floor = op.eps_floor();
    if eps < floor {
        return Err(Error::Precondition(format!("ε = {eps} is below the trust floor {floor:.3e} for N = {}", op.geometry.n)));
    }
    HeatTrace::new(op, weight, signed)?.eval(eps)
}

/// Fit basis: `ε^{(j−n)/α}` for j in `j`, `ε^k log ε` for k in `log_powers`,
/// `ε^ℓ` for ℓ in `powers`. Coinciding exponents are merged into the a_j column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatBasis {
    pub j: Vec<usize>,
    pub log_powers: Vec<u32>,
    pub powers: Vec<u32>,
}

/// Default basis. Laplacians have no odd-j coefficients on closed manifolds, so
/// only even j are fitted, plus j = n for the ε⁰ channel. On the circle the
/// unsigned and signed Dirac traces are odd and even in t respectively.
pub fn default_basis(op: &ModelOperator, signed: bool) -> HeatBasis {
    let n = op.dim();
    let p = op.power();
    match (&op.family, n) {
        (Family::DiracCircle { .. }, _) => {
            let j = if signed { (1..=13).step_by(2).collect() } else { (0..=12).step_by(2).collect() };
            HeatBasis { j, log_powers: vec![], powers: vec![] }
        }
        (_, 1) => HeatBasis { j: vec![0, 1, 2, 4, 6], log_powers: vec![], powers: vec![] },
        _ if p == 1.0 => HeatBasis { j: vec![0, 2, 4, 6, 8], log_powers: vec![], powers: vec![] },
        _ => HeatBasis { j: vec![0, 2], log_powers: vec![], powers: vec![1, 2] },
    }
}

/// Default fit window `[ε_min, ε_max]` for an operator. The Laplacian upper end
/// keeps the wrap-around terms `e^{−ℓ²/4ε}` below 1e-13, ℓ the shortest loop.
pub fn default_window(op: &ModelOperator) -> Result<(f64, f64)> {
    let lengths = &op.geometry.domain.lengths;
    let lmin = lengths.iter().fold(f64::INFINITY, |m, &l| m.min(l)) * (-op.geometry.phi.sup_bound()).exp();
    let (lo, hi) = match op.family {
        // x = 2πt/L inside the disc of convergence |x| < 2π
        Family::DiracCircle { .. } => (0.02 * lmin / (2.0 * std::f64::consts::PI), 1.5 * lmin / (2.0 * std::f64::consts::PI)),
        _ => (1e-4 * lmin * lmin, 0.008 * lmin * lmin),
    };
    let lo = lo.max(op.eps_floor());
    if lo >= hi {
        return Err(Error::Precondition(format!(
            "trust floor {lo:.3e} lies above the fit window end {hi:.3e}; increase N"
        )));
    }
    Ok((lo, hi))
}

pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let r = (hi / lo).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| lo * r.powi(i as i32)).collect()
}

/// Fitted heat coefficients.
#[derive(Clone, Debug, Serialize)]
pub struct HeatExpansionFit {
    /// (j, coefficient of ε^{(j−n)/α}); the ε⁰ entry has the kernel added back.
    pub a: Vec<(usize, f64)>,
    /// (k, coefficient of ε^k log ε).
    pub b: Vec<(u32, f64)>,
    /// (ℓ, coefficient of ε^ℓ).
    pub c: Vec<(u32, f64)>,
    /// Fitted ε⁰ coefficient of the kernel-excluded trace.
    pub eps0_channel: f64,
    pub kernel_term: f64,
    /// Largest |fit − trace| over the ε grid.
    pub residual: f64,
    pub cond: f64,
    pub window: (f64, f64),
    pub dim: usize,
    pub order: f64,
}

impl HeatExpansionFit {
    pub fn a_coeff(&self, j: usize) -> Option<f64> {
        self.a.iter().find(|(k, _)| *k == j).map(|(_, v)| *v)
    }

    /// Expansion of the kernel-excluded trace (for the Mellin split).
    pub fn expansion(&self) -> SmallTimeExpansion {
        let n = self.dim as f64;
        let mut terms = Vec::new();
        for &(j, c) in &self.a {
            let power = (j as f64 - n) / self.order;
            let coeff = if power.abs() < 1e-12 { self.eps0_channel } else { c };
            terms.push(ExpansionTerm { power, log: false, coeff });
        }
        for &(k, c) in &self.b {
            terms.push(ExpansionTerm { power: k as f64, log: true, coeff: c });
        }
        for &(l, c) in &self.c {
            terms.push(ExpansionTerm { power: l as f64, log: false, coeff: c });
        }
        SmallTimeExpansion { terms }
    }
}

#[derive(Clone, Copy)]
enum Column {
    A(usize, f64),
    B(u32),
    C(u32),
}

/// Least-squares fit of the kernel-excluded heat trace over `eps_grid`.
pub fn heat_fit(
    op: &ModelOperator,
    eps_grid: &[f64],
    basis: &HeatBasis,
    weight: Option<&FourierField>,
    signed: bool,
) -> Result<HeatExpansionFit> {
    let trace = HeatTrace::new(op, weight, signed)?;
    heat_fit_trace(&trace, eps_grid, basis)
}

pub fn heat_fit_trace(trace: &HeatTrace, eps_grid: &[f64], basis: &HeatBasis) -> Result<HeatExpansionFit> {
    if eps_grid.len() < 12 {
        return Err(Error::Precondition(format!("heat fit needs at least 12 ε points, got {}", eps_grid.len())));
    }
    let lo = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_grid.iter().cloned().fold(0.0, f64::max);
    if lo < trace.eps_floor {
        return Err(Error::Precondition(format!("ε = {lo} is below the trust floor {:.3e}", trace.eps_floor)));
    }
    let n = trace.dim as f64;
    let mut columns: Vec<Column> = Vec::new();
    let mut seen: Vec<f64> = Vec::new();
    for &j in &basis.j {
        let p = (j as f64 - n) / trace.order;
        if seen.iter().any(|s| (s - p).abs() < 1e-9) {
            continue;
        }
        seen.push(p);
        columns.push(Column::A(j, p));
    }
    for &l in &basis.powers {
        if seen.iter().any(|s| (s - l as f64).abs() < 1e-9) {
            continue;
        }
        seen.push(l as f64);
        columns.push(Column::C(l));
    }
    for &k in &basis.log_powers {
        columns.push(Column::B(k));
    }
    let values: Vec<f64> = eps_grid.iter().map(|&e| trace.eval(e)).collect::<Result<_>>()?;
    let design: Vec<Vec<f64>> = eps_grid
        .iter()
        .map(|&e| {
            columns
                .iter()
                .map(|c| match *c {
                    Column::A(_, p) => e.powf(p),
                    Column::B(k) => e.powi(k as i32) * e.ln(),
                    Column::C(l) => e.powi(l as i32),
                })
                .collect()
        })
        .collect();
    let weights: Vec<f64> = values.iter().map(|v| 1.0 / (1.0 + v.abs())).collect();
    let sol = lstsq(&design, &values, &weights, MAX_FIT_COND)?;
    let residual = design
        .iter()
        .zip(&values)
        .map(|(row, v)| (row.iter().zip(&sol.x).map(|(a, b)| a * b).sum::<f64>() - v).abs())
        .fold(0.0, f64::max);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let mut eps0 = 0.0;
    for (col, &x) in columns.iter().zip(&sol.x) {
        match *col {
            Column::A(j, p) => {
                if p.abs() < 1e-12 {
                    eps0 = x;
                    a.push((j, x + trace.kernel_term));
                } else {
                    a.push((j, x));
                }
            }
            Column::B(k) => b.push((k, x)),
            Column::C(l) => c.push((l, x)),
        }
    }
    Ok(HeatExpansionFit {
        a,
        b,
        c,
        eps0_channel: eps0,
        kernel_term: trace.kernel_term,
        residual,
        cond: sol.cond,
        window: (lo, hi),
        dim: trace.dim,
        order: trace.order,
    })
}
