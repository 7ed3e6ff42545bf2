//! Laurent data of `z ↦ TR(A Q^{-z})` at z = 0 and Q-weighted traces.
//!
//! Pairs are restricted to operands diagonal in the eigenbasis of the weight
//! (identity, powers, the signed unit `D|D|^{-1}`) plus multiplication
//! operators, which go through the f-weighted heat trace. The z⁻¹ coefficient
//! comes from the symbol side as `res(A)/q`; the rest from Cauchy fits of
//! Mellin samples.

use crate::complex_powers::{power_symbol, DEFAULT_DEPTH};
use crate::field::{Domain, FourierField};
use crate::spectral_models::{
    default_basis, default_window, geometric_grid, heat_fit, operator_symbol, zeta_weighted, Family, HeatExpansionFit,
    MellinOptions, ModelGeometry, ModelOperator,
};
use crate::symbol_core::{symbol_product, wodzicki_residue, ClassicalSymbol, HomTerm, MultiIndex};
use crate::{Complex64, Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Operands `A` paired with a weight `Q` built on the base operator B (Δ_g, or |D_g|).
#[derive(Clone, Debug, PartialEq)]
pub enum TraceOperand {
    Identity,
    /// `B^s`.
    Power { s: f64 },
    /// `f·B^s`.
    Multiplier { f: FourierField, s: f64 },
    /// `D|D|^{-1}` (Dirac weights only).
    SignedUnit,
    /// `f·D|D|^{-1}`; symbol side only.
    SignedMultiplier { f: FourierField },
}

impl TraceOperand {
    fn weight(&self) -> Option<&FourierField> {
        match self {
            Self::Multiplier { f, .. } | Self::SignedMultiplier { f } => Some(f),
            _ => None,
        }
    }

    fn signed(&self) -> bool {
        matches!(self, Self::SignedUnit | Self::SignedMultiplier { .. })
    }

    fn shift(&self) -> f64 {
        match self {
            Self::Power { s } | Self::Multiplier { s, .. } => *s,
            _ => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Identity => "I".into(),
            Self::Power { s } => format!("B^{s}"),
            Self::Multiplier { s, .. } if *s == 0.0 => "f".into(),
            Self::Multiplier { s, .. } => format!("f·B^{s}"),
            Self::SignedUnit => "D|D|^-1".into(),
            Self::SignedMultiplier { .. } => "f·D|D|^-1".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Symbolic,
    Spectral,
    /// Spectral samples whose small-time data came from a heat fit.
    Hybrid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaurentCoefficient {
    pub k: i32,
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaurentExpansion {
    pub pole_order: usize,
    pub coeffs: Vec<LaurentCoefficient>,
    pub expansion_point: f64,
    pub radius: f64,
    /// Fitted z⁻¹ coefficient, kept next to the symbolic one.
    pub spectral_residue: f64,
}

impl LaurentExpansion {
    pub fn coeff(&self, k: i32) -> Option<f64> {
        self.coeffs.iter().find(|c| c.k == k).map(|c| c.value)
    }

    pub fn finite_part(&self) -> f64 {
        self.coeff(0).unwrap_or(0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let dz = z - self.expansion_point;
        self.coeffs.iter().map(|c| dz.powi(c.k) * c.value).sum()
    }
}

#[derive(Clone, Debug)]
pub struct LaurentOptions {
    pub radius: f64,
    pub points: usize,
    /// Highest regular coefficient kept.
    pub max_order: i32,
    pub mellin: MellinOptions,
    /// Grid points per axis for the symbol-side residue.
    pub symbol_grid: usize,
    /// Heat fit for dense weights; fitted on the default window when absent.
    pub fit: Option<HeatExpansionFit>,
}

impl Default for LaurentOptions {
    fn default() -> Self {
        Self { radius: 0.1, points: 64, max_order: 3, mellin: MellinOptions::default(), symbol_grid: 32, fit: None }
    }
}

/// Deepest pole order probed by the fit.
const MAX_POLE: i32 = 3;
const POLE_TOL: f64 = 1e-7;

/// Trapezoidal Cauchy coefficients `c_k`, k ∈ [kmin, kmax], of f on `|z − z0| = ρ`.
pub fn cauchy_coefficients<F>(f: F, z0: Complex64, radius: f64, points: usize, kmin: i32, kmax: i32) -> Result<Vec<(i32, Complex64)>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if points < 8 || (kmax - kmin) as usize >= points {
        return Err(Error::Precondition(format!("{points} circle points cannot resolve {} coefficients", kmax - kmin + 1)));
    }
    let nodes: Vec<Complex64> = (0..points).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64)).collect();
    let samples = crate::par::try_map(&nodes, |&u| f(z0 + u * radius))?;
    Ok((kmin..=kmax)
        .map(|k| {
            let s: Complex64 = nodes.iter().zip(&samples).map(|(u, v)| v * u.powi(-k)).sum();
            (k, s / (points as f64 * radius.powi(k)))
        })
        .collect())
}

fn check_pair(a: &TraceOperand, q: &ModelOperator) -> Result<()> {
    match (&q.family, a) {
        (Family::DiracCircle { .. }, TraceOperand::Multiplier { .. } | TraceOperand::SignedMultiplier { .. }) => {
            Err(Error::Unsupported("multipliers against Dirac weights have no diagonal or heat route".into()))
        }
        (Family::DiracCircle { .. }, _) => Ok(()),
        (_, TraceOperand::SignedUnit | TraceOperand::SignedMultiplier { .. }) => Err(Error::Unsupported("the signed unit needs a Dirac weight".into())),
        (Family::Power { power }, _) if *power <= 0.0 => Err(Error::Precondition("weights need positive order".into())),
        _ => Ok(()),
    }
}

/// The heat fit feeding the Mellin route of a dense weight, on `window` or the default one.
pub fn pair_fit(a: &TraceOperand, q: &ModelOperator, window: Option<(f64, f64)>, points: usize) -> Result<Option<HeatExpansionFit>> {
    if q.is_exact() {
        return Ok(None);
    }
    let mut base = q.clone();
    if let Family::Power { .. } = base.family {
        base.family = Family::Laplacian;
        base.order = 2.0;
    }
    let (lo, hi) = match window {
        Some(w) => w,
        None => default_window(&base)?,
    };
    let grid = geometric_grid(lo, hi, points);
    Ok(Some(heat_fit(&base, &grid, &default_basis(&base, a.signed()), a.weight(), a.signed())?))
}

/// Samples `TR(A Q^{-z})` at a complex z through the Mellin representation.
pub fn sample_tr(a: &TraceOperand, q: &ModelOperator, z: Complex64, fit: Option<&HeatExpansionFit>, opts: &MellinOptions) -> Result<Complex64> {
    // TR(B^s B^{-pz}) = ζ_B(pz − s) = ζ_Q(z − s/p)
    let w = z - a.shift() / q.power();
    zeta_weighted(q, a.weight(), a.signed(), w, fit, opts)
}

/// Symbol of the base operator squared to an isotropic weight: Δ_g, or D_g².
fn base_weight_symbol(family: &Family, geometry: &ModelGeometry, n: usize) -> Result<(ClassicalSymbol, f64)> {
    match family {
        Family::DiracCircle { .. } => {
            let d = operator_symbol(family, geometry, n)?;
            Ok((symbol_product(&d, &d, DEFAULT_DEPTH)?, 0.5))
        }
        _ => Ok((operator_symbol(&Family::Laplacian, geometry, n)?, 1.0)),
    }
}

/// Symbol of `A` (powers relative to the base operator of `family`) through
/// the depth needed for its residue.
pub fn operand_symbol(a: &TraceOperand, family: &Family, geometry: &ModelGeometry, n: usize) -> Result<ClassicalSymbol> {
    let domain: Domain = geometry.domain.clone();
    let dim = geometry.dim();
    let (w, e) = base_weight_symbol(family, geometry, n)?;
    let power = |s: f64| -> Result<ClassicalSymbol> {
        let order = w.order * e * s;
        let j = order + dim as f64;
        let depth = if j >= 0.0 && (j - j.round()).abs() < 1e-9 { (j.round() as usize).max(1) } else { 1 };
        power_symbol(&w, -e * s, depth)
    };
    let signed = || -> Result<ClassicalSymbol> {
        if !matches!(family, Family::DiracCircle { .. }) {
            return Err(Error::Unsupported("the signed unit needs a Dirac family".into()));
        }
        let d = operator_symbol(family, geometry, n)?;
        let inv_abs = power_symbol(&w, 0.5, dim)?;
        symbol_product(&d, &inv_abs, dim)
    };
    let multiply = |f: &FourierField, b: ClassicalSymbol| -> Result<ClassicalSymbol> {
        let grid = match b.grid() {
            Some(g) => g,
            None => std::sync::Arc::new(crate::field::PeriodicGrid::new(domain.clone(), n)),
        };
        let m = ClassicalSymbol::multiplication(domain.clone(), f.to_coefficient(&grid))?;
        let depth = if b.finite { b.depth().max(dim) } else { b.depth() };
        symbol_product(&m, &b, depth)
    };
    match a {
        TraceOperand::Identity => Ok(ClassicalSymbol::identity(domain.clone())),
        TraceOperand::Power { s } => power(*s),
        TraceOperand::Multiplier { f, s } => {
            let b = if *s == 0.0 { ClassicalSymbol::identity(domain.clone()) } else { power(*s)? };
            multiply(f, b)
        }
        TraceOperand::SignedUnit => signed(),
        TraceOperand::SignedMultiplier { f } => multiply(f, signed()?),
    }
}

/// `res(A)/q`, the residue of `TR(A Q^{-z})` at z = 0.
pub fn symbolic_pole(a: &TraceOperand, q: &ModelOperator, n: usize) -> Result<f64> {
    if let TraceOperand::Identity = a {
        return Ok(0.0);
    }
    Ok(wodzicki_residue(&operand_symbol(a, &q.family, &q.geometry, n)?)? / q.order)
}

pub fn laurent_tr(a: &TraceOperand, q: &ModelOperator, opts: &LaurentOptions) -> Result<LaurentExpansion> {
    check_pair(a, q)?;
    let fit = match &opts.fit {
        Some(f) => Some(f.clone()),
        None => pair_fit(a, q, None, 16)?,
    };
    let provenance = if fit.is_some() { Provenance::Hybrid } else { Provenance::Spectral };
    let coeffs = cauchy_coefficients(
        |z| sample_tr(a, q, z, fit.as_ref(), &opts.mellin),
        Complex64::new(0.0, 0.0),
        opts.radius,
        opts.points,
        -MAX_POLE,
        opts.max_order,
    )?;
    let scale = coeffs.iter().filter(|(k, _)| *k >= 0).map(|(_, c)| c.norm()).fold(1.0, f64::max);
    let fitted_order =
        coeffs.iter().filter(|(k, c)| *k < 0 && c.norm() > POLE_TOL * scale).map(|(k, _)| (-k) as usize).max().unwrap_or(0);
    let symbolic = symbolic_pole(a, q, opts.symbol_grid)?;
    let pole_order = fitted_order.max(usize::from(symbolic != 0.0));
    let spectral_residue = coeffs.iter().find(|(k, _)| *k == -1).map(|(_, c)| c.re).unwrap_or(0.0);
    let mut out = Vec::new();
    for (k, c) in coeffs {
        if k < -(pole_order as i32) {
            continue;
        }
        if k == -1 {
            out.push(LaurentCoefficient { k, value: symbolic, provenance: Provenance::Symbolic });
        } else {
            out.push(LaurentCoefficient { k, value: c.re, provenance });
        }
    }
    Ok(LaurentExpansion { pole_order, coeffs: out, expansion_point: 0.0, radius: opts.radius, spectral_residue })
}

/// `tr(A Π_Q)` for the finite-rank kernel projector.
pub fn kernel_correction(a: &TraceOperand, q: &ModelOperator) -> f64 {
    if q.kernel_dim == 0 {
        return 0.0;
    }
    match a {
        TraceOperand::Identity => q.kernel_dim as f64,
        // Π projects onto constants; B^s vanishes there
        TraceOperand::Multiplier { f, s } if *s == 0.0 => q.geometry.mean_g(f),
        _ => 0.0,
    }
}

/// `tr^Q(A) = fp_{z=0} TR(A Q^{-z}) + tr(A Π_Q)`.
pub fn weighted_trace(a: &TraceOperand, q: &ModelOperator, opts: &LaurentOptions) -> Result<f64> {
    Ok(laurent_tr(a, q, opts)?.finite_part() + kernel_correction(a, q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub operand: String,
    pub weight: String,
    pub symbolic: Option<f64>,
    pub spectral: Option<f64>,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

/// Compares `res(A)/q` with the fitted z⁻¹ coefficient; failures land in `error`.
pub fn consistency_check(a: &TraceOperand, q: &ModelOperator, opts: &LaurentOptions) -> ConsistencyReport {
    let mut report = ConsistencyReport {
        operand: a.label(),
        weight: q.family.id().into(),
        symbolic: None,
        spectral: None,
        gap: None,
        error: None,
    };
    match laurent_tr(a, q, opts) {
        Ok(l) => {
            let s = l.coeff(-1).unwrap_or(0.0);
            report.symbolic = Some(s);
            report.spectral = Some(l.spectral_residue);
            report.gap = Some((s - l.spectral_residue).abs());
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

/// `ξ|ξ|^{-1}` on the circle, the principal symbol of the signed unit.
pub fn sign_symbol(domain: Domain) -> Result<ClassicalSymbol> {
    ClassicalSymbol::new(0.0, domain, vec![vec![HomTerm::constant(1.0, MultiIndex::unit(1, 0), -1.0)]], false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_models::{build_operator, BuildOptions};
    use crate::special::{riemann_zeta, EULER_GAMMA};

    fn circle() -> ModelOperator {
        let g = ModelGeometry::flat(Domain::circle(2.0 * PI), 32).unwrap();
        build_operator(&Family::Laplacian, &g, BuildOptions::default()).unwrap()
    }

    fn torus() -> ModelOperator {
        let g = ModelGeometry::flat(Domain::torus(1.0, 1.0), 32).unwrap();
        build_operator(&Family::Laplacian, &g, BuildOptions::default()).unwrap()
    }

    #[test]
    fn cauchy_fit_recovers_known_laurent_series() {
        // 1/z + 2 − 3z + z²/2 plus a tail far outside the circle
        let f = |z: Complex64| Ok(1.0 / z + 2.0 - 3.0 * z + 0.5 * z * z + z.powi(3) / (1.0 - z / 5.0));
        let c = cauchy_coefficients(f, Complex64::new(0.0, 0.0), 0.1, 64, -3, 3).unwrap();
        let want = [0.0, 0.0, 1.0, 2.0, -3.0, 0.5, 1.0];
        for ((_, v), w) in c.iter().zip(want) {
            assert!((v - w).norm() < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn inverse_sqrt_laplacian_on_circle() {
        let l = laurent_tr(&TraceOperand::Power { s: -0.5 }, &circle(), &LaurentOptions::default()).unwrap();
        assert_eq!(l.pole_order, 1);
        assert!((l.coeff(-1).unwrap() - 1.0).abs() < 1e-10);
        assert!((l.spectral_residue - 1.0).abs() < 1e-6);
        assert!((l.finite_part() - 2.0 * EULER_GAMMA).abs() < 1e-6);
        // 2ζ_R(2z + 1) everywhere on a smaller circle
        let z = Complex64::new(0.02, 0.03);
        let exact = 2.0 * riemann_zeta(2.0 * z + 1.0);
        assert!((l.eval(z) - exact).norm() < 1e-6);
    }

    #[test]
    fn identity_on_torus() {
        let q = torus();
        let l = laurent_tr(&TraceOperand::Identity, &q, &LaurentOptions::default()).unwrap();
        assert_eq!(l.pole_order, 0);
        assert!((l.finite_part() + 1.0).abs() < 1e-8);
        assert!(weighted_trace(&TraceOperand::Identity, &q, &LaurentOptions::default()).unwrap().abs() < 1e-8);
    }

    #[test]
    fn inverse_laplacian_pole_on_torus() {
        let r = consistency_check(&TraceOperand::Power { s: -1.0 }, &torus(), &LaurentOptions::default());
        assert!(r.error.is_none(), "{r:?}");
        assert!((r.symbolic.unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-12);
        assert!(r.gap.unwrap() < 1e-5);
    }

    #[test]
    fn first_coefficient_is_minus_log_trace() {
        let q = circle();
        let l = laurent_tr(&TraceOperand::Identity, &q, &LaurentOptions::default()).unwrap();
        assert!((l.coeff(1).unwrap() + 2.0 * (2.0 * PI).ln()).abs() < 1e-7);
    }

    #[test]
    fn radius_independence() {
        let q = circle();
        let a = TraceOperand::Power { s: -0.5 };
        let l1 = laurent_tr(&a, &q, &LaurentOptions::default()).unwrap();
        let l2 = laurent_tr(&a, &q, &LaurentOptions { radius: 0.05, ..Default::default() }).unwrap();
        for k in 0..=2 {
            assert!((l1.coeff(k).unwrap() - l2.coeff(k).unwrap()).abs() < 1e-6, "k = {k}");
        }
    }

    #[test]
    fn truncation_error_scales_with_radius() {
        let q = circle();
        let l = laurent_tr(&TraceOperand::Identity, &q, &LaurentOptions::default()).unwrap();
        let err = |rho: f64| {
            let z = Complex64::from_polar(rho, 0.7);
            (l.eval(z) - 2.0 * riemann_zeta(2.0 * z)).norm()
        };
        // K = 3, so halving ρ cuts the error by about 2⁴
        let ratio = err(0.04) / err(0.02);
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn signed_unit_gives_eta() {
        let g = ModelGeometry::flat(Domain::circle(2.0 * PI), 32).unwrap();
        let q = build_operator(&Family::DiracCircle { twist: 0.25 }, &g, BuildOptions::default()).unwrap();
        let l = laurent_tr(&TraceOperand::SignedUnit, &q, &LaurentOptions::default()).unwrap();
        assert_eq!(l.pole_order, 0);
        assert!((weighted_trace(&TraceOperand::SignedUnit, &q, &LaurentOptions::default()).unwrap() - 0.5).abs() < 1e-8);
        assert!(symbolic_pole(&TraceOperand::SignedUnit, &q, 32).unwrap().abs() < 1e-14);
        let s = operand_symbol(&TraceOperand::SignedUnit, &q.family, &g, 32).unwrap();
        assert!(s.max_gap(&sign_symbol(g.domain.clone()).unwrap(), 0).unwrap() < 1e-14);
        assert!(s.component(1).unwrap().iter().all(|t| t.coeff.max_abs() < 1e-14));
    }

    #[test]
    fn multiplier_on_flat_torus() {
        let q = torus();
        let f = FourierField::random(q.geometry.domain.clone(), 3, 2, 0.5, 0.7);
        let a = TraceOperand::Multiplier { f: f.clone(), s: 0.0 };
        let tr = weighted_trace(&a, &q, &LaurentOptions::default()).unwrap();
        // ∫ f a_2 = 0 on the flat torus
        assert!(tr.abs() < 1e-8);
        assert!((kernel_correction(&a, &q) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn log_weighted_family_by_differentiation() {
        // TR(A log Q Q^{-z}) = −d/dz TR(A Q^{-z}): double pole with coefficient res(A)/q,
        // no simple pole, constant term −c₁.
        let q = circle();
        let a = TraceOperand::Power { s: -0.5 };
        let opts = LaurentOptions::default();
        let base = laurent_tr(&a, &q, &opts).unwrap();
        let h = 1e-4;
        let d = |z: Complex64| -> Result<Complex64> {
            let p = sample_tr(&a, &q, z + h, None, &opts.mellin)?;
            let m = sample_tr(&a, &q, z - h, None, &opts.mellin)?;
            Ok(-(p - m) / (2.0 * h))
        };
        let c = cauchy_coefficients(d, Complex64::new(0.0, 0.0), 0.1, 64, -3, 1).unwrap();
        let get = |k: i32| c.iter().find(|(j, _)| *j == k).unwrap().1;
        assert!(get(-3).norm() < 1e-6);
        assert!((get(-2).re - base.coeff(-1).unwrap()).abs() < 1e-6);
        assert!(get(-1).norm() < 1e-6);
        assert!((get(0).re + base.coeff(1).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn pole_order_is_at_most_one_for_classical_operands() {
        let q = circle();
        for a in [TraceOperand::Identity, TraceOperand::Power { s: -0.5 }, TraceOperand::Power { s: 0.5 }, TraceOperand::Power { s: -1.5 }] {
            assert!(laurent_tr(&a, &q, &LaurentOptions::default()).unwrap().pole_order <= 1);
        }
    }

    #[test]
    fn refused_pairs() {
        assert!(laurent_tr(&TraceOperand::SignedUnit, &circle(), &LaurentOptions::default()).is_err());
        let r = consistency_check(&TraceOperand::SignedUnit, &circle(), &LaurentOptions::default());
        assert!(r.error.is_some() && r.gap.is_none());
    }
}
