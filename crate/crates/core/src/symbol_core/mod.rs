//! Classical symbols built from terms `c(x) ξ^m |ξ|^s`.
//!
//! A [`ClassicalSymbol`] of order α stores components `σ_{α−j}` for
//! `j = 0..=J`; every term of component `j` is homogeneous of degree `α − j`.
//! Derivatives in ξ are exact, derivatives in x are spectral.

mod cutoff;
mod json;
mod product;
mod residue;

pub use cutoff::{
    ball_integral, ball_integral_asymptotics, cutoff_integral, BallFit, BracketTerm, CutoffProfile,
    CutoffResult, FullSymbol,
};
pub use json::{CoeffJson, ComponentJson, Scalar, SymbolJson, TermJson};
pub use product::symbol_product;
pub use residue::{residue_density, sphere_moment, wodzicki_residue, wodzicki_residue_complex};

use crate::field::{CoefficientField, Domain, PeriodicGrid};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Degrees closer than this are treated as equal.
pub const DEGREE_TOL: f64 = 1e-9;

/// Exponents of ξ, dimension 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: [u32; 2],
    dim: u8,
}

impl MultiIndex {
    pub fn new(entries: &[u32]) -> Result<Self> {
        match entries {
            [a] => Ok(Self { entries: [*a, 0], dim: 1 }),
            [a, b] => Ok(Self { entries: [*a, *b], dim: 2 }),
            _ => Err(Error::Dimension(format!("multi-index of length {}", entries.len()))),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self { entries: [0, 0], dim: dim as u8 }
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut m = Self::zero(dim);
        m.entries[axis] = 1;
        m
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn degree(&self) -> u32 {
        self.entries().iter().sum()
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.entries[axis]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { entries: [self.entries[0] + other.entries[0], self.entries[1] + other.entries[1]], dim: self.dim }
    }

    fn with(&self, axis: usize, value: u32) -> Self {
        let mut m = *self;
        m.entries[axis] = value;
        m
    }

    /// γ! = Π γ_i!
    pub fn factorial(&self) -> f64 {
        self.entries().iter().map(|&e| crate::special::factorial(e)).product()
    }

    /// All multi-indices of total degree `d`.
    pub fn of_degree(dim: usize, d: u32) -> Vec<Self> {
        match dim {
            1 => vec![Self { entries: [d, 0], dim: 1 }],
            _ => (0..=d).rev().map(|a| Self { entries: [a, d - a], dim: 2 }).collect(),
        }
    }

    /// ξ^m for a concrete covector.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.entries().iter().zip(xi).map(|(&e, &x)| x.powi(e as i32)).product()
    }
}

/// `coeff(x) · ξ^monomial · |ξ|^radial_power`.
#[derive(Clone, Debug)]
pub struct HomTerm {
    pub coeff: CoefficientField,
    pub monomial: MultiIndex,
    pub radial_power: f64,
}

impl HomTerm {
    pub fn new(coeff: CoefficientField, monomial: MultiIndex, radial_power: f64) -> Self {
        Self { coeff, monomial, radial_power }
    }

    pub fn constant(c: f64, monomial: MultiIndex, radial_power: f64) -> Self {
        Self::new(CoefficientField::constant(c), monomial, radial_power)
    }

    pub fn degree(&self) -> f64 {
        self.monomial.degree() as f64 + self.radial_power
    }

    pub fn eval(&self, idx: usize, xi: &[f64]) -> Complex64 {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.coeff.value(idx) * self.monomial.monomial(xi) * r.powf(self.radial_power)
    }

    /// ∂_{ξ_axis}(ξ^m |ξ|^s) = m_i ξ^{m−e_i} |ξ|^s + s ξ^{m+e_i} |ξ|^{s−2}
    pub fn d_xi(&self, axis: usize) -> Vec<HomTerm> {
        let mut out = Vec::with_capacity(2);
        let mi = self.monomial.get(axis);
        if mi > 0 {
            out.push(HomTerm {
                coeff: self.coeff.scale(Complex64::from(mi as f64)),
                monomial: self.monomial.with(axis, mi - 1),
                radial_power: self.radial_power,
            });
        }
        if self.radial_power != 0.0 {
            out.push(HomTerm {
                coeff: self.coeff.scale(Complex64::from(self.radial_power)),
                monomial: self.monomial.with(axis, mi + 1),
                radial_power: self.radial_power - 2.0,
            });
        }
        out
    }

    pub fn d_x(&self, axis: usize) -> HomTerm {
        HomTerm { coeff: self.coeff.derivative(axis), monomial: self.monomial, radial_power: self.radial_power }
    }

    pub fn mul(&self, other: &HomTerm) -> Result<HomTerm> {
        Ok(HomTerm {
            coeff: self.coeff.mul(&other.coeff)?,
            monomial: self.monomial.add(&other.monomial),
            radial_power: self.radial_power + other.radial_power,
        })
    }

    pub fn scale(&self, s: Complex64) -> HomTerm {
        HomTerm { coeff: self.coeff.scale(s), monomial: self.monomial, radial_power: self.radial_power }
    }

    /// Polynomial in ξ: the radial factor is |ξ|^{2k}, k ≥ 0.
    pub fn is_polynomial(&self) -> bool {
        let s = self.radial_power;
        s >= 0.0 && (s / 2.0).fract() == 0.0
    }
}

fn radial_key(s: f64) -> i64 {
    (s * 1e9).round() as i64
}

/// Rewrites ξ^m|ξ|^s so that the first exponent is 0 or 1, using
/// ξ₁² = |ξ|² − ξ₂² (2D) or ξ² = |ξ|² (1D). The reduced form is unique.
fn canonical_pieces(m: MultiIndex, s: f64) -> Vec<(f64, MultiIndex, f64)> {
    if m.dim() == 1 {
        let a = m.get(0);
        let r = a % 2;
        return vec![(1.0, m.with(0, r), s + (a - r) as f64)];
    }
    let a = m.get(0);
    if a < 2 {
        return vec![(1.0, m, s)];
    }
    // ξ₁^a ξ₂^b |ξ|^s = ξ₁^{a−2} ξ₂^b |ξ|^{s+2} − ξ₁^{a−2} ξ₂^{b+2} |ξ|^s
    let lowered = m.with(0, a - 2);
    let mut out = canonical_pieces(lowered, s + 2.0);
    for (c, mm, ss) in canonical_pieces(lowered.with(1, lowered.get(1) + 2), s) {
        out.push((-c, mm, ss));
    }
    out
}

/// Canonicalizes monomials and merges like terms.
pub fn merge_terms(terms: Vec<HomTerm>) -> Result<Vec<HomTerm>> {
    let mut acc: BTreeMap<(MultiIndex, i64), HomTerm> = BTreeMap::new();
    for t in terms {
        if t.coeff.is_zero() {
            continue;
        }
        for (c, m, s) in canonical_pieces(t.monomial, t.radial_power) {
            let coeff = if c == 1.0 { t.coeff.clone() } else { t.coeff.scale(Complex64::from(c)) };
            let key = (m, radial_key(s));
            match acc.get_mut(&key) {
                Some(existing) => existing.coeff = existing.coeff.add(&coeff)?,
                None => {
                    acc.insert(key, HomTerm { coeff, monomial: m, radial_power: s });
                }
            }
        }
    }
    Ok(acc.into_values().filter(|t| !t.coeff.is_zero()).collect())
}

/// Classical symbol `σ ∼ Σ_j σ_{α−j}` truncated at depth `J`.
///
/// `finite` marks symbols whose components beyond the stored depth vanish
/// identically (differential operators, exact homogeneous symbols).
#[derive(Clone, Debug)]
pub struct ClassicalSymbol {
    pub order: f64,
    pub domain: Domain,
    pub components: Vec<Vec<HomTerm>>,
    pub finite: bool,
}

impl ClassicalSymbol {
    pub fn new(order: f64, domain: Domain, components: Vec<Vec<HomTerm>>, finite: bool) -> Result<Self> {
        let dim = domain.dim();
        let mut merged = Vec::with_capacity(components.len());
        for (j, comp) in components.into_iter().enumerate() {
            for t in &comp {
                if t.monomial.dim() != dim {
                    return Err(Error::Dimension(format!(
                        "term monomial has dimension {}, symbol has {}",
                        t.monomial.dim(),
                        dim
                    )));
                }
                if (t.degree() - (order - j as f64)).abs() > DEGREE_TOL {
                    return Err(Error::InvalidSymbol(format!(
                        "term of degree {} in component {j} of a symbol of order {order}",
                        t.degree()
                    )));
                }
                if let Some(g) = t.coeff.grid() {
                    if g.domain != domain {
                        return Err(Error::IncompatibleGrids);
                    }
                }
            }
            merged.push(merge_terms(comp)?);
        }
        if merged.is_empty() {
            merged.push(Vec::new());
        }
        Ok(Self { order, domain, components: merged, finite })
    }

    pub fn zero(domain: Domain, order: f64) -> Self {
        Self { order, domain, components: vec![Vec::new()], finite: true }
    }

    /// Single homogeneous term, exact (no lower components).
    pub fn homogeneous(domain: Domain, term: HomTerm) -> Result<Self> {
        let order = term.degree();
        Self::new(order, domain, vec![vec![term]], true)
    }

    pub fn identity(domain: Domain) -> Self {
        let dim = domain.dim();
        Self::new(0.0, domain, vec![vec![HomTerm::constant(1.0, MultiIndex::zero(dim), 0.0)]], true)
            .expect("identity symbol is valid")
    }

    /// Multiplication by a function.
    pub fn multiplication(domain: Domain, f: CoefficientField) -> Result<Self> {
        let dim = domain.dim();
        Self::new(0.0, domain, vec![vec![HomTerm::new(f, MultiIndex::zero(dim), 0.0)]], true)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn depth(&self) -> usize {
        self.components.len() - 1
    }

    /// Component `j`, or an empty slice if the symbol is finite and `j` lies beyond its depth.
    pub fn component(&self, j: usize) -> Result<&[HomTerm]> {
        if j < self.components.len() {
            Ok(&self.components[j])
        } else if self.finite {
            Ok(&[])
        } else {
            Err(Error::DepthExceeded { requested: j, available: self.depth() })
        }
    }

    /// The grid shared by all grid-valued coefficients, if any.
    pub fn grid(&self) -> Option<Arc<PeriodicGrid>> {
        self.components.iter().flatten().find_map(|t| t.coeff.grid().cloned())
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.components.iter().flatten().all(|t| t.coeff.grid().is_none())
    }

    pub fn is_polynomial(&self) -> bool {
        self.components.iter().flatten().all(HomTerm::is_polynomial)
    }

    /// Largest |γ| with ∂_ξ^γ σ ≠ 0 for a finite polynomial symbol.
    pub(crate) fn polynomial_degree(&self) -> Option<u32> {
        if !(self.finite && self.is_polynomial()) {
            return None;
        }
        Some(self.components.iter().flatten().map(|t| t.degree().round() as u32).max().unwrap_or(0))
    }

    pub fn eval_component(&self, j: usize, idx: usize, xi: &[f64]) -> Result<Complex64> {
        Ok(self.component(j)?.iter().map(|t| t.eval(idx, xi)).sum())
    }

    pub fn truncate(&self, depth: usize) -> Result<Self> {
        let mut components = Vec::with_capacity(depth + 1);
        for j in 0..=depth {
            components.push(self.component(j)?.to_vec());
        }
        let finite = self.finite && depth >= self.depth();
        Ok(Self { order: self.order, domain: self.domain.clone(), components, finite })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let components = self.components.iter().map(|c| c.iter().map(|t| t.scale(s)).collect()).collect();
        Self { order: self.order, domain: self.domain.clone(), components, finite: self.finite }
    }

    /// Componentwise sum of two symbols of equal order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.order - other.order).abs() > DEGREE_TOL {
            return Err(Error::InvalidSymbol("adding symbols of different order".into()));
        }
        let depth = match (self.finite, other.finite) {
            (true, true) => self.depth().max(other.depth()),
            (true, false) => other.depth(),
            (false, true) => self.depth(),
            (false, false) => self.depth().min(other.depth()),
        };
        let mut components = Vec::with_capacity(depth + 1);
        for j in 0..=depth {
            let mut c = self.component(j)?.to_vec();
            c.extend_from_slice(other.component(j)?);
            components.push(c);
        }
        Self::new(self.order, self.domain.clone(), components, self.finite && other.finite)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest |σ_{α−j}(x, ω)| over grid points and sample directions, j ≤ depth.
    pub fn max_abs(&self, depth: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..=depth {
            worst = worst.max(self.component_max_abs(j)?);
        }
        Ok(worst)
    }

    /// Largest componentwise difference through `depth`, sampled as in [`Self::max_abs`].
    pub fn max_gap(&self, other: &Self, depth: usize) -> Result<f64> {
        let diff = self.truncate(depth)?.sub(&other.truncate(depth)?)?;
        diff.max_abs(depth)
    }

    /// Componentwise gap scaled by `max(1, max |σ_{α−j}|)`, maximized over j ≤ depth.
    pub fn max_scaled_gap(&self, other: &Self, depth: usize) -> Result<f64> {
        let diff = self.truncate(depth)?.sub(&other.truncate(depth)?)?;
        let mut worst: f64 = 0.0;
        for j in 0..=depth {
            let gap = diff.component_max_abs(j)?;
            let scale = self.component_max_abs(j)?.max(other.component_max_abs(j)?).max(1.0);
            worst = worst.max(gap / scale);
        }
        Ok(worst)
    }

    fn component_max_abs(&self, j: usize) -> Result<f64> {
        let points = self.grid().map(|g| g.len()).unwrap_or(1);
        let dirs = sample_directions(self.dim());
        let comp = self.component(j)?;
        let mut worst: f64 = 0.0;
        for idx in 0..points {
            for d in &dirs {
                let v: Complex64 = comp.iter().map(|t| t.eval(idx, d)).sum();
                worst = worst.max(v.norm());
            }
        }
        Ok(worst)
    }
}

/// Unit covectors used to compare homogeneous components.
pub fn sample_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..12)
            .map(|k| {
                let th = 0.1234 + std::f64::consts::PI * k as f64 / 6.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FourierField;

    fn xi_norm(xi: &[f64]) -> f64 {
        xi.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn d_xi_matches_finite_difference() {
        let t = HomTerm::constant(1.3, MultiIndex::new(&[2, 1]).unwrap(), -1.7);
        let xi = [0.6, -1.1];
        for axis in 0..2 {
            let exact: Complex64 = t.d_xi(axis).iter().map(|d| d.eval(0, &xi)).sum();
            let h = 1e-6;
            let mut xp = xi;
            let mut xm = xi;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (t.eval(0, &xp) - t.eval(0, &xm)) / (2.0 * h);
            assert!((exact - fd).norm() < 1e-7, "axis {axis}");
        }
    }

    #[test]
    fn canonical_form_preserves_values() {
        let terms = vec![
            HomTerm::constant(0.7, MultiIndex::new(&[4, 1]).unwrap(), -3.5),
            HomTerm::constant(-0.2, MultiIndex::new(&[3, 2]).unwrap(), -3.5),
        ];
        let merged = merge_terms(terms.clone()).unwrap();
        assert!(merged.iter().all(|t| t.monomial.get(0) <= 1));
        for d in sample_directions(2) {
            let xi: Vec<f64> = d.iter().map(|x| 1.7 * x).collect();
            let a: Complex64 = terms.iter().map(|t| t.eval(0, &xi)).sum();
            let b: Complex64 = merged.iter().map(|t| t.eval(0, &xi)).sum();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_form_1d() {
        let merged = merge_terms(vec![HomTerm::constant(2.0, MultiIndex::new(&[3]).unwrap(), 0.5)]).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].monomial.get(0), 1);
        assert!((merged[0].radial_power - 2.5).abs() < 1e-15);
    }

    #[test]
    fn homogeneity_rejects_bad_degree() {
        let d = Domain::torus(1.0, 1.0);
        let t = HomTerm::constant(1.0, MultiIndex::zero(2), -1.0);
        assert!(ClassicalSymbol::new(-2.0, d, vec![vec![t]], true).is_err());
    }

    #[test]
    fn components_are_homogeneous() {
        let domain = Domain::torus(1.0, 1.0);
        let grid = Arc::new(PeriodicGrid::new(domain.clone(), 8));
        let f = FourierField::random(domain.clone(), 1, 2, 0.3, 1.0).to_coefficient(&grid);
        let sym = ClassicalSymbol::new(
            -0.4,
            domain,
            vec![
                vec![HomTerm::new(f.clone(), MultiIndex::new(&[1, 0]).unwrap(), -1.4)],
                vec![HomTerm::new(f, MultiIndex::zero(2), -1.4)],
            ],
            false,
        )
        .unwrap();
        let xi = [0.3, 0.8];
        for &s in &[2.0, 3.0, 5.0] {
            for j in 0..=1 {
                let a = sym.eval_component(j, 5, &[s * xi[0], s * xi[1]]).unwrap();
                let b = sym.eval_component(j, 5, &xi).unwrap() * f64::powf(s, sym.order - j as f64);
                assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
            }
        }
        assert!(xi_norm(&xi) > 0.0);
        assert!(matches!(sym.component(3), Err(Error::DepthExceeded { .. })));
    }
}
