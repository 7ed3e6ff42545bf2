//! Resolvent parametrices, complex powers `Q^{-z}` and `log Q` on the symbol side.
//!
//! The leading symbol must be isotropic, `a(x, ξ) = c(x)|ξ|^q` with `c > 0`.
//! Parametrix terms are `N(x, ξ)(a − λ)^{-k}`; contour integration against
//! `λ^{-z}` (cut along the negative axis) turns each into
//! `(z)_{k−1}/(k−1)! · N a^{−z−k+1}`.

use crate::field::{CoefficientField, Domain};
use crate::special::{rising_over_factorial, rising_over_factorial_dz};
use crate::symbol_core::{
    merge_terms, sample_directions, symbol_product, wodzicki_residue, ClassicalSymbol, HomTerm, MultiIndex,
    DEGREE_TOL,
};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};

/// Leading symbol `c(x)|ξ|^q`.
#[derive(Clone, Debug)]
pub struct IsotropicLeading {
    pub coeff: CoefficientField,
    pub q: f64,
}

impl IsotropicLeading {
    /// Extracts `c|ξ|^q` from component 0 of `sym` and checks `c > 0`.
    pub fn of(sym: &ClassicalSymbol) -> Result<Self> {
        let lead = sym.component(0)?;
        if lead.len() != 1 || lead[0].monomial.degree() != 0 {
            return Err(Error::Unsupported("leading symbol is not of the form c(x)|ξ|^q".into()));
        }
        let t = &lead[0];
        if !(sym.order > 0.0) {
            return Err(Error::Precondition("weight must have positive order".into()));
        }
        let points = t.coeff.grid().map(|g| g.len()).unwrap_or(1);
        for idx in 0..points {
            let v = t.coeff.value(idx);
            if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re.abs() {
                return Err(Error::NotElliptic(format!("leading coefficient {v} at grid point {idx}")));
            }
        }
        Ok(Self { coeff: t.coeff.map(|v| Complex64::from(v.re)), q: t.radial_power })
    }

    fn d_xi(&self, axis: usize, dim: usize) -> HomTerm {
        HomTerm::new(self.coeff.scale(Complex64::from(self.q)), MultiIndex::unit(dim, axis), self.q - 2.0)
    }

    fn d_x(&self, axis: usize, dim: usize) -> HomTerm {
        HomTerm::new(self.coeff.derivative(axis), MultiIndex::zero(dim), self.q)
    }
}

/// `numerator · (a − λ)^{-pole_order}`; a negative order is a positive power.
#[derive(Clone, Debug)]
pub struct ResolventTerm {
    pub numerator: HomTerm,
    pub pole_order: i32,
}

/// Terms of `σ(Q − λ)^{-1} ∼ Σ_j b_{−q−j}`, or any symbol in the same algebra.
#[derive(Clone, Debug)]
pub struct ResolventSymbol {
    pub leading: IsotropicLeading,
    pub domain: Domain,
    pub components: Vec<Vec<ResolventTerm>>,
}

fn merge_resolvent(terms: Vec<ResolventTerm>) -> Result<Vec<ResolventTerm>> {
    let mut by_pole: BTreeMap<i32, Vec<HomTerm>> = BTreeMap::new();
    for t in terms {
        by_pole.entry(t.pole_order).or_default().push(t.numerator);
    }
    let mut out = Vec::new();
    for (k, nums) in by_pole {
        for n in merge_terms(nums)? {
            out.push(ResolventTerm { numerator: n, pole_order: k });
        }
    }
    Ok(out)
}

impl ResolventTerm {
    fn d_xi(&self, axis: usize, lead: &IsotropicLeading, dim: usize) -> Result<Vec<ResolventTerm>> {
        let mut out: Vec<ResolventTerm> = self
            .numerator
            .d_xi(axis)
            .into_iter()
            .map(|n| ResolventTerm { numerator: n, pole_order: self.pole_order })
            .collect();
        if self.pole_order != 0 {
            let k = self.pole_order as f64;
            let n = self.numerator.mul(&lead.d_xi(axis, dim))?.scale(Complex64::from(-k));
            out.push(ResolventTerm { numerator: n, pole_order: self.pole_order + 1 });
        }
        Ok(out)
    }

    fn d_x(&self, axis: usize, lead: &IsotropicLeading, dim: usize) -> Result<Vec<ResolventTerm>> {
        let mut out = vec![ResolventTerm { numerator: self.numerator.d_x(axis), pole_order: self.pole_order }];
        if self.pole_order != 0 {
            let k = self.pole_order as f64;
            let n = self.numerator.mul(&lead.d_x(axis, dim))?.scale(Complex64::from(-k));
            out.push(ResolventTerm { numerator: n, pole_order: self.pole_order + 1 });
        }
        Ok(out)
    }

    fn mul(&self, other: &ResolventTerm) -> Result<ResolventTerm> {
        Ok(ResolventTerm {
            numerator: self.numerator.mul(&other.numerator)?,
            pole_order: self.pole_order + other.pole_order,
        })
    }
}

type Table = HashMap<MultiIndex, Vec<ResolventTerm>>;

fn derivative_table(
    terms: &[ResolventTerm],
    dim: usize,
    max_degree: u32,
    d: impl Fn(&ResolventTerm, usize) -> Result<Vec<ResolventTerm>>,
) -> Result<Table> {
    let mut table = Table::new();
    table.insert(MultiIndex::zero(dim), terms.to_vec());
    for deg in 1..=max_degree {
        for gamma in MultiIndex::of_degree(dim, deg) {
            let axis = (0..dim).find(|&a| gamma.get(a) > 0).expect("nonzero degree");
            let mut prev = gamma.entries().to_vec();
            prev[axis] -= 1;
            let base = &table[&MultiIndex::new(&prev)?];
            let mut next = Vec::new();
            for t in base {
                next.extend(d(t, axis)?);
            }
            table.insert(gamma, merge_resolvent(next)?);
        }
    }
    Ok(table)
}

fn weight(gamma: &MultiIndex) -> Complex64 {
    let g = gamma.degree();
    let phase = match g % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    phase / gamma.factorial()
}

impl ResolventSymbol {
    /// σ(Q − λ): `(a − λ)^{+1}` plus the λ-free lower components of Q.
    pub fn of_shifted(q: &ClassicalSymbol, depth: usize) -> Result<Self> {
        let leading = IsotropicLeading::of(q)?;
        let dim = q.dim();
        let mut components = vec![vec![ResolventTerm {
            numerator: HomTerm::constant(1.0, MultiIndex::zero(dim), 0.0),
            pole_order: -1,
        }]];
        for j in 1..=depth {
            components.push(q.component(j)?.iter().map(|t| ResolventTerm { numerator: t.clone(), pole_order: 0 }).collect());
        }
        Ok(Self { leading, domain: q.domain.clone(), components })
    }

    pub fn depth(&self) -> usize {
        self.components.len() - 1
    }

    /// Asymptotic product in the resolvent algebra, truncated at `depth`.
    pub fn product(&self, other: &Self, depth: usize) -> Result<Self> {
        let dim = self.domain.dim();
        if depth > self.depth() || depth > other.depth() {
            return Err(Error::DepthExceeded { requested: depth, available: self.depth().min(other.depth()) });
        }
        let lead = &self.leading;
        let mut at = Vec::new();
        let mut bt = Vec::new();
        for j in 0..=depth {
            let max = (depth - j) as u32;
            at.push(derivative_table(&self.components[j], dim, max, |t, ax| t.d_xi(ax, lead, dim))?);
            bt.push(derivative_table(&other.components[j], dim, max, |t, ax| t.d_x(ax, lead, dim))?);
        }
        let mut components = Vec::new();
        for j in 0..=depth {
            let mut terms = Vec::new();
            for g in 0..=j as u32 {
                for gamma in MultiIndex::of_degree(dim, g) {
                    let w = weight(&gamma);
                    for ja in 0..=(j - g as usize) {
                        let jb = j - g as usize - ja;
                        for ta in &at[ja][&gamma] {
                            for tb in &bt[jb][&gamma] {
                                let mut p = ta.mul(tb)?;
                                p.numerator = p.numerator.scale(w);
                                terms.push(p);
                            }
                        }
                    }
                }
            }
            components.push(merge_resolvent(terms)?);
        }
        Ok(Self { leading: self.leading.clone(), domain: self.domain.clone(), components })
    }

    /// Largest deviation from the identity symbol, per pole order, over grid
    /// points and sample directions: `max |Σ N_k − δ_{j0}δ_{k0}|`.
    pub fn identity_residual(&self) -> f64 {
        let dim = self.domain.dim();
        let points = self
            .components
            .iter()
            .flatten()
            .find_map(|t| t.numerator.coeff.grid().map(|g| g.len()))
            .unwrap_or(1);
        let dirs = sample_directions(dim);
        let mut worst: f64 = 0.0;
        for (j, comp) in self.components.iter().enumerate() {
            let mut by_pole: BTreeMap<i32, Vec<&HomTerm>> = BTreeMap::new();
            for t in comp {
                by_pole.entry(t.pole_order).or_default().push(&t.numerator);
            }
            for (k, nums) in by_pole {
                for idx in 0..points {
                    for d in &dirs {
                        let mut v: Complex64 = nums.iter().map(|n| n.eval(idx, d)).sum();
                        if j == 0 && k == 0 {
                            v -= 1.0;
                        }
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        worst
    }
}

/// Parametrix of `Q − λ` through depth `J`.
pub fn resolvent_parametrix(q: &ClassicalSymbol, depth: usize) -> Result<ResolventSymbol> {
    let leading = IsotropicLeading::of(q)?;
    let dim = q.dim();
    let lead = &leading;
    // ∂_ξ^γ q_k for k ≥ 1 (pole 0) and ∂_ξ^γ a via the (a−λ)^{+1} representation
    let shifted = ResolventSymbol::of_shifted(q, depth)?;
    let mut q_tables = Vec::new();
    for k in 0..=depth {
        q_tables.push(derivative_table(&shifted.components[k], dim, (depth - k) as u32, |t, ax| t.d_xi(ax, lead, dim))?);
    }
    let mut r: Vec<Vec<ResolventTerm>> = vec![vec![ResolventTerm {
        numerator: HomTerm::constant(1.0, MultiIndex::zero(dim), 0.0),
        pole_order: 1,
    }]];
    let mut r_tables: Vec<Table> = Vec::new();
    for j in 1..=depth {
        let l_new = j - 1;
        r_tables.push(derivative_table(&r[l_new], dim, (depth - l_new) as u32, |t, ax| t.d_x(ax, lead, dim))?);
        let mut sum = Vec::new();
        for l in 0..j {
            for g in 0..=(j - l) as u32 {
                let k = j - l - g as usize;
                for gamma in MultiIndex::of_degree(dim, g) {
                    let w = weight(&gamma);
                    for tq in &q_tables[k][&gamma] {
                        for tr in &r_tables[l][&gamma] {
                            let mut p = tq.mul(tr)?;
                            p.numerator = p.numerator.scale(w);
                            sum.push(p);
                        }
                    }
                }
            }
        }
        // r_j = −(a − λ)^{-1} Σ
        let next: Vec<ResolventTerm> = sum
            .into_iter()
            .map(|t| ResolventTerm { numerator: t.numerator.scale(Complex64::new(-1.0, 0.0)), pole_order: t.pole_order + 1 })
            .collect();
        r.push(merge_resolvent(next)?);
    }
    Ok(ResolventSymbol { leading, domain: q.domain.clone(), components: r })
}

pub const DEFAULT_DEPTH: usize = 4;

/// `Q^{-z}` as a family in z, built from the parametrix.
#[derive(Clone, Debug)]
pub struct PowerFamily {
    pub parametrix: ResolventSymbol,
    pub order_q: f64,
}

impl PowerFamily {
    pub fn new(q: &ClassicalSymbol, depth: usize) -> Result<Self> {
        let parametrix = resolvent_parametrix(q, depth)?;
        Ok(Self { order_q: parametrix.leading.q, parametrix })
    }

    pub fn depth(&self) -> usize {
        self.parametrix.depth()
    }

    /// Classical symbol of `Q^{-z}` for real z, order `−qz`.
    pub fn at(&self, z: f64) -> Result<ClassicalSymbol> {
        let lead = &self.parametrix.leading;
        let q = lead.q;
        let mut components = Vec::new();
        for comp in &self.parametrix.components {
            let mut terms = Vec::new();
            for t in comp {
                let k = t.pole_order;
                if k < 1 {
                    return Err(Error::InvalidSymbol("parametrix term without a pole".into()));
                }
                let c = rising_over_factorial(Complex64::from(z), (k - 1) as usize);
                if c.norm() == 0.0 {
                    continue;
                }
                let p = -z - k as f64 + 1.0;
                let coeff = t.numerator.coeff.mul(&lead.coeff.powc(Complex64::from(p)))?.scale(c);
                terms.push(HomTerm::new(coeff, t.numerator.monomial, t.numerator.radial_power + q * p));
            }
            components.push(terms);
        }
        ClassicalSymbol::new(-q * z, self.parametrix.domain.clone(), components, false)
    }

    /// Pointwise value of component j of `σ(Q^{-z})` at complex z.
    pub fn eval(&self, j: usize, z: Complex64, idx: usize, xi: &[f64]) -> Complex64 {
        self.eval_inner(j, z, idx, xi, false)
    }

    /// Pointwise z-derivative of component j.
    pub fn eval_dz(&self, j: usize, z: Complex64, idx: usize, xi: &[f64]) -> Complex64 {
        self.eval_inner(j, z, idx, xi, true)
    }

    fn eval_inner(&self, j: usize, z: Complex64, idx: usize, xi: &[f64], dz: bool) -> Complex64 {
        let lead = &self.parametrix.leading;
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = lead.coeff.value(idx);
        let a = c * r.powf(lead.q);
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.parametrix.components[j] {
            let k = t.pole_order as usize;
            let n = t.numerator.eval(idx, xi);
            let p = -z - (k as f64) + 1.0;
            let apow = a.powc(p);
            let f = rising_over_factorial(z, k - 1);
            if dz {
                let df = rising_over_factorial_dz(z, k - 1);
                acc += n * apow * (df - f * a.ln());
            } else {
                acc += n * apow * f;
            }
        }
        acc
    }
}

/// Classical symbol of `Q^{-z}` through depth `J`, for real z.
pub fn power_symbol(q: &ClassicalSymbol, z: f64, depth: usize) -> Result<ClassicalSymbol> {
    PowerFamily::new(q, depth)?.at(z)
}

/// `σ(log Q) = q log|ξ| + classical part of order 0`.
#[derive(Clone, Debug)]
pub struct LogSymbol {
    pub leading_log_coeff: f64,
    pub classical_part: ClassicalSymbol,
}

pub fn log_symbol(q: &ClassicalSymbol, depth: usize) -> Result<LogSymbol> {
    let family = PowerFamily::new(q, depth)?;
    let lead = &family.parametrix.leading;
    let dim = q.dim();
    let mut components = vec![vec![HomTerm::new(lead.coeff.ln(), MultiIndex::zero(dim), 0.0)]];
    for comp in family.parametrix.components.iter().skip(1) {
        let mut terms = Vec::new();
        for t in comp {
            let k = t.pole_order;
            if k < 2 {
                return Err(Error::InvalidSymbol("lower parametrix term with a simple pole".into()));
            }
            // −d/dz|₀ (z)_{k−1}/(k−1)! N a^{−z−k+1} = −N a^{1−k}/(k−1)
            let p = 1.0 - k as f64;
            let coeff = t
                .numerator
                .coeff
                .mul(&lead.coeff.powc(Complex64::from(p)))?
                .scale(Complex64::from(-1.0 / (k - 1) as f64));
            terms.push(HomTerm::new(coeff, t.numerator.monomial, t.numerator.radial_power + lead.q * p));
        }
        components.push(terms);
    }
    let classical_part = ClassicalSymbol::new(0.0, q.domain.clone(), components, false)?;
    Ok(LogSymbol { leading_log_coeff: lead.q, classical_part })
}

/// res(A log Q) for a differential A (or the identity).
pub fn res_a_log_q(a: &ClassicalSymbol, q: &ClassicalSymbol) -> Result<f64> {
    let m = a.order;
    if (m - m.round()).abs() > DEGREE_TOL || m < 0.0 {
        return Err(Error::Unsupported("res(A log Q) needs A of nonnegative integer order".into()));
    }
    if !(a.finite && a.is_polynomial()) {
        return Err(Error::Unsupported("res(A log Q) is only computed for differential A".into()));
    }
    // The q log|ξ| piece only enters as σ_A · q log|ξ|, which has no
    // log-free component of degree −n.
    let depth = m.round() as usize + q.dim();
    let log = log_symbol(q, depth)?;
    let prod = symbol_product(a, &log.classical_part, depth)?;
    wodzicki_residue(&prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FourierField, PeriodicGrid};
    use std::sync::Arc;

    fn conformal_laplacian(phi: &FourierField, n: usize) -> ClassicalSymbol {
        let grid = Arc::new(PeriodicGrid::new(phi.domain.clone(), n));
        let c = phi.scale(-2.0).to_coefficient(&grid).map(|v| v.exp());
        ClassicalSymbol::homogeneous(phi.domain.clone(), HomTerm::new(c, MultiIndex::zero(phi.domain.dim()), 2.0))
            .unwrap()
    }

    #[test]
    fn flat_parametrix_is_exact_resolvent() {
        let d = Domain::torus(1.0, 1.0);
        let q = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(2), 2.0)).unwrap();
        let r = resolvent_parametrix(&q, 3).unwrap();
        assert_eq!(r.components[0].len(), 1);
        assert!(r.components[1..].iter().all(|c| c.is_empty()));
        let p = power_symbol(&q, 0.37, 3).unwrap();
        assert_eq!(p.components[0].len(), 1);
        assert!((p.components[0][0].radial_power + 0.74).abs() < 1e-15);
    }

    #[test]
    fn scaled_inverse() {
        let d = Domain::circle(1.0);
        let q = ClassicalSymbol::homogeneous(d.clone(), HomTerm::constant(3.0, MultiIndex::zero(1), 2.0)).unwrap();
        let inv = power_symbol(&q, 1.0, 2).unwrap();
        let expected = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0 / 3.0, MultiIndex::zero(1), -2.0)).unwrap();
        assert!(inv.max_gap(&expected, 2).unwrap() < 1e-15);
    }

    #[test]
    fn potential_enters_at_depth_two() {
        let d = Domain::torus(1.0, 1.0);
        let grid = Arc::new(PeriodicGrid::new(d.clone(), 8));
        let v = FourierField::random(d.clone(), 4, 1, 0.5, 0.3).to_coefficient(&grid);
        let q = ClassicalSymbol::new(
            2.0,
            d,
            vec![
                vec![HomTerm::constant(1.0, MultiIndex::zero(2), 2.0)],
                vec![],
                vec![HomTerm::new(v.clone(), MultiIndex::zero(2), 0.0)],
            ],
            true,
        )
        .unwrap();
        let r = resolvent_parametrix(&q, 2).unwrap();
        // b_{−4} = −V (|ξ|² − λ)^{−2}
        assert_eq!(r.components[2].len(), 1);
        let t = &r.components[2][0];
        assert_eq!(t.pole_order, 2);
        for idx in 0..64 {
            assert!((t.numerator.coeff.value(idx) + v.value(idx)).norm() < 1e-15);
        }
    }

    #[test]
    fn parametrix_residual_conformal_torus() {
        let phi = FourierField::random(Domain::torus(1.0, 1.0), 9, 2, 0.2, 0.0);
        let q = conformal_laplacian(&phi, 32);
        let r = resolvent_parametrix(&q, 3).unwrap();
        assert!(r.components[1].iter().all(|t| t.pole_order == 3));
        let shifted = ResolventSymbol::of_shifted(&q, 3).unwrap();
        let prod = shifted.product(&r, 3).unwrap();
        assert!(prod.identity_residual() < 1e-10, "{}", prod.identity_residual());
    }

    #[test]
    fn log_of_scaled_laplacian() {
        let d = Domain::circle(1.0);
        let q = ClassicalSymbol::homogeneous(d, HomTerm::constant(2.5, MultiIndex::zero(1), 2.0)).unwrap();
        let l = log_symbol(&q, 2).unwrap();
        assert_eq!(l.leading_log_coeff, 2.0);
        let v = l.classical_part.eval_component(0, 0, &[1.0]).unwrap();
        assert!((v.re - 2.5f64.ln()).abs() < 1e-15);
        // finite difference in z of power_symbol at ±1e-5 on the unit sphere
        let h = 1e-5;
        let fam = PowerFamily::new(&q, 2).unwrap();
        let fd = (fam.eval(0, Complex64::from(-h), 0, &[1.0]) - fam.eval(0, Complex64::from(h), 0, &[1.0])) / (2.0 * h);
        assert!((fd.re - 2.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn res_log_refuses_non_differential() {
        let d = Domain::circle(1.0);
        let q = ClassicalSymbol::homogeneous(d.clone(), HomTerm::constant(1.0, MultiIndex::zero(1), 2.0)).unwrap();
        let a = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(1), -1.0)).unwrap();
        assert!(matches!(res_a_log_q(&a, &q), Err(Error::Unsupported(_))));
    }

    #[test]
    fn semigroup_and_inverse_conformal_torus() {
        let phi = FourierField::random(Domain::torus(1.0, 1.0), 21, 2, 0.2, 0.0);
        let q = conformal_laplacian(&phi, 64);
        let fam = PowerFamily::new(&q, 4).unwrap();
        for (z1, z2) in [(1.0, 1.0), (0.5, 0.5), (0.3, 0.7)] {
            let lhs = symbol_product(&fam.at(z1).unwrap(), &fam.at(z2).unwrap(), 4).unwrap();
            let gap = lhs.max_scaled_gap(&fam.at(z1 + z2).unwrap(), 4).unwrap();
            assert!(gap < 1e-9, "({z1}, {z2}): {gap}");
        }
        assert!((fam.at(0.4).unwrap().order + 0.8).abs() < 1e-15);
    }

    #[test]
    fn power_at_one_inverts() {
        let tau = 2.0 * std::f64::consts::PI;
        let phi = FourierField::random(Domain::torus(tau, tau), 21, 2, 0.2, 0.0);
        let q = conformal_laplacian(&phi, 64);
        let inv = power_symbol(&q, 1.0, 3).unwrap();
        let id = symbol_product(&q, &inv, 3).unwrap();
        let gap = id.max_gap(&ClassicalSymbol::identity(q.domain.clone()), 3).unwrap();
        assert!(gap < 1e-10, "{gap}");
    }

    #[test]
    fn z_derivative_matches_difference() {
        let phi = FourierField::random(Domain::torus(1.0, 1.0), 5, 2, 0.2, 0.0);
        let q = conformal_laplacian(&phi, 16);
        let fam = PowerFamily::new(&q, 4).unwrap();
        let h = 1e-5;
        for &z in &[0.0, 0.35, -0.5] {
            let (zp, zm) = (fam.at(z + h).unwrap(), fam.at(z - h).unwrap());
            for j in 0..=4 {
                for idx in [0, 37, 200] {
                    for xi in sample_directions(2) {
                        let xi: Vec<f64> = xi.iter().map(|v| 1.7 * v).collect();
                        let fd = (zp.eval_component(j, idx, &xi).unwrap() - zm.eval_component(j, idx, &xi).unwrap()) / (2.0 * h);
                        let an = fam.eval_dz(j, Complex64::from(z), idx, &xi);
                        assert!((fd - an).norm() < 1e-6, "j={j} z={z}: {fd} vs {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn log_symbol_is_derivative_of_powers() {
        let phi = FourierField::random(Domain::torus(1.0, 1.0), 8, 2, 0.2, 0.0);
        let grid = Arc::new(PeriodicGrid::new(phi.domain.clone(), 16));
        let q = conformal_laplacian(&phi, 16);
        let l = log_symbol(&q, 3).unwrap();
        let fam = PowerFamily::new(&q, 3).unwrap();
        let phi_vals = phi.sample(&grid);
        for idx in [0, 11, 130] {
            let lead = l.classical_part.eval_component(0, idx, &[1.0, 0.0]).unwrap();
            assert!((lead.re + 2.0 * phi_vals[idx]).abs() < 1e-12);
            for j in 0..=3 {
                for xi in sample_directions(2) {
                    let r = 2.3;
                    let xi: Vec<f64> = xi.iter().map(|v| r * v).collect();
                    // d/dz Q^z = −d/dz Q^{−z}
                    let mut expected = -fam.eval_dz(j, Complex64::from(0.0), idx, &xi);
                    if j == 0 {
                        expected -= 2.0 * r.ln();
                    }
                    let got = l.classical_part.eval_component(j, idx, &xi).unwrap();
                    assert!((got - expected).norm() < 1e-10, "j={j}");
                }
            }
        }
    }

    #[test]
    fn residue_of_multiplier_times_log() {
        // res(f log Δ_g) = (1/6π) ∫ f ∇²φ dx on the torus in conformal gauge
        let d = Domain::torus(1.0, 1.0);
        let phi = FourierField::random(d.clone(), 31, 2, 0.2, 0.0);
        let f = FourierField::random(d.clone(), 32, 2, 0.5, 0.3);
        let grid = Arc::new(PeriodicGrid::new(d.clone(), 32));
        let q = conformal_laplacian(&phi, 32);
        let a = ClassicalSymbol::multiplication(d.clone(), f.to_coefficient(&grid)).unwrap();
        let got = res_a_log_q(&a, &q).unwrap();
        let lap = phi.laplacian().sample(&grid);
        let fv = f.sample(&grid);
        let integral: f64 = lap.iter().zip(&fv).map(|(l, f)| l * f).sum::<f64>() * grid.cell_volume();
        let expected = integral / (6.0 * std::f64::consts::PI);
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");

        let circle = ClassicalSymbol::homogeneous(Domain::circle(2.0 * std::f64::consts::PI), HomTerm::constant(1.0, MultiIndex::zero(1), 2.0)).unwrap();
        let id = ClassicalSymbol::identity(circle.domain.clone());
        assert_eq!(res_a_log_q(&id, &circle).unwrap(), 0.0);
    }
}
