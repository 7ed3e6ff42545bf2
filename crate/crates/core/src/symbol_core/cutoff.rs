//! Cut-off integrals `fp_{R→∞} ∫_{B(R)} σ(x, ξ) dξ` and the ball-integral oracle.

use super::{sphere_moment, ClassicalSymbol, MultiIndex, DEGREE_TOL};
use crate::linalg::lstsq;
use crate::special::binom_real;
use crate::{quad, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// ψ(ξ) = 0 for |ξ| ≤ r0, 1 for |ξ| ≥ r1, polynomial smoothstep in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffProfile {
    pub r0: f64,
    pub r1: f64,
    /// Continuity class at the junctions: 2 (quintic) or 3 (septic).
    #[serde(default = "default_smoothness")]
    pub smoothness: u32,
}

fn default_smoothness() -> u32 {
    2
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self { r0: 0.5, r1: 1.0, smoothness: 2 }
    }
}

impl CutoffProfile {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        let p = Self { r0, r1, smoothness: 2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r1 > self.r0 && self.r1.is_finite()) {
            return Err(Error::Precondition(format!("cut-off radii need 0 < r0 < r1, got {} {}", self.r0, self.r1)));
        }
        if !(2..=3).contains(&self.smoothness) {
            return Err(Error::Precondition(format!("smoothness {} not in {{2, 3}}", self.smoothness)));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { r0: s * self.r0, r1: s * self.r1, smoothness: self.smoothness }
    }

    pub fn psi(&self, r: f64) -> f64 {
        if r <= self.r0 {
            return 0.0;
        }
        if r >= self.r1 {
            return 1.0;
        }
        let t = (r - self.r0) / (self.r1 - self.r0);
        match self.smoothness {
            2 => t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
            _ => t.powi(4) * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))),
        }
    }
}

/// `coeff · ξ^m · (1 + |ξ|²)^{s/2}`.
#[derive(Clone, Debug)]
pub struct BracketTerm {
    pub coeff: Complex64,
    pub monomial: MultiIndex,
    pub s: f64,
}

/// A full symbol at a fixed point x, with an exactly known classical expansion.
#[derive(Clone, Debug)]
pub enum FullSymbol {
    /// Σ c ξ^m ⟨ξ⟩^s; components come from the binomial series of ⟨ξ⟩^s.
    Bracket { dim: usize, terms: Vec<BracketTerm> },
    /// ψ_σ(ξ) Σ_j σ_{α−j}(x, ξ) for a stored classical symbol at grid point `idx`.
    Truncated { symbol: ClassicalSymbol, idx: usize, profile: CutoffProfile },
}

/// Radial component data: `∫_{|ξ|=1} σ_{α−j}` for each j.
struct Expansion {
    order: f64,
    dim: usize,
    sphere: Vec<Complex64>,
}

impl FullSymbol {
    pub fn bracket(dim: usize, terms: Vec<BracketTerm>) -> Result<Self> {
        if terms.iter().any(|t| t.monomial.dim() != dim) {
            return Err(Error::Dimension("bracket term of wrong dimension".into()));
        }
        let s = Self::Bracket { dim, terms };
        s.order()?;
        Ok(s)
    }

    pub fn truncated(symbol: ClassicalSymbol, idx: usize, profile: CutoffProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Self::Truncated { symbol, idx, profile })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Bracket { dim, .. } => *dim,
            Self::Truncated { symbol, .. } => symbol.dim(),
        }
    }

    pub fn order(&self) -> Result<f64> {
        match self {
            Self::Bracket { terms, .. } => {
                let degs: Vec<f64> = terms.iter().map(|t| t.monomial.degree() as f64 + t.s).collect();
                let top = degs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for d in &degs {
                    let gap = top - d;
                    if (gap - gap.round()).abs() > DEGREE_TOL {
                        return Err(Error::InvalidSymbol("bracket terms do not share an order modulo integers".into()));
                    }
                }
                if terms.is_empty() {
                    return Ok(0.0);
                }
                Ok(top)
            }
            Self::Truncated { symbol, .. } => Ok(symbol.order),
        }
    }

    fn expansion(&self, depth: usize) -> Result<Expansion> {
        let order = self.order()?;
        let dim = self.dim();
        let mut sphere = vec![Complex64::new(0.0, 0.0); depth + 1];
        match self {
            Self::Bracket { terms, .. } => {
                for t in terms {
                    let mom = sphere_moment(&t.monomial, dim)?;
                    if mom == 0.0 {
                        continue;
                    }
                    let j0 = (order - t.monomial.degree() as f64 - t.s).round() as usize;
                    let mut k = 0;
                    while j0 + 2 * k <= depth {
                        sphere[j0 + 2 * k] += t.coeff * mom * binom_real(t.s / 2.0, k);
                        k += 1;
                    }
                }
            }
            Self::Truncated { symbol, idx, .. } => {
                for (j, slot) in sphere.iter_mut().enumerate() {
                    for t in symbol.component(j)? {
                        let mom = sphere_moment(&t.monomial, dim)?;
                        *slot += t.coeff.value(*idx) * mom;
                    }
                }
            }
        }
        Ok(Expansion { order, dim, sphere })
    }

    /// ∫_{|ξ|=r} σ dS / r^{n−1}: the sphere average of the full symbol, times |S^{n−1}|.
    fn sphere_profile(&self, r: f64) -> Result<Complex64> {
        let dim = self.dim();
        match self {
            Self::Bracket { terms, .. } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in terms {
                    let mom = sphere_moment(&t.monomial, dim)?;
                    if mom != 0.0 {
                        acc += t.coeff * mom * r.powi(t.monomial.degree() as i32) * (1.0 + r * r).powf(t.s / 2.0);
                    }
                }
                Ok(acc)
            }
            Self::Truncated { symbol, profile, .. } => {
                let psi = profile.psi(r);
                if psi == 0.0 {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let e = self.expansion(symbol.depth())?;
                Ok(psi * radial_sum(&e, e.sphere.len() - 1, r))
            }
        }
    }

    /// Tail ∫_{r*}^∞ r^{n−1} [σ̃(r) − Σ_{j≤J} S_j r^{α−j}] dr, exact.
    fn tail(&self, depth: usize, r_star: f64) -> Result<Complex64> {
        let dim = self.dim();
        let order = self.order()?;
        match self {
            Self::Bracket { terms, .. } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in terms {
                    let mom = sphere_moment(&t.monomial, dim)?;
                    if mom == 0.0 {
                        continue;
                    }
                    let j0 = (order - t.monomial.degree() as f64 - t.s).round() as usize;
                    // first k with j0 + 2k > depth
                    let mut k = if j0 > depth { 0 } else { (depth - j0) / 2 + 1 };
                    loop {
                        let b = binom_real(t.s / 2.0, k);
                        let beta = dim as f64 + t.monomial.degree() as f64 + t.s - 2.0 * k as f64;
                        if beta >= 0.0 {
                            return Err(Error::Precondition("non-integrable remainder".into()));
                        }
                        let term = t.coeff * mom * b * (-r_star.powf(beta) / beta);
                        acc += term;
                        if b == 0.0 || term.norm() < 1e-19 * (1.0 + acc.norm()) || k > 400 {
                            break;
                        }
                        k += 1;
                    }
                }
                Ok(acc)
            }
            Self::Truncated { .. } => Ok(Complex64::new(0.0, 0.0)),
        }
    }

    /// Smallest truncation depth with an integrable remainder.
    fn working_depth(&self) -> Result<usize> {
        match self {
            Self::Truncated { symbol, .. } => Ok(symbol.depth()),
            Self::Bracket { .. } => {
                let a = self.order()? + self.dim() as f64;
                Ok(if a - 1.0 < 0.0 { 0 } else { (a - 1.0).floor() as usize + 1 })
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Truncated { profile, .. } => vec![profile.r0, profile.r1],
            Self::Bracket { .. } => vec![1.0],
        }
    }
}

fn radial_sum(e: &Expansion, depth: usize, r: f64) -> Complex64 {
    e.sphere.iter().take(depth + 1).enumerate().map(|(j, s)| s * r.powf(e.order - j as f64)).sum()
}

/// Finite part of the integral over |ξ| ∈ [0, ∞) of ψ(r) r^{β−1}, and whether it is the log case.
fn fp_power(profile: &CutoffProfile, beta: f64) -> (f64, bool) {
    let r1 = profile.r1;
    if beta.abs() < DEGREE_TOL {
        let inner: f64 = quad::uniform(profile.r0, r1, 16, |r| profile.psi(r) / r);
        (inner - r1.ln(), true)
    } else {
        let inner: f64 = quad::uniform(profile.r0, r1, 16, |r| profile.psi(r) * r.powf(beta - 1.0));
        (inner - r1.powf(beta) / beta, false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffResult {
    pub c: Complex64,
    /// Coefficient of log R: ∫_{|ξ|=1} σ_{−n}.
    pub b: Complex64,
    /// Set when b ≠ 0; then c depends on the cut-off.
    pub cutoff_dependent: bool,
}

/// Closed-form cut-off integral `c_σ(x)` and log coefficient `b_σ(x)`.
///
/// c = ∫_0^∞ r^{n−1}[σ̃ − ψ Σ_{j≤J} S_j r^{α−j}] dr + Σ_j S_j fp∫ ψ r^{α−j+n−1} dr,
/// with `S_j = ∫_{|ξ|=1} σ_{α−j}`; the remainder is integrated by quadrature
/// up to r* and by its exact binomial series beyond.
pub fn cutoff_integral(sigma: &FullSymbol, psi: &CutoffProfile) -> Result<CutoffResult> {
    psi.validate()?;
    let depth = sigma.working_depth()?;
    let e = sigma.expansion(depth)?;
    let n = e.dim as f64;
    let mut r_star = 4.0_f64.max(2.0 * psi.r1);
    for b in sigma.breakpoints() {
        r_star = r_star.max(2.0 * b);
    }
    let mut breaks = vec![0.0, psi.r0, psi.r1, r_star];
    breaks.extend(sigma.breakpoints());
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let mut failure = None;
    let body: Complex64 = quad::piecewise(&breaks, 12, |r| {
        let full = sigma.sphere_profile(r).unwrap_or_else(|err| {
            failure = Some(err);
            Complex64::new(0.0, 0.0)
        });
        let p = psi.psi(r);
        let sub = if p == 0.0 { Complex64::new(0.0, 0.0) } else { p * radial_sum(&e, depth, r) };
        (full - sub) * r.powf(n - 1.0)
    });
    if let Some(err) = failure {
        return Err(err);
    }
    let mut c = body + sigma.tail(depth, r_star)?;
    let mut b = Complex64::new(0.0, 0.0);
    for (j, s) in e.sphere.iter().enumerate() {
        if s.norm() == 0.0 {
            continue;
        }
        let beta = e.order - j as f64 + n;
        let (fp, is_log) = fp_power(psi, beta);
        c += s * fp;
        if is_log {
            b += s;
        }
    }
    Ok(CutoffResult { c, b, cutoff_dependent: b.norm() > 1e-14 })
}

/// ∫_{|ξ| ≤ R} σ(x, ξ) dξ.
pub fn ball_integral(sigma: &FullSymbol, radius: f64) -> Result<Complex64> {
    let n = sigma.dim() as f64;
    match sigma {
        FullSymbol::Truncated { symbol, profile, .. } => {
            // exact radial integrals outside the transition region
            let e = sigma.expansion(symbol.depth())?;
            let mut acc = Complex64::new(0.0, 0.0);
            let top = radius.min(profile.r1);
            for (j, s) in e.sphere.iter().enumerate() {
                if s.norm() == 0.0 {
                    continue;
                }
                let beta = e.order - j as f64 + n;
                let inner: f64 = if top > profile.r0 {
                    quad::uniform(profile.r0, top, 16, |r| profile.psi(r) * r.powf(beta - 1.0))
                } else {
                    0.0
                };
                let outer = if radius > profile.r1 {
                    if beta.abs() < DEGREE_TOL {
                        (radius / profile.r1).ln()
                    } else {
                        (radius.powf(beta) - profile.r1.powf(beta)) / beta
                    }
                } else {
                    0.0
                };
                acc += s * (inner + outer);
            }
            Ok(acc)
        }
        FullSymbol::Bracket { .. } => {
            let mut failure = None;
            let mut f = |r: f64| {
                sigma.sphere_profile(r).unwrap_or_else(|err| {
                    failure = Some(err);
                    Complex64::new(0.0, 0.0)
                }) * r.powf(n - 1.0)
            };
            let head: Complex64 = quad::uniform(0.0, radius.min(1.0), 4, &mut f);
            let rest: Complex64 = if radius > 1.0 { quad::geometric(1.0, radius, 6, &mut f) } else { Complex64::new(0.0, 0.0) };
            if let Some(err) = failure {
                return Err(err);
            }
            Ok(head + rest)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BallFit {
    /// (j, a_j): coefficient of R^{α−j+n}.
    pub a: Vec<(usize, f64)>,
    pub b: f64,
    pub c: f64,
    pub residual: f64,
    pub cond: f64,
}

/// Least-squares fit of `∫_{B(R)} σ ∼ Σ a_j R^{α−j+n} + b log R + c` on `radii`.
///
/// Only exponents above `min_exponent` with a nonzero sphere integral enter
/// the basis; fits the real part.
pub fn ball_integral_asymptotics(sigma: &FullSymbol, radii: &[f64], min_exponent: f64) -> Result<BallFit> {
    if radii.len() < 8 {
        return Err(Error::Precondition("ball fit needs at least 8 radii".into()));
    }
    let rmin = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    if rmax < 10.0 * rmin {
        return Err(Error::Precondition("ball fit radii must span a decade".into()));
    }
    let n = sigma.dim() as f64;
    let order = sigma.order()?;
    let max_j = ((order + n - min_exponent).floor().max(0.0)) as usize;
    let e = sigma.expansion(max_j)?;
    let mut exps: Vec<(usize, f64)> = Vec::new();
    for (j, s) in e.sphere.iter().enumerate() {
        let beta = order - j as f64 + n;
        if s.norm() == 0.0 || beta.abs() < DEGREE_TOL || beta <= min_exponent {
            continue;
        }
        if exps.iter().all(|(_, b)| (b - beta).abs() > DEGREE_TOL) {
            exps.push((j, beta));
        }
    }
    let top = exps.iter().map(|(_, b)| *b).fold(0.0, f64::max);
    let mut design = Vec::with_capacity(radii.len());
    let mut rhs = Vec::with_capacity(radii.len());
    let mut weights = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut row: Vec<f64> = exps.iter().map(|(_, b)| r.powf(*b)).collect();
        row.push(r.ln());
        row.push(1.0);
        design.push(row);
        rhs.push(ball_integral(sigma, r)?.re);
        weights.push(1.0 / r.powf(top).max(1.0));
    }
    let sol = lstsq(&design, &rhs, &weights, 1e12)?;
    let k = exps.len();
    Ok(BallFit {
        a: exps.iter().zip(&sol.x).map(|((j, _), v)| (*j, *v)).collect(),
        b: sol.x[k],
        c: sol.x[k + 1],
        residual: sol.rms,
        cond: sol.cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Domain;
    use crate::special::gamma;
    use crate::symbol_core::HomTerm;

    fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn psi_is_c2_and_monotone() {
        let p = CutoffProfile::new(0.5, 1.0).unwrap();
        let h = 1e-4;
        for r in [0.5, 1.0] {
            let d2 = |x: f64| (p.psi(x + h) - 2.0 * p.psi(x) + p.psi(x - h)) / (h * h);
            assert!(d2(r).abs() < 1e-2);
        }
        let mut prev = 0.0;
        for i in 0..100 {
            let v = p.psi(0.5 + 0.005 * i as f64);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn bracket_three_quarters_matches_closed_form() {
        let sigma = FullSymbol::bracket(1, vec![BracketTerm { coeff: 1.0.into(), monomial: MultiIndex::zero(1), s: -1.5 }]).unwrap();
        let res = cutoff_integral(&sigma, &CutoffProfile::default()).unwrap();
        let exact = std::f64::consts::PI.sqrt() * gamma(0.25) / gamma(0.75);
        assert!((res.c.re - exact).abs() < 1e-10, "{} vs {}", res.c.re, exact);
        assert_eq!(res.b.norm(), 0.0);
    }

    #[test]
    fn psi_over_abs_xi_is_cutoff_dependent() {
        let d = Domain::circle(1.0);
        let sym = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(1), -1.0)).unwrap();
        let prof = CutoffProfile::new(0.5, 1.0).unwrap();
        let sigma = FullSymbol::truncated(sym, 0, prof).unwrap();
        let res = cutoff_integral(&sigma, &prof).unwrap();
        assert!((res.b.re - 2.0).abs() < 1e-14);
        assert!(res.cutoff_dependent);
        let fit = ball_integral_asymptotics(&sigma, &log_radii(2.0, 200.0, 12), -6.0).unwrap();
        assert!((fit.b - 2.0).abs() < 1e-9);
        assert!((fit.c - res.c.re).abs() < 1e-6);
        assert!(fit.a.is_empty());
    }

    #[test]
    fn psi_times_abs_xi_growth() {
        let d = Domain::circle(1.0);
        let sym = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(1), 1.0)).unwrap();
        let prof = CutoffProfile::new(0.5, 1.0).unwrap();
        let sigma = FullSymbol::truncated(sym, 0, prof).unwrap();
        let fit = ball_integral_asymptotics(&sigma, &log_radii(2.0, 200.0, 12), -6.0).unwrap();
        assert_eq!(fit.a[0].0, 0);
        assert!((fit.a[0].1 - 1.0).abs() < 1e-9);
        assert!(fit.b.abs() < 1e-8);
        let res = cutoff_integral(&sigma, &prof).unwrap();
        assert!((fit.c - res.c.re).abs() < 1e-7);
    }

    #[test]
    fn zero_symbol() {
        let sigma = FullSymbol::bracket(2, vec![]).unwrap();
        let res = cutoff_integral(&sigma, &CutoffProfile::default()).unwrap();
        assert_eq!(res.c.norm(), 0.0);
        assert_eq!(res.b.norm(), 0.0);
    }

    #[test]
    fn convergent_symbol_equals_plain_integral() {
        // order −3/2 in n = 1: ⟨ξ⟩^{−3/2}·ξ² ⟨ξ⟩^{-2}... keep a single term
        let sigma = FullSymbol::bracket(1, vec![BracketTerm { coeff: 2.0.into(), monomial: MultiIndex::zero(1), s: -2.5 }]).unwrap();
        let plain: f64 = 2.0 * 2.0 * quad::geometric(1e-12, 1e6, 8, |r: f64| (1.0 + r * r).powf(-1.25)) ;
        let res = cutoff_integral(&sigma, &CutoffProfile::default()).unwrap();
        assert!((res.c.re - plain).abs() < 1e-8);
    }
}
