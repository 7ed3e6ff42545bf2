//! Mellin continuation of kernel-excluded heat traces.
//!
//! `ζ(w) = Γ(w)^{-1} [∫_{ε}^{t0} t^{w−1}(θ − E) dt + Σ c_p t0^{w+p}/(w+p) + ∫_{t0}^∞ t^{w−1} θ dt]`
//! where `E = Σ c_p t^p` is the small-t expansion of θ. The piece of θ − E
//! below ε is dropped; it is exponentially small (flat Laplacians), of high
//! order in t (Dirac series), or at the level of the fit residual (dense).

use super::heat::HeatTrace;
use super::{ExactSpectrum, Family, HeatExpansionFit, ModelOperator, Realization};
use crate::field::FourierField;
use crate::quad;
use crate::special::{hurwitz_zeta, rgamma_c, riemann_zeta, EULER_GAMMA};
use crate::{Complex64, Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub power: f64,
    /// Multiplies the term by `log t`.
    pub log: bool,
    pub coeff: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SmallTimeExpansion {
    pub terms: Vec<ExpansionTerm>,
}

impl SmallTimeExpansion {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|e| e.coeff * t.powf(e.power) * if e.log { t.ln() } else { 1.0 })
            .sum()
    }

    /// Coefficient of t⁰, which is ζ(0).
    pub fn constant(&self) -> Result<f64> {
        if self.terms.iter().any(|e| e.log && e.power.abs() < 1e-12) {
            return Err(Error::Pole("log t term at t⁰ gives ζ a pole at 0".into()));
        }
        Ok(self.terms.iter().filter(|e| !e.log && e.power.abs() < 1e-12).map(|e| e.coeff).sum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MellinOptions {
    pub t0: f64,
    /// Lower end of the remainder integral; defaults to the trust floor or `10⁻³/λ_min`.
    pub eps_min: Option<f64>,
}

impl Default for MellinOptions {
    fn default() -> Self {
        Self { t0: 1.0, eps_min: None }
    }
}

fn eps_min(trace: &HeatTrace, opts: &MellinOptions) -> f64 {
    opts.eps_min.unwrap_or(if trace.is_exact() { 1e-3 / trace.lambda_min } else { trace.eps_floor })
}

/// `∫_{t0}^∞ t^{w−1} θ(t) dt`, truncated where `e^{−λ_min t}` drops below e^{−45}.
fn large_t(trace: &HeatTrace, w: Complex64, t0: f64) -> Result<Complex64> {
    let end = t0 + 45.0 / trace.lambda_min;
    let max_width = 4.0 / trace.lambda_min;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = t0;
    let mut err = None;
    while lo < end {
        let hi = (lo + max_width.min(0.5 * lo)).min(end);
        acc += quad::panel(lo, hi, &mut |t: f64| match trace.eval(t) {
            Ok(v) => Complex64::from(t).powc(w - 1.0) * v,
            Err(e) => {
                err.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        });
        lo = hi;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

fn small_t(trace: &HeatTrace, exp: &SmallTimeExpansion, w: Complex64, lo: f64, t0: f64) -> Result<Complex64> {
    if lo >= t0 {
        return Err(Error::Precondition(format!("Mellin split point t0 = {t0} is below ε_min = {lo}")));
    }
    let mut err = None;
    let v = quad::geometric(lo, t0, 8, |t: f64| match trace.eval(t) {
        Ok(th) => Complex64::from(t).powc(w - 1.0) * (th - exp.eval(t)),
        Err(e) => {
            err.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Continued Mellin transform `Γ(w)^{-1} ∫ t^{w−1} θ(t) dt`.
pub fn mellin_zeta(trace: &HeatTrace, exp: &SmallTimeExpansion, w: Complex64, opts: &MellinOptions) -> Result<Complex64> {
    // at w = −m only the t^m term survives: Γ(w)^{-1} ~ (−1)^m m! (w + m)
    let m = (-w.re).round();
    if m >= 0.0 && (w + m).norm() < 1e-12 {
        let mut acc = 0.0;
        for e in &exp.terms {
            if (e.power - m).abs() < 1e-12 {
                if e.log {
                    return Err(Error::Pole(format!("double pole at w = {}", -m)));
                }
                acc += e.coeff;
            }
        }
        let fact: f64 = (1..=m as u64).map(|i| i as f64).product();
        return Ok(Complex64::from(if m as u64 % 2 == 0 { fact } else { -fact } * acc));
    }
    let t0 = opts.t0;
    let mut singular = Complex64::new(0.0, 0.0);
    for e in &exp.terms {
        let s = w + e.power;
        if s.norm() < 1e-10 {
            return Err(Error::Pole(format!("w = {w} is a pole of the continuation")));
        }
        let t0s = Complex64::from(t0).powc(s);
        singular += if e.log { t0s * (t0.ln() / s - 1.0 / (s * s)) } else { t0s / s } * e.coeff;
    }
    let small = small_t(trace, exp, w, eps_min(trace, opts), t0)?;
    let large = large_t(trace, w, t0)?;
    Ok(rgamma_c(w) * (small + singular + large))
}

pub fn mellin_zeta0(exp: &SmallTimeExpansion) -> Result<f64> {
    exp.constant()
}

/// Derivative at w = 0 of [`mellin_zeta`].
pub fn mellin_zeta_prime0(trace: &HeatTrace, exp: &SmallTimeExpansion, opts: &MellinOptions) -> Result<f64> {
    let c0 = exp.constant()?;
    let t0 = opts.t0;
    let mut singular = 0.0;
    for e in &exp.terms {
        if e.power.abs() < 1e-12 {
            continue;
        }
        let p = e.power;
        let t0p = t0.powf(p);
        singular += e.coeff * if e.log { t0p * (t0.ln() / p - 1.0 / (p * p)) } else { t0p / p };
    }
    let w = Complex64::new(0.0, 0.0);
    let small = small_t(trace, exp, w, eps_min(trace, opts), t0)?.re;
    let large = large_t(trace, w, t0)?.re;
    Ok(EULER_GAMMA * c0 + c0 * t0.ln() + small + singular + large)
}

/// Power-1 operator carrying the same eigendata; `ζ_{A^p}(z) = ζ_A(pz)`.
fn base_operator(op: &ModelOperator) -> (ModelOperator, f64) {
    match op.family {
        Family::Power { power } => {
            let mut base = op.clone();
            base.family = Family::Laplacian;
            base.order = 2.0;
            (base, power)
        }
        _ => (op.clone(), 1.0),
    }
}

fn trace_and_expansion(
    op: &ModelOperator,
    weight: Option<&FourierField>,
    signed: bool,
    fit: Option<&HeatExpansionFit>,
) -> Result<(HeatTrace, SmallTimeExpansion)> {
    let trace = HeatTrace::new(op, weight, signed)?;
    let exp = match (fit, trace.expansion()) {
        (Some(f), _) => f.expansion(),
        (None, Some(e)) => e,
        (None, None) => return Err(Error::Precondition("a heat fit is required for dense operators".into())),
    };
    Ok((trace, exp))
}

/// `Tr′(f h(A) A^{−z})` by the Mellin route; `fit` must describe the power-1
/// base operator with the same weight and sign.
pub fn zeta_weighted(
    op: &ModelOperator,
    weight: Option<&FourierField>,
    signed: bool,
    z: Complex64,
    fit: Option<&HeatExpansionFit>,
    opts: &MellinOptions,
) -> Result<Complex64> {
    let (base, p) = base_operator(op);
    let (trace, exp) = trace_and_expansion(&base, weight, signed, fit)?;
    mellin_zeta(&trace, &exp, z * p, opts)
}

pub fn zeta(op: &ModelOperator, z: Complex64, fit: Option<&HeatExpansionFit>, opts: &MellinOptions) -> Result<Complex64> {
    zeta_weighted(op, None, false, z, fit, opts)
}

pub fn zeta0(op: &ModelOperator, fit: Option<&HeatExpansionFit>) -> Result<f64> {
    let (base, _) = base_operator(op);
    let (_, exp) = trace_and_expansion(&base, None, false, fit)?;
    mellin_zeta0(&exp)
}

pub fn zeta_prime_at_0(op: &ModelOperator, fit: Option<&HeatExpansionFit>, opts: &MellinOptions) -> Result<f64> {
    let (base, p) = base_operator(op);
    let (trace, exp) = trace_and_expansion(&base, None, false, fit)?;
    Ok(p * mellin_zeta_prime0(&trace, &exp, opts)?)
}

/// `η(s) = Σ sign(λ)|λ|^{−s}` by the Mellin route.
pub fn eta(op: &ModelOperator, s: Complex64, fit: Option<&HeatExpansionFit>, opts: &MellinOptions) -> Result<Complex64> {
    zeta_weighted(op, None, true, s, fit, opts)
}

pub fn eta0(op: &ModelOperator, fit: Option<&HeatExpansionFit>) -> Result<f64> {
    let (_, exp) = trace_and_expansion(op, None, true, fit)?;
    mellin_zeta0(&exp)
}

/// Closed forms through the Riemann and Hurwitz zeta functions (flat circle models).
pub fn zeta_closed_form(op: &ModelOperator, z: Complex64) -> Result<Complex64> {
    let (base, p) = base_operator(op);
    let z = z * p;
    match &base.realization {
        Realization::Exact(ExactSpectrum::Circle { length }) => {
            Ok(2.0 * Complex64::from(length / (2.0 * PI)).powc(2.0 * z) * riemann_zeta(2.0 * z))
        }
        Realization::Exact(ExactSpectrum::Dirac { length, twist }) => {
            Ok(Complex64::from(length / (2.0 * PI)).powc(z) * (hurwitz_zeta(z, *twist) + hurwitz_zeta(z, 1.0 - twist)))
        }
        _ => Err(Error::Unsupported("no closed form for this model".into())),
    }
}

/// `η(s) = (L/2π)^s [ζ_H(s, a) − ζ_H(s, 1 − a)]` for the flat twisted Dirac operator.
pub fn eta_hurwitz(op: &ModelOperator, s: Complex64) -> Result<Complex64> {
    match &op.realization {
        Realization::Exact(ExactSpectrum::Dirac { length, twist }) => {
            Ok(Complex64::from(length / (2.0 * PI)).powc(s) * (hurwitz_zeta(s, *twist) - hurwitz_zeta(s, 1.0 - twist)))
        }
        _ => Err(Error::Unsupported("the Hurwitz route needs the flat twisted Dirac operator".into())),
    }
}
