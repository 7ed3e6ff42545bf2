//! Exact spectra of the flat models and their theta-type heat traces.

use super::{ExpansionTerm, Family, ModelGeometry, SmallTimeExpansion};
use crate::special::{bernoulli_poly, factorial};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Spectrum of a constant-φ model; lengths already include the factor `e^{φ}`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactSpectrum {
    /// `(2πk/L)²`, k ∈ ℤ.
    Circle { length: f64 },
    /// `4π²(k₁²/L₁² + k₂²/L₂²)`.
    Torus { l1: f64, l2: f64 },
    /// `(2π/L)(k + a)`, k ∈ ℤ.
    Dirac { length: f64, twist: f64 },
}

/// Highest Bernoulli index kept in the Dirac small-time series.
const DIRAC_SERIES: usize = 24;

/// `Σ_{k∈ℤ} e^{−qk²}`, switching to the Poisson-dual sum for small q.
pub fn theta1(q: f64) -> f64 {
    if q < PI {
        let mut acc = 1.0;
        let mut m = 1.0f64;
        loop {
            let term = 2.0 * (-PI * PI * m * m / q).exp();
            acc += term;
            if term < 1e-18 * acc {
                break;
            }
            m += 1.0;
        }
        (PI / q).sqrt() * acc
    } else {
        let mut acc = 1.0;
        let mut k = 1.0f64;
        loop {
            let term = 2.0 * (-q * k * k).exp();
            acc += term;
            if term < 1e-18 * acc {
                break;
            }
            k += 1.0;
        }
        acc
    }
}

impl ExactSpectrum {
    pub fn new(family: &Family, geometry: &ModelGeometry) -> Result<Self> {
        if !geometry.is_flat() {
            return Err(Error::Precondition("exact spectra need a constant conformal factor".into()));
        }
        let s = geometry.phi.constant.exp();
        let l = &geometry.domain.lengths;
        Ok(match (family, geometry.dim()) {
            (Family::DiracCircle { twist }, 1) => Self::Dirac { length: s * l[0], twist: *twist },
            (Family::DiracCircle { .. }, _) => return Err(Error::Dimension("Dirac lives on the circle".into())),
            (_, 1) => Self::Circle { length: s * l[0] },
            _ => Self::Torus { l1: s * l[0], l2: s * l[1] },
        })
    }

    /// Lowest `count` nonzero eigenvalues by modulus, with multiplicity.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        match *self {
            Self::Circle { length } => (1..=count.div_ceil(2))
                .flat_map(|k| {
                    let v = (2.0 * PI * k as f64 / length).powi(2);
                    [v, v]
                })
                .take(count)
                .collect(),
            Self::Dirac { length, twist } => {
                let w = 2.0 * PI / length;
                let mut v: Vec<f64> = (-(count as i64)..=count as i64).map(|k| w * (k as f64 + twist)).collect();
                v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
                v.truncate(count);
                v
            }
            Self::Torus { l1, l2 } => {
                let mut bound = 4.0 * PI * (count as f64 + 10.0) / (l1 * l2) * 2.0;
                loop {
                    let v = self.torus_below(bound);
                    if v.len() >= count {
                        let mut v = v;
                        v.truncate(count);
                        return v;
                    }
                    bound *= 2.0;
                }
            }
        }
    }

    fn torus_below(&self, bound: f64) -> Vec<f64> {
        let Self::Torus { l1, l2 } = *self else { unreachable!() };
        let k1max = (bound.sqrt() * l1 / (2.0 * PI)).ceil() as i64;
        let k2max = (bound.sqrt() * l2 / (2.0 * PI)).ceil() as i64;
        let mut v = Vec::new();
        for k1 in -k1max..=k1max {
            for k2 in -k2max..=k2max {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let lam = 4.0 * PI * PI * ((k1 * k1) as f64 / (l1 * l1) + (k2 * k2) as f64 / (l2 * l2));
                if lam <= bound {
                    v.push(lam);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn lambda_min(&self) -> f64 {
        match *self {
            Self::Circle { length } => (2.0 * PI / length).powi(2),
            Self::Torus { l1, l2 } => (2.0 * PI / l1.max(l2)).powi(2),
            Self::Dirac { length, twist } => 2.0 * PI / length * twist.min(1.0 - twist),
        }
    }

    /// Kernel-excluded `Σ h(λ) e^{−t|λ|^p}` with `h = sign` when `signed`.
    pub fn heat(&self, t: f64, power: f64, signed: bool) -> Result<f64> {
        if signed && !matches!(self, Self::Dirac { .. }) {
            return Ok(0.0);
        }
        if power != 1.0 {
            return self.heat_direct(t, power);
        }
        Ok(match *self {
            Self::Circle { length } => theta1((2.0 * PI / length).powi(2) * t) - 1.0,
            Self::Torus { l1, l2 } => theta1((2.0 * PI / l1).powi(2) * t) * theta1((2.0 * PI / l2).powi(2) * t) - 1.0,
            Self::Dirac { length, twist } => {
                let x = 2.0 * PI * t / length;
                let denom = -(-x).exp_m1();
                if signed {
                    (-x * twist).exp() * -(-x * (1.0 - 2.0 * twist)).exp_m1() / denom
                } else {
                    ((-x * twist).exp() + (-x * (1.0 - twist)).exp()) / denom
                }
            }
        })
    }

    fn heat_direct(&self, t: f64, power: f64) -> Result<f64> {
        let bound = (42.0 / t).powf(1.0 / power);
        match *self {
            Self::Circle { length } => {
                let mut acc = 0.0;
                let mut k = 1.0f64;
                loop {
                    let lam = (2.0 * PI * k / length).powi(2);
                    if lam > bound {
                        break;
                    }
                    acc += 2.0 * (-t * lam.powf(power)).exp();
                    k += 1.0;
                }
                Ok(acc)
            }
            Self::Torus { l1, l2 } => {
                let estimate = bound * l1 * l2 / (4.0 * PI);
                if estimate > 2e7 {
                    return Err(Error::Unsupported(format!("direct lattice sum with ~{estimate:.0} terms at t = {t}")));
                }
                Ok(self.torus_below(bound).iter().map(|lam| (-t * lam.powf(power)).exp()).sum())
            }
            Self::Dirac { .. } => Err(Error::Unsupported("powers of the Dirac operator".into())),
        }
    }

    /// Small-t expansion of the kernel-excluded trace for power 1; the
    /// Laplacian remainders are exponentially small, the Dirac one is O(t^{23}).
    pub fn expansion(&self, signed: bool) -> SmallTimeExpansion {
        let term = |power: f64, coeff: f64| ExpansionTerm { power, log: false, coeff };
        match *self {
            Self::Circle { length } => SmallTimeExpansion {
                terms: if signed { vec![] } else { vec![term(-0.5, length / (4.0 * PI).sqrt()), term(0.0, -1.0)] },
            },
            Self::Torus { l1, l2 } => SmallTimeExpansion {
                terms: if signed { vec![] } else { vec![term(-1.0, l1 * l2 / (4.0 * PI)), term(0.0, -1.0)] },
            },
            Self::Dirac { length, twist } => {
                let w = 2.0 * PI / length;
                let mut terms = Vec::new();
                for m in 0..=DIRAC_SERIES {
                    let odd = m % 2 == 1;
                    if odd != signed {
                        continue;
                    }
                    let c = if signed { -2.0 } else { 2.0 } * bernoulli_poly(m, twist) * w.powi(m as i32 - 1) / factorial(m as u32);
                    terms.push(term(m as f64 - 1.0, c));
                }
                SmallTimeExpansion { terms }
            }
        }
    }
}
