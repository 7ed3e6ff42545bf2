//! Composite Gauss–Legendre quadrature for real and complex integrands.

use gauss_quad::GaussLegendre;
use std::ops::{AddAssign, Mul};
use std::sync::OnceLock;

pub const DEFAULT_DEGREE: usize = 24;

fn rule24() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(DEFAULT_DEGREE)
            .expect("degree >= 2")
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Gauss–Legendre panel on [a, b].
pub fn panel<T, F>(a: f64, b: f64, f: &mut F) -> T
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = T::default();
    for &(x, w) in rule24() {
        acc += f(mid + half * x) * (w * half);
    }
    acc
}

/// Uniform composite rule with `panels` pieces.
pub fn uniform<T, F>(a: f64, b: f64, panels: usize, mut f: F) -> T
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    let h = (b - a) / panels as f64;
    let mut acc = T::default();
    for i in 0..panels {
        let lo = a + h * i as f64;
        acc += panel(lo, lo + h, &mut f);
    }
    acc
}

/// Geometrically graded panels on [a, b], 0 < a < b; suited to integrands
/// with structure on every scale (t^{w−1} weights, radial tails).
pub fn geometric<T, F>(a: f64, b: f64, panels_per_decade: usize, mut f: F) -> T
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    assert!(a > 0.0 && b > a);
    let decades = (b / a).log10();
    let n = ((decades * panels_per_decade as f64).ceil() as usize).max(1);
    let ratio = (b / a).powf(1.0 / n as f64);
    let mut acc = T::default();
    let mut lo = a;
    for i in 0..n {
        let hi = if i + 1 == n { b } else { lo * ratio };
        acc += panel(lo, hi, &mut f);
        lo = hi;
    }
    acc
}

/// Composite rule over consecutive breakpoints, `panels` pieces each.
pub fn piecewise<T, F>(breaks: &[f64], panels: usize, mut f: F) -> T
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    let mut acc = T::default();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc += uniform(w[0], w[1], panels, &mut f);
        }
    }
    acc
}
