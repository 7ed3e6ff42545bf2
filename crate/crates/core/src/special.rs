//! Special functions with complex arguments: Γ, 1/Γ, Hurwitz ζ, Bernoulli data.
//!
//! `statrs` only covers real arguments, and the Mellin continuation needs
//! `1/Γ(w)` and `ζ(w, a)` on circles in the complex plane, so these are
//! implemented here (Lanczos, Euler–Maclaurin).

use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for complex z away from the poles.
pub fn gamma_c(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection
        let s = (z * PI).sin();
        return Complex64::from(PI) / (s * gamma_c(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::from(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// 1/Γ(z), entire; exact zeros at 0, −1, −2, ...
pub fn rgamma_c(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let w = Complex64::new(1.0, 0.0) - z;
        if z.im == 0.0 && z.re == z.re.round() {
            return Complex64::new(0.0, 0.0);
        }
        return gamma_c(w) * (z * PI).sin() / PI;
    }
    Complex64::new(1.0, 0.0) / gamma_c(z)
}

pub fn gamma(x: f64) -> f64 {
    gamma_c(Complex64::from(x)).re
}

/// Bernoulli numbers B_0..=B_30 (B_1 = −1/2).
const BERNOULLI: [f64; 31] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
    0.0,
    854513.0 / 138.0,
    0.0,
    -236364091.0 / 2730.0,
    0.0,
    8553103.0 / 6.0,
    0.0,
    -23749461029.0 / 870.0,
    0.0,
    8615841276005.0 / 14322.0,
];

pub const MAX_BERNOULLI: usize = 30;

pub fn bernoulli(m: usize) -> f64 {
    assert!(m <= MAX_BERNOULLI, "Bernoulli number B_{m} not tabulated");
    BERNOULLI[m]
}

/// Bernoulli polynomial B_m(x).
pub fn bernoulli_poly(m: usize, x: f64) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for k in 0..=m {
        acc += binom * bernoulli(k) * x.powi((m - k) as i32);
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (k+a)^{−s}, a > 0, s ≠ 1, via Euler–Maclaurin.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Complex64 {
    assert!(a > 0.0, "hurwitz_zeta needs a > 0");
    let one = Complex64::new(1.0, 0.0);
    let n = 18 + s.norm().ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        sum += Complex64::from(k as f64 + a).powc(-s);
    }
    let big = n as f64 + a;
    let bs = Complex64::from(big);
    sum += bs.powc(one - s) / (s - 1.0);
    sum += 0.5 * bs.powc(-s);
    // Σ_m B_{2m}/(2m)! · s(s+1)…(s+2m−2) · N^{−s−2m+1}
    let mut rising = s; // s(s+1)...(s+2m-2)
    let mut fact = 2.0; // (2m)!
    let mut npow = bs.powc(-s - 1.0);
    for m in 1..=14usize {
        let term = bernoulli(2 * m) / fact * rising * npow;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
        let k = 2 * m as u32;
        rising *= (s + (k - 1) as f64) * (s + k as f64);
        fact *= ((k + 1) * (k + 2)) as f64;
        npow /= big * big;
    }
    sum
}

pub fn riemann_zeta(s: Complex64) -> Complex64 {
    hurwitz_zeta(s, 1.0)
}

/// Real binomial coefficient binom(a, k) for real a.
pub fn binom_real(a: f64, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (a - i as f64) / (i + 1) as f64;
    }
    acc
}

/// (z)_k / k! with the rising Pochhammer symbol.
pub fn rising_over_factorial(z: Complex64, k: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 0..k {
        acc *= (z + i as f64) / (i + 1) as f64;
    }
    acc
}

/// d/dz of (z)_k / k!.
pub fn rising_over_factorial_dz(z: Complex64, k: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for skip in 0..k {
        let mut prod = Complex64::new(1.0, 0.0);
        for i in 0..k {
            if i != skip {
                prod *= z + i as f64;
            }
        }
        acc += prod;
    }
    let mut fact = 1.0;
    for i in 1..=k {
        fact *= i as f64;
    }
    acc / fact
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
