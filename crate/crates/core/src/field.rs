//! Periodic domains, band-limited Fourier fields and sampled coefficient fields.

use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// A flat periodic box `∏ [0, L_i)`, dimension 1 or 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lengths: Vec<f64>,
}

impl Domain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::Dimension(format!("dimension {} not in {{1, 2}}", lengths.len())));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Precondition("domain lengths must be positive".into()));
        }
        Ok(Self { lengths })
    }

    pub fn circle(length: f64) -> Self {
        Self { lengths: vec![length] }
    }

    pub fn torus(l1: f64, l2: f64) -> Self {
        Self { lengths: vec![l1, l2] }
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}

/// Uniform grid with `n` points per axis. Flat index is `i0 * n + i1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGrid {
    pub domain: Domain,
    pub n: usize,
}

impl PeriodicGrid {
    pub fn new(domain: Domain, n: usize) -> Self {
        Self { domain, n }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = |axis: usize| self.domain.lengths[axis] / self.n as f64;
        match self.dim() {
            1 => [idx as f64 * h(0), 0.0],
            _ => [(idx / self.n) as f64 * h(0), (idx % self.n) as f64 * h(1)],
        }
    }

    /// Trapezoid weight `dx` of a single grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.domain.volume() / self.len() as f64
    }

    /// Signed wavenumber of FFT slot `k` (Nyquist reported as +n/2).
    pub fn wavenumber(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }
}

/// One real Fourier mode `cos·cos(2π k·x/L) + sin·sin(2π k·x/L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Config-level description of a [`FourierField`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    Modes {
        #[serde(default)]
        constant: f64,
        modes: Vec<FourierMode>,
    },
    /// Seeded sampler, see [`FourierField::random`].
    Random {
        seed: u64,
        band: u32,
        amplitude: f64,
        #[serde(default)]
        mean: f64,
    },
}

impl FieldSpec {
    pub fn to_field(&self, domain: &Domain) -> Result<FourierField> {
        match self {
            Self::Constant { value } => Ok(FourierField::constant(domain.clone(), *value)),
            Self::Modes { constant, modes } => FourierField::new(domain.clone(), *constant, modes.clone()),
            Self::Random { seed, band, amplitude, mean } => {
                if *band == 0 {
                    return Err(Error::Precondition("random fields need band ≥ 1".into()));
                }
                Ok(FourierField::random(domain.clone(), *seed, *band, *amplitude, *mean))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::Modes { modes, .. } => modes.iter().all(|m| m.cos == 0.0 && m.sin == 0.0),
            Self::Random { amplitude, .. } => *amplitude == 0.0,
        }
    }
}

/// Real trigonometric polynomial on a [`Domain`]; derivatives are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    pub domain: Domain,
    pub constant: f64,
    pub modes: Vec<FourierMode>,
}

impl FourierField {
    pub fn constant(domain: Domain, c: f64) -> Self {
        Self { domain, constant: c, modes: Vec::new() }
    }

    pub fn new(domain: Domain, constant: f64, modes: Vec<FourierMode>) -> Result<Self> {
        for m in &modes {
            if m.k.len() != domain.dim() {
                return Err(Error::Dimension(format!(
                    "mode {:?} has {} entries, domain has dimension {}",
                    m.k,
                    m.k.len(),
                    domain.dim()
                )));
            }
        }
        Ok(Self { domain, constant, modes })
    }

    /// Seeded random field with modes `0 < max|k_i| ≤ band` and `sup|field − mean| ≤ amplitude`.
    pub fn random(domain: Domain, seed: u64, band: u32, amplitude: f64, mean: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = band as i32;
        let mut modes = Vec::new();
        match domain.dim() {
            1 => {
                for k in 1..=b {
                    modes.push(FourierMode {
                        k: vec![k],
                        cos: rng.gen_range(-1.0..1.0),
                        sin: rng.gen_range(-1.0..1.0),
                    });
                }
            }
            _ => {
                // half lattice: (k1 > 0) or (k1 == 0 and k2 > 0)
                for k1 in 0..=b {
                    for k2 in -b..=b {
                        if k1 == 0 && k2 <= 0 {
                            continue;
                        }
                        modes.push(FourierMode {
                            k: vec![k1, k2],
                            cos: rng.gen_range(-1.0..1.0),
                            sin: rng.gen_range(-1.0..1.0),
                        });
                    }
                }
            }
        }
        let bound: f64 = modes.iter().map(|m| m.cos.abs() + m.sin.abs()).sum();
        if bound > 0.0 {
            for m in &mut modes {
                m.cos *= amplitude / bound;
                m.sin *= amplitude / bound;
            }
        }
        Self { domain, constant: mean, modes }
    }

    fn phase(&self, m: &FourierMode, x: &[f64]) -> f64 {
        m.k.iter()
            .zip(&self.domain.lengths)
            .zip(x)
            .map(|((&k, &l), &xi)| 2.0 * PI * k as f64 * xi / l)
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for m in &self.modes {
            let p = self.phase(m, x);
            v += m.cos * p.cos() + m.sin * p.sin();
        }
        v
    }

    /// Exact partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let l = self.domain.lengths[axis];
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let w = 2.0 * PI * m.k[axis] as f64 / l;
                FourierMode { k: m.k.clone(), cos: w * m.sin, sin: -w * m.cos }
            })
            .collect();
        Self { domain: self.domain.clone(), constant: 0.0, modes }
    }

    /// Flat Laplacian `Σ ∂_i²` (the analyst's sign).
    pub fn laplacian(&self) -> Self {
        let mut out = Self::constant(self.domain.clone(), 0.0);
        for axis in 0..self.domain.dim() {
            out = out.add(&self.derivative(axis).derivative(axis));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        Self { domain: self.domain.clone(), constant: self.constant + other.constant, modes }
    }

    pub fn scale(&self, s: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| FourierMode { k: m.k.clone(), cos: s * m.cos, sin: s * m.sin })
            .collect();
        Self { domain: self.domain.clone(), constant: s * self.constant, modes }
    }

    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.cos == 0.0 && m.sin == 0.0)
    }

    /// Coordinate mean `(1/vol) ∫ field dx`.
    pub fn mean(&self) -> f64 {
        self.constant
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.modes.iter().map(|m| m.cos.abs() + m.sin.abs()).sum::<f64>()
    }

    /// Highest |k_i| over all modes.
    pub fn band(&self) -> u32 {
        self.modes.iter().flat_map(|m| m.k.iter().map(|k| k.unsigned_abs())).max().unwrap_or(0)
    }

    pub fn sample(&self, grid: &PeriodicGrid) -> Vec<f64> {
        (0..grid.len()).map(|i| self.eval(&grid.point(i)[..grid.dim()])).collect()
    }

    pub fn to_coefficient(&self, grid: &Arc<PeriodicGrid>) -> CoefficientField {
        if self.is_constant() {
            return CoefficientField::constant(self.constant);
        }
        CoefficientField::from_real(grid, &self.sample(grid))
    }
}

/// Spatial coefficient of a symbol term: a constant, or samples on a periodic grid.
///
/// Values are complex because products and complex powers produce factors of
/// `i` and `c(x)^{-z}`; fields built from configuration data are real.
#[derive(Clone, Debug)]
pub enum CoefficientField {
    Constant(Complex64),
    Grid { grid: Arc<PeriodicGrid>, values: Arc<Vec<Complex64>> },
}

impl CoefficientField {
    pub fn constant(c: f64) -> Self {
        Self::Constant(Complex64::from(c))
    }

    pub fn zero() -> Self {
        Self::Constant(Complex64::new(0.0, 0.0))
    }

    pub fn from_real(grid: &Arc<PeriodicGrid>, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len());
        Self::Grid {
            grid: grid.clone(),
            values: Arc::new(values.iter().map(|&v| Complex64::from(v)).collect()),
        }
    }

    pub fn from_complex(grid: &Arc<PeriodicGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self::Grid { grid: grid.clone(), values: Arc::new(values) }
    }

    pub fn grid(&self) -> Option<&Arc<PeriodicGrid>> {
        match self {
            Self::Constant(_) => None,
            Self::Grid { grid, .. } => Some(grid),
        }
    }

    pub fn value(&self, idx: usize) -> Complex64 {
        match self {
            Self::Constant(c) => *c,
            Self::Grid { values, .. } => values[idx],
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Constant(c) => c.norm(),
            Self::Grid { values, .. } => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(c) => *c == Complex64::new(0.0, 0.0),
            Self::Grid { values, .. } => values.iter().all(|v| *v == Complex64::new(0.0, 0.0)),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(f(*c)),
            Self::Grid { grid, values } => Self::Grid {
                grid: grid.clone(),
                values: Arc::new(values.iter().map(|&v| f(v)).collect()),
            },
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        Ok(match (self, other) {
            (Self::Constant(a), Self::Constant(b)) => Self::Constant(f(*a, *b)),
            (Self::Constant(a), g @ Self::Grid { .. }) => g.map(|v| f(*a, v)),
            (g @ Self::Grid { .. }, Self::Constant(b)) => g.map(|v| f(v, *b)),
            (Self::Grid { grid: ga, values: va }, Self::Grid { grid: gb, values: vb }) => {
                if ga != gb {
                    return Err(Error::IncompatibleGrids);
                }
                Self::Grid {
                    grid: ga.clone(),
                    values: Arc::new(va.iter().zip(vb.iter()).map(|(&a, &b)| f(a, b)).collect()),
                }
            }
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    /// `c^w` on the principal branch; used with `c > 0`.
    pub fn powc(&self, w: Complex64) -> Self {
        self.map(|v| if w == Complex64::new(0.0, 0.0) { Complex64::new(1.0, 0.0) } else { v.powc(w) })
    }

    pub fn ln(&self) -> Self {
        self.map(|v| v.ln())
    }

    /// Spectral partial derivative along `axis`. The Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize) -> Self {
        let (grid, values) = match self {
            Self::Constant(_) => return Self::zero(),
            Self::Grid { grid, values } => (grid, values),
        };
        let n = grid.n;
        let dim = grid.dim();
        let l = grid.domain.lengths[axis];
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut out = values.as_ref().clone();
        let lines: Vec<(usize, usize)> = match (dim, axis) {
            (1, _) => vec![(0, 1)],
            (_, 0) => (0..n).map(|j| (j, n)).collect(),
            _ => (0..n).map(|i| (i * n, 1)).collect(),
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (start, stride) in lines {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = out[start + k * stride];
            }
            fwd.process(&mut buf);
            for (k, b) in buf.iter_mut().enumerate() {
                let kk = grid.wavenumber(k);
                let factor = if n % 2 == 0 && kk == (n / 2) as i64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, 2.0 * PI * kk as f64 / l)
                };
                *b *= factor / n as f64;
            }
            inv.process(&mut buf);
            for (k, b) in buf.iter().enumerate() {
                out[start + k * stride] = *b;
            }
        }
        Self::Grid { grid: grid.clone(), values: Arc::new(out) }
    }

    /// Coordinate integral `∫ field dx` over `domain`.
    pub fn integrate(&self, domain: &Domain) -> Complex64 {
        match self {
            Self::Constant(c) => c * domain.volume(),
            Self::Grid { grid, values } => values.iter().sum::<Complex64>() * grid.cell_volume(),
        }
    }
}
