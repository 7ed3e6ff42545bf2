//! Conformal families `g_t = e^{2tf} g`: covariance of the model operators,
//! finite-difference variations of spectral functionals and the anomaly
//! formulas they are checked against.

use crate::complex_powers::power_symbol;
use crate::field::{FieldSpec, FourierField, PeriodicGrid};
use crate::laurent_engine::{operand_symbol, weighted_trace, LaurentOptions, TraceOperand};
use crate::linalg::{spectral_norm, spectral_norm_c};
use crate::spectral_models::{
    build_operator_cached, default_basis, default_window, eta0, geometric_grid, heat_fit, operator_matrix,
    operator_symbol, zeta0, zeta_prime_at_0, BuildOptions, DenseMatrix, EigenStore, Family, HeatExpansionFit, HeatTrace,
    MellinOptions, ModelGeometry, ModelOperator,
};
use crate::symbol_core::{residue_density, wodzicki_residue};
use crate::{Error, Result};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// Has a model realization and a dense discretization.
    Exact,
    /// Bidegree metadata only.
    RegistryOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovariantFamily {
    pub id: String,
    pub dim: usize,
    pub order: f64,
    pub bidegree: (f64, f64),
    pub exactness: Exactness,
}

/// Conformally covariant families in dimension `n`; order α has bidegree `((n−α)/2, (n+α)/2)`
/// except the Laplacian, which is covariant only for n = 2.
pub fn registry(n: usize) -> Vec<CovariantFamily> {
    let nf = n as f64;
    let entry = |id: &str, order: f64, exactness| CovariantFamily {
        id: id.into(),
        dim: n,
        order,
        bidegree: ((nf - order) / 2.0, (nf + order) / 2.0),
        exactness,
    };
    let mut out = Vec::new();
    if n == 2 {
        out.push(entry("laplacian", 2.0, Exactness::Exact));
    }
    if n == 1 {
        out.push(entry("dirac_circle", 1.0, Exactness::Exact));
    } else {
        out.push(entry("dirac", 1.0, Exactness::RegistryOnly));
    }
    if n != 2 {
        out.push(entry("yamabe", 2.0, Exactness::RegistryOnly));
    }
    out.push(entry("paneitz", 4.0, Exactness::RegistryOnly));
    out.push(entry("gjms_3", 6.0, Exactness::RegistryOnly));
    out
}

/// Bidegree of a Peterson-type covariant operator of real order α.
pub fn peterson_bidegree(alpha: f64, n: usize) -> (f64, f64) {
    ((n as f64 - alpha) / 2.0, (n as f64 + alpha) / 2.0)
}

fn exact_bidegree(family: &Family, dim: usize) -> Result<(f64, f64)> {
    family.bidegree(dim).ok_or_else(|| {
        Error::Unsupported(format!("{} in dimension {dim} is not a conformally covariant model family", family.id()))
    })
}

fn check_direction(geometry: &ModelGeometry, f: &FourierField) -> Result<()> {
    if f.domain != geometry.domain {
        return Err(Error::Dimension("conformal direction lives on a different domain".into()));
    }
    Ok(())
}

/// Relative operator-norm gap between `(A_{g_t} − A_{g_{−t}})/2t` and `(a−b) f A − a[f, A]`.
pub fn covariance_residual(family: &Family, geometry: &ModelGeometry, f: &FourierField, t: f64) -> Result<f64> {
    if !(1e-4..=1e-2).contains(&t) {
        return Err(Error::Precondition(format!("covariance step t = {t} outside [1e-4, 1e-2]")));
    }
    check_direction(geometry, f)?;
    let (a, b) = exact_bidegree(family, geometry.dim())?;
    let grid = crate::spectral_models::collocation_grid(geometry)?;
    let fv = f.sample(&grid);
    let plus = operator_matrix(family, &geometry.conformal_shift(f, t)?)?;
    let minus = operator_matrix(family, &geometry.conformal_shift(f, -t)?)?;
    let base = operator_matrix(family, geometry)?;
    const ITER: usize = 80;
    match (plus, minus, base) {
        (DenseMatrix::Real(p), DenseMatrix::Real(m), DenseMatrix::Real(g)) => {
            let r = Mat::from_fn(g.nrows(), g.ncols(), |i, j| {
                let fd = (p[(i, j)] - m[(i, j)]) / (2.0 * t);
                fd - ((a - b) * fv[i] * g[(i, j)] - a * (fv[i] - fv[j]) * g[(i, j)])
            });
            Ok(spectral_norm(&r, ITER) / spectral_norm(&g, ITER))
        }
        (DenseMatrix::Complex(p), DenseMatrix::Complex(m), DenseMatrix::Complex(g)) => {
            let r = Mat::from_fn(g.nrows(), g.ncols(), |i, j| {
                let fd = (p[(i, j)] - m[(i, j)]) / (2.0 * t);
                fd - g[(i, j)] * ((a - b) * fv[i] - a * (fv[i] - fv[j]))
            });
            Ok(spectral_norm_c(&r, ITER) / spectral_norm_c(&g, ITER))
        }
        _ => unreachable!("one family yields one matrix kind"),
    }
}

/// Spectral function `h` in `h(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HFunction {
    One,
    Lambda,
    Power(f64),
    Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalKind {
    #[serde(rename = "res_hA")]
    ResHA,
    #[serde(rename = "zeta0")]
    Zeta0,
    #[serde(rename = "zeta_prime0")]
    ZetaPrime0,
    #[serde(rename = "eta0")]
    Eta0,
    #[serde(rename = "weighted_tr_hA")]
    WeightedTrHA,
    #[serde(rename = "weighted_tr_hA_logj")]
    WeightedTrHALogj,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    #[serde(default = "default_h")]
    pub h: HFunction,
    /// Power of `log A` for `weighted_tr_hA_logj`.
    #[serde(default)]
    pub j: u32,
}

fn default_h() -> HFunction {
    HFunction::One
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind, h: HFunction) -> Self {
        Self { kind, h, j: 0 }
    }

    pub fn zeta0() -> Self {
        Self::new(FunctionalKind::Zeta0, HFunction::One)
    }

    pub fn zeta_prime0() -> Self {
        Self::new(FunctionalKind::ZetaPrime0, HFunction::One)
    }

    pub fn eta0() -> Self {
        Self::new(FunctionalKind::Eta0, HFunction::Sign)
    }

    pub fn res_power(c: f64) -> Self {
        Self::new(FunctionalKind::ResHA, HFunction::Power(c))
    }

    fn validate(&self, family: &Family) -> Result<()> {
        let dirac = matches!(family, Family::DiracCircle { .. });
        let sign = self.kind == FunctionalKind::Eta0 || self.h == HFunction::Sign;
        if sign && !dirac {
            return Err(Error::Precondition("h = sign needs an invertible family (twisted Dirac)".into()));
        }
        if self.kind == FunctionalKind::Eta0 && self.h != HFunction::Sign {
            return Err(Error::Precondition("eta0 is the functional with h = sign".into()));
        }
        if matches!(self.kind, FunctionalKind::Zeta0 | FunctionalKind::ZetaPrime0) && self.h != HFunction::One {
            return Err(Error::Precondition("zeta0 and zeta_prime0 take h = one".into()));
        }
        Ok(())
    }

    fn needs_operator(&self) -> bool {
        self.kind != FunctionalKind::ResHA
    }

    pub fn label(&self) -> String {
        let h = match self.h {
            HFunction::One => "1".to_string(),
            HFunction::Lambda => "λ".to_string(),
            HFunction::Power(c) => format!("λ^{c}"),
            HFunction::Sign => "sign".to_string(),
        };
        match self.kind {
            FunctionalKind::ResHA => format!("res(h(A)), h = {h}"),
            FunctionalKind::Zeta0 => "ζ(0)".into(),
            FunctionalKind::ZetaPrime0 => "ζ'(0)".into(),
            FunctionalKind::Eta0 => "η(0)".into(),
            FunctionalKind::WeightedTrHA => format!("tr^A(h(A)), h = {h}"),
            FunctionalKind::WeightedTrHALogj => format!("tr^A(h(A) log^{} A), h = {h}", self.j),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HarnessOptions {
    pub t: f64,
    /// 1: central difference; 2: plus one Richardson step.
    pub richardson: u8,
    pub fit_points: usize,
    /// Heat-fit window shared by all nodes; derived from the node operators when absent.
    pub window: Option<(f64, f64)>,
    pub mellin: MellinOptions,
    pub symbol_grid: usize,
    pub tolerance: f64,
    /// Run the covariance gate before anomaly checks.
    pub gate: bool,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            t: 1e-3,
            richardson: 1,
            fit_points: 16,
            window: None,
            mellin: MellinOptions::default(),
            symbol_grid: 32,
            tolerance: 1e-6,
            gate: true,
        }
    }
}

/// Bundles a functional evaluation context.
pub struct Evaluator<'a> {
    pub family: Family,
    pub options: HarnessOptions,
    pub store: Option<&'a dyn EigenStore>,
}

impl<'a> Evaluator<'a> {
    pub fn new(family: Family, options: HarnessOptions) -> Self {
        Self { family, options, store: None }
    }

    pub fn with_store(mut self, store: &'a dyn EigenStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn build(&self, geometry: &ModelGeometry, vectors: bool) -> Result<ModelOperator> {
        build_operator_cached(&self.family, geometry, BuildOptions { force_dense: false, vectors }, self.store)
    }

    fn fit(
        &self,
        op: &ModelOperator,
        window: Option<(f64, f64)>,
        weight: Option<&FourierField>,
        signed: bool,
    ) -> Result<Option<HeatExpansionFit>> {
        if op.is_exact() {
            return Ok(None);
        }
        let (lo, hi) = match window {
            Some(w) => w,
            None => default_window(op)?,
        };
        let grid = geometric_grid(lo, hi, self.options.fit_points);
        Ok(Some(heat_fit(op, &grid, &default_basis(op, signed), weight, signed)?))
    }

    fn mellin(&self, window: Option<(f64, f64)>, op: &ModelOperator) -> MellinOptions {
        let mut m = self.options.mellin;
        if !op.is_exact() && m.eps_min.is_none() {
            m.eps_min = window.map(|w| w.0);
        }
        m
    }

    /// Symbol-side functionals, which need only the geometry.
    fn symbolic(&self, spec: &FunctionalSpec, geometry: &ModelGeometry) -> Result<f64> {
        let n = self.options.symbol_grid;
        match spec.h {
            HFunction::One | HFunction::Lambda => Ok(0.0),
            HFunction::Power(c) => wodzicki_residue(&operand_symbol(&TraceOperand::Power { s: c }, &self.family, geometry, n)?),
            HFunction::Sign => wodzicki_residue(&operand_symbol(&TraceOperand::SignedUnit, &self.family, geometry, n)?),
        }
    }

    /// Value of the functional at one operator.
    pub fn evaluate(&self, spec: &FunctionalSpec, op: &ModelOperator, window: Option<(f64, f64)>) -> Result<f64> {
        spec.validate(&self.family)?;
        let laurent = |a: TraceOperand| -> Result<f64> {
            let fit = self.fit(op, window, None, matches!(a, TraceOperand::SignedUnit))?;
            let opts = LaurentOptions { mellin: self.mellin(window, op), fit, symbol_grid: self.options.symbol_grid, ..Default::default() };
            weighted_trace(&a, op, &opts)
        };
        match (spec.kind, spec.h) {
            (FunctionalKind::ResHA, _) => self.symbolic(spec, &op.geometry),
            (FunctionalKind::Zeta0, _) => zeta0(op, self.fit(op, window, None, false)?.as_ref()),
            (FunctionalKind::ZetaPrime0, _) => {
                zeta_prime_at_0(op, self.fit(op, window, None, false)?.as_ref(), &self.mellin(window, op))
            }
            (FunctionalKind::Eta0, _) | (FunctionalKind::WeightedTrHA, HFunction::Sign) => {
                eta0(op, self.fit(op, window, None, true)?.as_ref())
            }
            (FunctionalKind::WeightedTrHA, HFunction::One) => {
                Ok(zeta0(op, self.fit(op, window, None, false)?.as_ref())? + op.kernel_dim as f64)
            }
            (FunctionalKind::WeightedTrHA, HFunction::Lambda) => laurent(TraceOperand::Power { s: 1.0 }),
            (FunctionalKind::WeightedTrHA, HFunction::Power(c)) => laurent(TraceOperand::Power { s: c }),
            (FunctionalKind::WeightedTrHALogj, HFunction::One) if spec.j == 1 => {
                // tr^A(log A) = −ζ'(0); log A vanishes on the kernel
                Ok(-zeta_prime_at_0(op, self.fit(op, window, None, false)?.as_ref(), &self.mellin(window, op))?)
            }
            (FunctionalKind::WeightedTrHALogj, _) => {
                Err(Error::Unsupported("log^j weighted traces are only evaluated for j = 1, h = one".into()))
            }
        }
    }

    /// Functional values at the metrics `e^{2 s f} g`, s in `steps`, sharing one fit window.
    pub fn evaluate_nodes(&self, spec: &FunctionalSpec, geometry: &ModelGeometry, f: &FourierField, steps: &[f64]) -> Result<Vec<f64>> {
        check_direction(geometry, f)?;
        let node_err = |s: f64| move |e: Error| Error::Node { node: format!("t = {s:+e}"), source: Box::new(e) };
        let geoms: Vec<ModelGeometry> =
            steps.iter().map(|&s| geometry.conformal_shift(f, s).map_err(node_err(s))).collect::<Result<_>>()?;
        if !spec.needs_operator() {
            return steps.iter().zip(&geoms).map(|(&s, g)| self.symbolic(spec, g).map_err(node_err(s))).collect();
        }
        let ops: Vec<ModelOperator> = crate::par::try_map(&steps.iter().cloned().zip(geoms).collect::<Vec<_>>(), |(s, g)| {
            self.build(g, false).map_err(node_err(*s))
        })?;
        let window = match self.options.window {
            Some(w) => Some(w),
            None if ops.iter().all(|o| o.is_exact()) => None,
            None => {
                let mut lo = 0.0f64;
                let mut hi = f64::INFINITY;
                for (op, &s) in ops.iter().zip(steps) {
                    let (l, h) = default_window(op).map_err(node_err(s))?;
                    lo = lo.max(l);
                    hi = hi.min(h);
                }
                if lo >= hi {
                    return Err(Error::Precondition("node fit windows do not overlap".into()));
                }
                Some((lo, hi))
            }
        };
        let pairs: Vec<(f64, &ModelOperator)> = steps.iter().cloned().zip(ops.iter()).collect();
        crate::par::try_map(&pairs, |(s, op)| self.evaluate(spec, op, window).map_err(node_err(*s)))
    }

    /// `d/dt|₀ F(e^{2tf} g)` by central differences, optionally Richardson-extrapolated.
    pub fn conformal_variation(&self, spec: &FunctionalSpec, geometry: &ModelGeometry, f: &FourierField) -> Result<Variation> {
        let t = self.options.t;
        match self.options.richardson {
            1 => {
                let v = self.evaluate_nodes(spec, geometry, f, &[t, -t])?;
                let d1 = (v[0] - v[1]) / (2.0 * t);
                Ok(Variation { value: d1, central: d1, central_2t: None, truncation_estimate: None, t, scheme: Scheme::Central })
            }
            2 => {
                let v = self.evaluate_nodes(spec, geometry, f, &[t, -t, 2.0 * t, -2.0 * t])?;
                let d1 = (v[0] - v[1]) / (2.0 * t);
                let d2 = (v[2] - v[3]) / (4.0 * t);
                let r = (4.0 * d1 - d2) / 3.0;
                Ok(Variation {
                    value: r,
                    central: d1,
                    central_2t: Some(d2),
                    truncation_estimate: Some((r - d1).abs()),
                    t,
                    scheme: Scheme::Richardson,
                })
            }
            l => Err(Error::Precondition(format!("Richardson levels must be 1 or 2, got {l}"))),
        }
    }

    /// The anomaly formula at the background metric.
    pub fn anomaly_rhs(&self, spec: &FunctionalSpec, geometry: &ModelGeometry, f: &FourierField) -> Result<f64> {
        spec.validate(&self.family)?;
        check_direction(geometry, f)?;
        let dim = geometry.dim();
        let refuse = |what: &str| {
            Err(Error::Unsupported(format!("no anomaly formula for {} with {} in dimension {dim}: {what}", spec.label(), self.family.id())))
        };
        let (a, b) = match self.family.bidegree(dim) {
            Some(ab) => ab,
            None => return refuse("the family is not conformally covariant"),
        };
        let alpha = self.family.order();
        let n = self.options.symbol_grid;
        let laplacian_2d = matches!(self.family, Family::Laplacian) && dim == 2;
        match (spec.kind, spec.h) {
            (FunctionalKind::Zeta0, _) | (FunctionalKind::WeightedTrHA, HFunction::One) => Ok(0.0),
            // h′ = 0 for h = one, sign; res of the differential A itself is 0
            (FunctionalKind::ResHA, HFunction::One | HFunction::Lambda | HFunction::Sign) => Ok(0.0),
            (FunctionalKind::ResHA, HFunction::Power(c)) => {
                let sym = operand_symbol(&TraceOperand::Multiplier { f: f.clone(), s: c }, &self.family, geometry, n)?;
                Ok(c * (a - b) * wodzicki_residue(&sym)?)
            }
            (FunctionalKind::ZetaPrime0, _) | (FunctionalKind::WeightedTrHALogj, HFunction::One)
                if laplacian_2d && (spec.kind == FunctionalKind::ZetaPrime0 || spec.j == 1) =>
            {
                // (b − a) times the kernel-excluded finite part of Tr(f e^{−εA}), i.e. ∫ f a_n − tr(fΠ)
                let rhs = (b - a) * self.weighted_channel(geometry, f)?;
                Ok(if spec.kind == FunctionalKind::ZetaPrime0 { rhs } else { -rhs })
            }
            (FunctionalKind::Eta0, _) | (FunctionalKind::WeightedTrHA, HFunction::Sign) => {
                let sym = operand_symbol(&TraceOperand::SignedMultiplier { f: f.clone() }, &self.family, geometry, n)?;
                Ok((b - a) / alpha * wodzicki_residue(&sym)?)
            }
            (FunctionalKind::WeightedTrHA, HFunction::Lambda) if laplacian_2d => {
                let op = self.build(geometry, true)?;
                let fit = self.fit(&op, self.options.window, Some(f), false)?;
                let opts = LaurentOptions { mellin: self.mellin(self.options.window.or(default_window(&op).ok()), &op), fit, symbol_grid: n, ..Default::default() };
                let tr_fa = weighted_trace(&TraceOperand::Multiplier { f: f.clone(), s: 1.0 }, &op, &opts)?;
                // res(fA) vanishes for differential A but is kept for the formula's shape
                let res_fa = wodzicki_residue(&operand_symbol(&TraceOperand::Multiplier { f: f.clone(), s: 1.0 }, &self.family, geometry, n)?)?;
                Ok((a - b) * tr_fa + (b - a) / alpha * res_fa)
            }
            (FunctionalKind::ZetaPrime0, _) => refuse("the weighted heat route is implemented for the torus Laplacian"),
            (FunctionalKind::WeightedTrHA, _) => refuse("tr^A(h(A)) anomalies are implemented for h = one, λ (torus Laplacian) and sign"),
            (FunctionalKind::WeightedTrHALogj, _) => refuse("log^j anomalies are implemented for j = 1, h = one"),
        }
    }

    /// ε⁰ coefficient of the kernel-excluded `Tr(f e^{−εA})`.
    pub fn weighted_channel(&self, geometry: &ModelGeometry, f: &FourierField) -> Result<f64> {
        let op = self.build(geometry, true)?;
        match self.fit(&op, self.options.window, Some(f), false)? {
            Some(fit) => Ok(fit.eps0_channel),
            None => HeatTrace::new(&op, Some(f), false)?
                .expansion()
                .ok_or_else(|| Error::Unsupported("no closed-form expansion for this weight".into()))?
                .constant(),
        }
    }

    pub fn anomaly_check(&self, spec: &FunctionalSpec, geometry: &ModelGeometry, f_spec: &FieldSpec) -> Result<AnomalyReport> {
        let f = f_spec.to_field(&geometry.domain)?;
        let bidegree = self.family.bidegree(geometry.dim());
        let covariance = if self.options.gate && spec.needs_operator() {
            let r = covariance_residual(&self.family, geometry, &f, self.options.t)?;
            if r > COVARIANCE_GATE {
                return Err(Error::Precondition(format!("covariance gate failed: residual {r:.3e} > {COVARIANCE_GATE:e}")));
            }
            Some(r)
        } else {
            None
        };
        let rhs = self.anomaly_rhs(spec, geometry, &f)?;
        let lhs = self.conformal_variation(spec, geometry, &f)?;
        Ok(AnomalyReport::new(*spec, &self.family, bidegree, f_spec.clone(), lhs, rhs, self.options.tolerance, covariance))
    }

    /// Pointwise law `δ_f res_x(A^c) = c(a−b) f(x) res_x(A^c)` for coordinate densities on the symbol grid.
    pub fn pointwise_check(&self, c: f64, geometry: &ModelGeometry, f_spec: &FieldSpec) -> Result<PointwiseReport> {
        let f = f_spec.to_field(&geometry.domain)?;
        let (a, b) = exact_bidegree(&self.family, geometry.dim())?;
        if matches!(self.family, Family::DiracCircle { .. }) {
            return Err(Error::Unsupported("pointwise residues are checked for Laplacian powers".into()));
        }
        let n = self.options.symbol_grid;
        let grid = Arc::new(PeriodicGrid::new(geometry.domain.clone(), n));
        let density = |s: f64| -> Result<Vec<f64>> {
            let g = geometry.conformal_shift(&f, s)?;
            let sym = operator_symbol(&Family::Laplacian, &g, n)?;
            let j = 2.0 * c + g.dim() as f64;
            let depth = if (j - j.round()).abs() < 1e-9 && j >= 0.0 { j.round() as usize } else { 0 };
            let d = residue_density(&power_symbol(&sym, -c, depth.max(1))?)?;
            Ok((0..grid.len()).map(|i| d.value(i).re).collect())
        };
        let t = self.options.t;
        let diff = |h: f64| -> Result<Vec<f64>> {
            let (p, m) = (density(h)?, density(-h)?);
            Ok(p.iter().zip(&m).map(|(p, m)| (p - m) / (2.0 * h)).collect())
        };
        let d1 = diff(t)?;
        let (lhs, scheme) = if self.options.richardson == 2 {
            let d2 = diff(2.0 * t)?;
            (d1.iter().zip(&d2).map(|(a, b)| (4.0 * a - b) / 3.0).collect::<Vec<_>>(), Scheme::Richardson)
        } else {
            (d1, Scheme::Central)
        };
        let base = density(0.0)?;
        let fv = f.sample(&grid);
        let mut sup_gap = 0.0f64;
        let mut sup_rhs = 0.0f64;
        for i in 0..grid.len() {
            let rhs = c * (a - b) * fv[i] * base[i];
            sup_gap = sup_gap.max((lhs[i] - rhs).abs());
            sup_rhs = sup_rhs.max(rhs.abs());
        }
        Ok(PointwiseReport {
            c,
            family: self.family.id().into(),
            f_spec: f_spec.clone(),
            t,
            scheme,
            sup_gap,
            sup_rhs,
            tolerance: self.options.tolerance,
            pass: sup_gap <= self.options.tolerance,
        })
    }
}

pub const COVARIANCE_GATE: f64 = 1e-6;

/// Closed form of the variation along a constant direction `f ≡ c`, where
/// `A ↦ e^{−(b−a)c t} A` is a pure rescaling.
pub fn constant_direction_value(ev: &Evaluator, spec: &FunctionalSpec, geometry: &ModelGeometry, c: f64) -> Result<f64> {
    let (a, b) = exact_bidegree(&ev.family, geometry.dim())?;
    let w = b - a;
    let op = || ev.build(geometry, false);
    match (spec.kind, spec.h) {
        (FunctionalKind::Zeta0, _) | (FunctionalKind::Eta0, _) | (FunctionalKind::WeightedTrHA, HFunction::One | HFunction::Sign) => {
            Ok(0.0)
        }
        // ζ(z) ↦ e^{w c t z} ζ(z)
        (FunctionalKind::ZetaPrime0, _) => Ok(w * c * ev.evaluate(&FunctionalSpec::zeta0(), &op()?, None)?),
        // σ(A^s) ↦ e^{−w c t s} σ(A^s)
        (FunctionalKind::ResHA, HFunction::Power(s)) => Ok(-w * c * s * ev.evaluate(spec, &op()?, None)?),
        _ => Err(Error::Unsupported(format!("no scaling identity for {}", spec.label()))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Central,
    Richardson,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Variation {
    pub value: f64,
    pub central: f64,
    pub central_2t: Option<f64>,
    pub truncation_estimate: Option<f64>,
    pub t: f64,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub functional: FunctionalSpec,
    pub functional_label: String,
    pub family: String,
    pub bidegree: Option<(f64, f64)>,
    pub f_spec: FieldSpec,
    pub t: f64,
    pub scheme: Scheme,
    pub lhs: f64,
    pub truncation_estimate: Option<f64>,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub covariance_residual: Option<f64>,
    pub pass: bool,
}

impl AnomalyReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        functional: FunctionalSpec,
        family: &Family,
        bidegree: Option<(f64, f64)>,
        f_spec: FieldSpec,
        lhs: Variation,
        rhs: f64,
        tolerance: f64,
        covariance_residual: Option<f64>,
    ) -> Self {
        let abs_gap = (lhs.value - rhs).abs();
        let rel_gap = if rhs != 0.0 { abs_gap / rhs.abs() } else if abs_gap == 0.0 { 0.0 } else { f64::INFINITY };
        Self {
            functional,
            functional_label: functional.label(),
            family: family.id().into(),
            bidegree,
            f_spec,
            t: lhs.t,
            scheme: lhs.scheme,
            lhs: lhs.value,
            truncation_estimate: lhs.truncation_estimate,
            rhs,
            abs_gap,
            rel_gap,
            tolerance,
            covariance_residual,
            pass: abs_gap <= tolerance || rel_gap <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub c: f64,
    pub family: String,
    pub f_spec: FieldSpec,
    pub t: f64,
    pub scheme: Scheme,
    pub sup_gap: f64,
    pub sup_rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Domain;
    use std::f64::consts::PI;

    fn unit_torus(n: usize, phi: Option<FieldSpec>) -> ModelGeometry {
        let d = Domain::torus(1.0, 1.0);
        match phi {
            None => ModelGeometry::flat(d, n).unwrap(),
            Some(p) => ModelGeometry::new(p.to_field(&d).unwrap(), n).unwrap(),
        }
    }

    fn random(seed: u64, amplitude: f64) -> FieldSpec {
        FieldSpec::Random { seed, band: 2, amplitude, mean: 0.0 }
    }

    #[test]
    fn registry_bidegrees() {
        let r2 = registry(2);
        let lap = r2.iter().find(|f| f.id == "laplacian").unwrap();
        assert_eq!((lap.bidegree, lap.exactness), ((0.0, 2.0), Exactness::Exact));
        let dirac = registry(1).into_iter().find(|f| f.id == "dirac_circle").unwrap();
        assert_eq!(dirac.bidegree, (0.0, 1.0));
        let paneitz = registry(4).into_iter().find(|f| f.id == "paneitz").unwrap();
        assert_eq!((paneitz.bidegree, paneitz.exactness), ((0.0, 4.0), Exactness::RegistryOnly));
        let yamabe = registry(3).into_iter().find(|f| f.id == "yamabe").unwrap();
        assert_eq!(yamabe.bidegree, (0.5, 2.5));
        assert_eq!(peterson_bidegree(1.0, 2), (0.5, 1.5));
    }

    #[test]
    fn covariance_of_model_families() {
        let g = unit_torus(16, Some(random(1, 0.2)));
        let f = random(2, 0.5).to_field(&g.domain).unwrap();
        assert!(covariance_residual(&Family::Laplacian, &g, &f, 1e-3).unwrap() < 1e-6);
        let zero = FourierField::constant(g.domain.clone(), 0.0);
        assert_eq!(covariance_residual(&Family::Laplacian, &g, &zero, 1e-3).unwrap(), 0.0);
        let c = ModelGeometry::new(FourierField::random(Domain::circle(2.0 * PI), 3, 3, 0.2, 0.0), 64).unwrap();
        let f = FourierField::random(c.domain.clone(), 4, 3, 0.5, 0.0);
        assert!(covariance_residual(&Family::DiracCircle { twist: 0.3 }, &c, &f, 1e-3).unwrap() < 1e-6);
        assert!(covariance_residual(&Family::Laplacian, &c, &f, 1e-3).is_err());
        assert!(covariance_residual(&Family::Laplacian, &g, &zero, 0.5).is_err());
    }

    #[test]
    fn zeta_prime_scaling_on_flat_torus() {
        let g = unit_torus(32, None);
        let ev = Evaluator::new(Family::Laplacian, HarnessOptions { gate: false, ..Default::default() });
        let spec = FunctionalSpec::zeta_prime0();
        let c = 0.1;
        let r = ev.anomaly_check(&spec, &g, &FieldSpec::Constant { value: c }).unwrap();
        assert!((r.lhs + 2.0 * c).abs() < 1e-8, "{r:?}");
        assert!((r.rhs + 2.0 * c).abs() < 1e-12);
        assert!(r.pass);
        let closed = constant_direction_value(&ev, &spec, &g, c).unwrap();
        assert!((r.lhs - closed).abs() < 1e-8);
    }

    #[test]
    fn residue_of_inverse_laplacian_varies_with_volume() {
        let g = unit_torus(16, Some(random(5, 0.2)));
        let ev = Evaluator::new(Family::Laplacian, HarnessOptions { richardson: 2, ..Default::default() });
        let f_spec = random(6, 0.4);
        let f = f_spec.to_field(&g.domain).unwrap();
        let spec = FunctionalSpec::res_power(-1.0);
        let rhs = ev.anomaly_rhs(&spec, &g, &f).unwrap();
        assert!((rhs - g.integrate(&f) / PI).abs() < 1e-12);
        let r = ev.anomaly_check(&spec, &g, &f_spec).unwrap();
        assert!(r.abs_gap < 1e-9, "{r:?}");
        assert!(r.covariance_residual.is_none());
        let c = 0.3;
        let closed = constant_direction_value(&ev, &spec, &g, c).unwrap();
        let v = ev.conformal_variation(&spec, &g, &FourierField::constant(g.domain.clone(), c)).unwrap();
        assert!((v.value - closed).abs() < 1e-9);
    }

    #[test]
    fn pointwise_inverse_laplacian_density() {
        let g = unit_torus(16, Some(random(7, 0.2)));
        let ev = Evaluator::new(Family::Laplacian, HarnessOptions { richardson: 2, ..Default::default() });
        let r = ev.pointwise_check(-1.0, &g, &random(8, 0.5)).unwrap();
        assert!(r.pass && r.sup_gap < 1e-6, "{r:?}");
    }

    #[test]
    fn eta_is_scale_invariant() {
        let g = ModelGeometry::flat(Domain::circle(2.0 * PI), 32).unwrap();
        let ev = Evaluator::new(Family::DiracCircle { twist: 0.25 }, HarnessOptions::default());
        let r = ev.anomaly_check(&FunctionalSpec::eta0(), &g, &FieldSpec::Constant { value: 0.2 }).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn refusals_name_the_gap() {
        let g = ModelGeometry::flat(Domain::circle(2.0 * PI), 32).unwrap();
        let f = FourierField::constant(g.domain.clone(), 0.1);
        let ev = Evaluator::new(Family::Laplacian, HarnessOptions::default());
        let e = ev.anomaly_rhs(&FunctionalSpec::zeta_prime0(), &g, &f).unwrap_err();
        assert!(e.to_string().contains("not conformally covariant"), "{e}");
        let t = unit_torus(16, None);
        let f = FourierField::constant(t.domain.clone(), 0.1);
        assert!(ev.anomaly_rhs(&FunctionalSpec::eta0(), &t, &f).is_err());
        let logj = FunctionalSpec { kind: FunctionalKind::WeightedTrHALogj, h: HFunction::One, j: 2 };
        assert!(matches!(ev.anomaly_rhs(&logj, &t, &f), Err(Error::Unsupported(_))));
    }

    #[test]
    fn functional_spec_json() {
        let s: FunctionalSpec = serde_json::from_str(r#"{"kind": "res_hA", "h": {"power": -1.0}}"#).unwrap();
        assert_eq!(s, FunctionalSpec::res_power(-1.0));
        let s: FunctionalSpec = serde_json::from_str(r#"{"kind": "zeta_prime0"}"#).unwrap();
        assert_eq!(s, FunctionalSpec::zeta_prime0());
        assert!(serde_json::from_str::<FunctionalSpec>(r#"{"kind": "zeta0", "extra": 1}"#).is_err());
    }
}
