use super::config::{CutoffConfig, JobConfig, Task};
use crate::conformal_harness::{covariance_residual, registry, Evaluator};
use crate::field::FourierField;
use crate::laurent_engine::{kernel_correction, laurent_tr, pair_fit, Provenance};
use crate::spectral_models::{
    build_operator_cached, default_basis, default_window, eta0, eta_hurwitz, geometric_grid, heat_fit, trust_thresholds,
    zeta, zeta0, zeta_closed_form, zeta_prime_at_0, BuildOptions, EigenStore, Family, HeatExpansionFit, HeatTrace,
    MellinOptions, ModelOperator, TrustThresholds,
};
use crate::symbol_core::{ball_integral, ball_integral_asymptotics, cutoff_integral, wodzicki_residue_complex, FullSymbol};
use crate::laurent_engine::operand_symbol;
use crate::{Complex64, Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub struct TaskOutput {
    pub pass: bool,
    pub trust: Option<Trust>,
    pub result: Value,
    pub table: Option<Table>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Trust {
    #[serde(flatten)]
    pub thresholds: TrustThresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
}

fn trust(family: &Family, op_geometry: &crate::spectral_models::ModelGeometry, window: Option<(f64, f64)>) -> Option<Trust> {
    let t = trust_thresholds(family, op_geometry)?;
    log::info!("trust: N = {}, λ_cut = {:.6e}, ε_floor = {:.6e}", t.n, t.lambda_cut, t.eps_floor);
    if let Some((lo, hi)) = window {
        log::info!("fit window [{lo:.6e}, {hi:.6e}]");
    }
    Some(Trust { thresholds: t, window })
}

pub fn run(task: Task, cfg: &JobConfig, store: Option<&dyn EigenStore>) -> Result<TaskOutput> {
    match task {
        Task::Residue => residue(cfg),
        Task::Cutoff => cutoff(cfg),
        Task::Zeta => zeta_task(cfg, store),
        Task::HeatFit => heat_fit_task(cfg, store),
        Task::Laurent => laurent(cfg, store),
        Task::Anomaly => anomaly(cfg, store),
        Task::Covariance => covariance(cfg),
    }
}

fn build(cfg: &JobConfig, vectors: bool, store: Option<&dyn EigenStore>) -> Result<ModelOperator> {
    build_operator_cached(cfg.family()?, &cfg.geometry()?, BuildOptions { force_dense: false, vectors }, store)
}

/// Configured window, else the default one for dense operators.
fn fit_window(cfg: &JobConfig, op: &ModelOperator) -> Result<Option<(f64, f64)>> {
    match cfg.numerics.window()? {
        Some(w) => Ok(Some(w)),
        None if op.is_exact() => Ok(None),
        None => default_window(op).map(Some),
    }
}

fn mellin(cfg: &JobConfig, window: Option<(f64, f64)>) -> MellinOptions {
    MellinOptions { eps_min: window.map(|w| w.0), ..cfg.numerics.mellin() }
}

fn residue(cfg: &JobConfig) -> Result<TaskOutput> {
    let (sym, source) = match (&cfg.symbol, &cfg.operand) {
        (Some(s), None) => (s.to_symbol()?, "symbol"),
        (None, Some(a)) => {
            let g = cfg.geometry()?;
            (operand_symbol(&a.build(&g.domain)?, cfg.family()?, &g, cfg.numerics.symbol_grid)?, "operand")
        }
        (Some(_), Some(_)) => return Err(Error::Config("give either `symbol` or `operand`, not both".into())),
        (None, None) => return Err(Error::Config("residue needs a `symbol` or an `operand` block".into())),
    };
    let res = wodzicki_residue_complex(&sym)?;
    Ok(TaskOutput {
        pass: true,
        trust: None,
        result: json!({
            "source": source,
            "order": sym.order,
            "dimension": sym.dim(),
            "residue": res.re,
            "residue_im": res.im,
        }),
        table: None,
    })
}

fn cutoff(cfg: &JobConfig) -> Result<TaskOutput> {
    let c = cfg.cutoff.clone().unwrap_or_else(|| CutoffConfig {
        r0: 0.5,
        r1: 1.0,
        smoothness: 2,
        x_index: 0,
        ball_check: false,
    });
    let profile = c.profile()?;
    let mut sym = cfg.symbol()?.to_symbol()?;
    let depth = cfg.numerics.depth;
    if sym.depth() > depth {
        sym = sym.truncate(depth)?;
    }
    let points = sym.grid().map_or(1, |g| g.len());
    if c.x_index >= points {
        return Err(Error::Config(format!("x_index {} outside the {points} coefficient grid points", c.x_index)));
    }
    let sigma = FullSymbol::truncated(sym, c.x_index, profile)?;
    let r = cutoff_integral(&sigma, &profile)?;
    if r.cutoff_dependent {
        log::warn!("log coefficient b = {} is nonzero; the finite part depends on the cut-off", r.b);
    }
    let mut result = json!({
        "x_index": c.x_index,
        "profile": profile,
        "c": r.c.re,
        "c_im": r.c.im,
        "b": r.b.re,
        "b_im": r.b.im,
        "cutoff_dependent": r.cutoff_dependent,
    });
    let mut pass = true;
    let mut table = None;
    if c.ball_check {
        let radii = &cfg.numerics.radii;
        let fit = ball_integral_asymptotics(&sigma, radii, cfg.numerics.min_exponent)?;
        let gap = (fit.c - r.c.re).abs();
        pass = gap <= cfg.tolerance(Task::Cutoff);
        result["ball_fit"] = json!({ "fit": fit, "gap": gap });
        let rows = radii
            .iter()
            .map(|&rad| ball_integral(&sigma, rad).map(|v| vec![Cell::Num(rad), Cell::Num(v.re), Cell::Num(v.im)]))
            .collect::<Result<_>>()?;
        table = Some(Table { header: vec!["radius", "ball_re", "ball_im"], rows });
    }
    Ok(TaskOutput { pass, trust: None, result, table })
}

/// Five-point derivative of a closed form at 0.
fn closed_derivative(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let h = 1e-3;
    Ok((8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h))
}

fn fit_for(cfg: &JobConfig, op: &ModelOperator, window: Option<(f64, f64)>, signed: bool) -> Result<Option<HeatExpansionFit>> {
    match window {
        Some((lo, hi)) if !op.is_exact() => {
            let grid = geometric_grid(lo, hi, cfg.numerics.fit_points);
            Ok(Some(heat_fit(op, &grid, &default_basis(op, signed), None, signed)?))
        }
        _ => Ok(None),
    }
}

fn zeta_task(cfg: &JobConfig, store: Option<&dyn EigenStore>) -> Result<TaskOutput> {
    let op = build(cfg, false, store)?;
    let window = fit_window(cfg, &op)?;
    let trust = trust(&op.family, &op.geometry, window);
    let m = mellin(cfg, window);
    let fit = fit_for(cfg, &op, window, false)?;
    let z0 = zeta0(&op, fit.as_ref())?;
    let zp = zeta_prime_at_0(&op, fit.as_ref(), &m)?;
    let dirac = matches!(op.family, Family::DiracCircle { .. });
    let eta = if dirac { Some(eta0(&op, fit_for(cfg, &op, window, true)?.as_ref())?) } else { None };

    let closed = |z: f64| zeta_closed_form(&op, Complex64::from(z)).map(|v| v.re);
    let tol = cfg.tolerance(Task::Zeta);
    let mut pass = true;
    let oracle = match closed(0.0) {
        Ok(c0) => {
            let cp = closed_derivative(closed)?;
            let mut o = json!({
                "zeta0": c0,
                "zeta_prime0": cp,
                "zeta0_gap": (z0 - c0).abs(),
                "zeta_prime0_gap": (zp - cp).abs(),
            });
            pass = (z0 - c0).abs() <= tol && (zp - cp).abs() <= tol;
            if let Some(e) = eta {
                let ce = eta_hurwitz(&op, Complex64::from(0.0))?.re;
                o["eta0"] = json!(ce);
                o["eta0_gap"] = json!((e - ce).abs());
                pass &= (e - ce).abs() <= tol;
            }
            Some(o)
        }
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };

    let table = if cfg.numerics.z_grid.is_empty() {
        None
    } else {
        let has_closed = oracle.is_some();
        let rows = crate::par::try_map(&cfg.numerics.z_grid, |&z| {
            let v = zeta(&op, Complex64::from(z), fit.as_ref(), &m)?;
            let mut row = vec![Cell::Num(z), Cell::Num(v.re), Cell::Num(v.im)];
            if has_closed {
                row.push(Cell::Num(closed(z)?));
            }
            Ok(row)
        })?;
        let mut header = vec!["z", "zeta_re", "zeta_im"];
        if has_closed {
            header.push("closed_form");
        }
        Some(Table { header, rows })
    };

    let mut result = json!({
        "family": op.family.id(),
        "order": op.order,
        "kernel_dim": op.kernel_dim,
        "lambda_min": op.lambda_min(),
        "zeta0": z0,
        "zeta_prime0": zp,
        "log_det": -zp,
        "oracle": oracle,
    });
    if let Some(e) = eta {
        result["eta0"] = json!(e);
    }
    if let Some(f) = &fit {
        result["fit_residual"] = json!(f.residual);
    }
    Ok(TaskOutput { pass, trust, result, table })
}

fn heat_fit_task(cfg: &JobConfig, store: Option<&dyn EigenStore>) -> Result<TaskOutput> {
    let op = build(cfg, cfg.f.is_some(), store)?;
    let weight: Option<FourierField> = cfg.f.as_ref().map(|f| f.to_field(&op.geometry.domain)).transpose()?;
    let signed = cfg.numerics.signed;
    let (lo, hi) = match cfg.numerics.window()? {
        Some(w) => w,
        None => default_window(&op)?,
    };
    let trust = trust(&op.family, &op.geometry, Some((lo, hi)));
    let grid = geometric_grid(lo, hi, cfg.numerics.fit_points);
    let fit = heat_fit(&op, &grid, &default_basis(&op, signed), weight.as_ref(), signed)?;
    let trace = HeatTrace::new(&op, weight.as_ref(), signed)?;
    let exp = fit.expansion();
    let rows = grid
        .iter()
        .map(|&e| {
            let th = trace.eval(e)?;
            let fv = exp.eval(e);
            Ok(vec![Cell::Num(e), Cell::Num(th), Cell::Num(fv), Cell::Num(th - fv)])
        })
        .collect::<Result<_>>()?;
    let pass = fit.residual <= cfg.tolerance(Task::HeatFit);
    Ok(TaskOutput {
        pass,
        trust,
        result: json!({ "family": op.family.id(), "signed": signed, "weighted": weight.is_some(), "fit": fit }),
        table: Some(Table { header: vec!["eps", "trace", "fit", "difference"], rows }),
    })
}

fn laurent(cfg: &JobConfig, store: Option<&dyn EigenStore>) -> Result<TaskOutput> {
    let operand = cfg.operand()?;
    let op = build(cfg, operand.has_field(), store)?;
    let a = operand.build(&op.geometry.domain)?;
    let mut opts = cfg.numerics.laurent();
    let window = cfg.numerics.window()?;
    if let Some(w) = window {
        opts.fit = pair_fit(&a, &op, Some(w), cfg.numerics.fit_points)?;
        opts.mellin.eps_min = Some(w.0);
    }
    let trust = trust(&op.family, &op.geometry, window);
    let exp = laurent_tr(&a, &op, &opts)?;
    let weighted = exp.finite_part() + kernel_correction(&a, &op);
    let symbolic = exp.coeff(-1).unwrap_or(0.0);
    let gap = (symbolic - exp.spectral_residue).abs();
    let pass = gap <= cfg.tolerance(Task::Laurent);
    let provenance = |p: Provenance| match p {
        Provenance::Symbolic => "symbolic",
        Provenance::Spectral => "spectral",
        Provenance::Hybrid => "hybrid",
    };
    let rows = exp
        .coeffs
        .iter()
        .map(|c| vec![Cell::Int(c.k.into()), Cell::Num(c.value), Cell::Text(provenance(c.provenance).into())])
        .collect();
    Ok(TaskOutput {
        pass,
        trust,
        result: json!({
            "operand": a.label(),
            "weight": op.family.id(),
            "expansion": exp,
            "finite_part": exp.finite_part(),
            "weighted_trace": weighted,
            "consistency": {
                "symbolic_residue": symbolic,
                "spectral_residue": exp.spectral_residue,
                "gap": gap,
            },
        }),
        table: Some(Table { header: vec!["k", "coefficient", "provenance"], rows }),
    })
}

fn anomaly(cfg: &JobConfig, store: Option<&dyn EigenStore>) -> Result<TaskOutput> {
    let g = cfg.geometry()?;
    let family = cfg.family()?.clone();
    let spec = cfg.functional()?;
    let f_spec = cfg.direction()?;
    let mut ev = Evaluator::new(family.clone(), cfg.numerics.harness(Task::Anomaly)?);
    if let Some(s) = store {
        ev = ev.with_store(s);
    }
    let trust = trust(&family, &g, ev.options.window);
    let report = ev.anomaly_check(spec, &g, f_spec)?;
    log::info!("{}: lhs = {:.12e}, rhs = {:.12e}, gap = {:.3e}", report.functional_label, report.lhs, report.rhs, report.abs_gap);
    Ok(TaskOutput { pass: report.pass, trust, result: serde_json::to_value(&report)?, table: None })
}

fn covariance(cfg: &JobConfig) -> Result<TaskOutput> {
    let g = cfg.geometry()?;
    let family = cfg.family()?;
    let f = cfg.direction()?.to_field(&g.domain)?;
    let t = cfg.numerics.t;
    let residual = covariance_residual(family, &g, &f, t)?;
    let tol = cfg.tolerance(Task::Covariance);
    Ok(TaskOutput {
        pass: residual <= tol,
        trust: trust(family, &g, None),
        result: json!({
            "family": family.id(),
            "bidegree": family.bidegree(g.dim()),
            "t": t,
            "residual": residual,
            "registry": registry(g.dim()),
        }),
        table: None,
    })
}
