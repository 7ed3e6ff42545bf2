//! Browser bindings. Each entry point returns a JSON string, or throws the
//! error message.

use canontrace::field::{Domain, FourierField};
use canontrace::spectral_models::{
    build_operator, default_basis, default_window, geometric_grid, heat_fit, heat_trace, zeta, zeta0, BuildOptions,
    Family, MellinOptions, ModelGeometry, ModelOperator,
};
use canontrace::symbol_core::{
    ball_integral, ball_integral_asymptotics, cutoff_integral, BracketTerm, CutoffProfile, FullSymbol, MultiIndex,
};
use canontrace::{Complex64, Error, Result};
use serde_json::{json, Value};
use std::f64::consts::PI;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; dense eigensolves beyond this stall the tab.
const MAX_N: [usize; 2] = [256, 24];

fn operator(domain: &str, n: usize, amplitude: f64, seed: u32) -> Result<ModelOperator> {
    let (dom, cap) = match domain {
        "circle" => (Domain::circle(2.0 * PI), MAX_N[0]),
        "torus" => (Domain::torus(1.0, 1.0), MAX_N[1]),
        other => return Err(Error::Config(format!("unknown domain `{other}`"))),
    };
    if n > cap {
        return Err(Error::Config(format!("N = {n} is above the demo limit {cap} for the {domain}")));
    }
    let phi = if amplitude == 0.0 {
        FourierField::constant(dom, 0.0)
    } else {
        FourierField::random(dom, seed as u64, 2, amplitude, 0.0)
    };
    build_operator(&Family::Laplacian, &ModelGeometry::new(phi, n)?, BuildOptions { force_dense: false, vectors: false })
}

/// Heat trace of the conformal Laplacian on its trust window, with the fitted expansion.
pub fn heat_curve_json(domain: &str, n: usize, amplitude: f64, seed: u32) -> Result<Value> {
    let op = operator(domain, n, amplitude, seed)?;
    let (lo, hi) = default_window(&op)?;
    let fit = heat_fit(&op, &geometric_grid(lo, hi, 16), &default_basis(&op, false), None, false)?;
    let exp = fit.expansion();
    let eps = geometric_grid(lo, hi, 48);
    let trace = eps.iter().map(|&t| heat_trace(&op, t, None, false)).collect::<Result<Vec<_>>>()?;
    let fitted: Vec<f64> = eps.iter().map(|&t| exp.eval(t)).collect();
    Ok(json!({
        "eps": eps,
        "trace": trace,
        "fit": fitted,
        "a": fit.a,
        "eps0_channel": fit.eps0_channel,
        "kernel_dim": op.kernel_dim,
        "residual": fit.residual,
        "window": [lo, hi],
    }))
}

/// Real ζ(z) of the conformal Laplacian; poles and failures come back as null.
pub fn zeta_curve_json(domain: &str, n: usize, amplitude: f64, seed: u32, z_min: f64, z_max: f64, points: usize) -> Result<Value> {
    if points < 2 || !(z_max > z_min) {
        return Err(Error::Config("need z_min < z_max and at least two points".into()));
    }
    let op = operator(domain, n, amplitude, seed)?;
    let fit = if op.is_exact() {
        None
    } else {
        let (lo, hi) = default_window(&op)?;
        Some(heat_fit(&op, &geometric_grid(lo, hi, 16), &default_basis(&op, false), None, false)?)
    };
    let (lo, _) = default_window(&op)?;
    let opts = MellinOptions { eps_min: (!op.is_exact()).then_some(lo), ..Default::default() };
    let z: Vec<f64> = (0..points).map(|i| z_min + (z_max - z_min) * i as f64 / (points - 1) as f64).collect();
    let values: Vec<Option<f64>> = z
        .iter()
        .map(|&zz| zeta(&op, Complex64::from(zz), fit.as_ref(), &opts).ok().map(|v| v.re).filter(|v| v.is_finite()))
        .collect();
    Ok(json!({ "z": z, "zeta": values, "zeta0": zeta0(&op, fit.as_ref())? }))
}

/// Ball integrals of `c ξ₁^m ⟨ξ⟩^s` against their fitted large-R expansion and the cut-off integral.
pub fn ball_fit_json(dim: usize, order: f64, monomial: u32) -> Result<Value> {
    let entries: Vec<u32> = (0..dim).map(|i| if i == 0 { monomial } else { 0 }).collect();
    let term = BracketTerm { coeff: Complex64::from(1.0), monomial: MultiIndex::new(&entries)?, s: order - monomial as f64 };
    let sigma = FullSymbol::bracket(dim, vec![term])?;
    let psi = CutoffProfile::default();
    let cut = cutoff_integral(&sigma, &psi)?;
    let radii: Vec<f64> = (0..24).map(|i| 4.0 * 25f64.powf(i as f64 / 23.0)).collect();
    let fit = ball_integral_asymptotics(&sigma, &radii, -10.0)?;
    let n = dim as f64;
    let shown: Vec<f64> = (0..40).map(|i| 4.0 * 25f64.powf(i as f64 / 39.0)).collect();
    let ball = shown.iter().map(|&r| ball_integral(&sigma, r).map(|v| v.re)).collect::<Result<Vec<_>>>()?;
    let asymptotic: Vec<f64> = shown
        .iter()
        .map(|&r| fit.a.iter().map(|&(j, a)| a * r.powf(order - j as f64 + n)).sum::<f64>() + fit.b * r.ln() + fit.c)
        .collect();
    Ok(json!({
        "radius": shown,
        "ball": ball,
        "asymptotic": asymptotic,
        "c_fit": fit.c,
        "b_fit": fit.b,
        "c_cutoff": cut.c.re,
        "b_cutoff": cut.b.re,
        "cutoff_dependent": cut.cutoff_dependent,
    }))
}

fn to_js(v: Result<Value>) -> std::result::Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn heat_curve(domain: &str, n: usize, amplitude: f64, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(heat_curve_json(domain, n, amplitude, seed))
}

#[wasm_bindgen]
pub fn zeta_curve(
    domain: &str,
    n: usize,
    amplitude: f64,
    seed: u32,
    z_min: f64,
    z_max: f64,
    points: usize,
) -> std::result::Result<String, JsValue> {
    to_js(zeta_curve_json(domain, n, amplitude, seed, z_min, z_max, points))
}

#[wasm_bindgen]
pub fn ball_fit(dim: usize, order: f64, monomial: u32) -> std::result::Result<String, JsValue> {
    to_js(ball_fit_json(dim, order, monomial))
}
