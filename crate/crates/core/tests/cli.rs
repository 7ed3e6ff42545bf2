use serde_json::Value;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(task: &str, config: &Path, out: &Path, cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_canontrace"));
    cmd.arg(task).arg("--config").arg(config).arg("--out").arg(out);
    if let Some(c) = cache {
        cmd.arg("--cache").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zeta_on_the_standard_circle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zeta.json");
    let o = run("zeta", &configs().join("zeta_circle.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["pass"], true);
    let res = &r["result"];
    assert!((res["zeta0"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    let zp = res["zeta_prime0"].as_f64().unwrap();
    assert!((zp + 2.0 * (2.0 * PI).ln()).abs() < 1e-6, "ζ'(0) = {zp}");
    assert!((zp + 3.67575).abs() < 1e-5);

    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("z,zeta_re,zeta_im,closed_form"));
    // ζ(z) = 2ζ_R(2z): 2ζ_R(4) = π⁴/45 and 2ζ_R(−1) = −1/6
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    let at = |z: f64| rows.iter().find(|r| r[0] == z).unwrap()[1];
    assert!((at(2.0) - PI.powi(4) / 45.0).abs() < 1e-9);
    assert!((at(-0.5) + 1.0 / 6.0).abs() < 1e-9);
}

#[test]
fn anomaly_of_log_det_under_constant_rescaling() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("anomaly.json");
    let o = run("anomaly", &configs().join("anomaly_flat_torus.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res = &report(&out)["result"];
    // ζ'(0) of e^{-2c}Δ moves by 2c·ζ(0) = −0.2 for c = 0.1
    assert!((res["lhs"].as_f64().unwrap() + 0.2).abs() < 1e-6);
    assert!((res["rhs"].as_f64().unwrap() + 0.2).abs() < 1e-12);
    assert_eq!(res["pass"], true);
}

#[test]
fn residue_of_inverse_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res.json");
    let o = run("residue", &configs().join("residue_inverse_laplacian.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res = &report(&out)["result"];
    assert!((res["residue"].as_f64().unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
}

#[test]
fn residue_from_an_operand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"geometry": {"kind": "circle", "lengths": [6.283185307179586], "N": 32},
            "operator": {"family": "laplacian"},
            "operand": {"kind": "power", "s": -0.5}}"#,
    );
    let out = dir.path().join("r.json");
    let o = run("residue", &cfg, &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // Δ^{-1/2} on the 2π circle: (2π)^{-1}·2π·2
    assert!((report(&out)["result"]["residue"].as_f64().unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn cutoff_report_flags_log_term() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cut.json");
    let o = run("cutoff", &configs().join("cutoff_bracket.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res = &report(&out)["result"];
    assert_eq!(res["cutoff_dependent"], true);
    assert!((res["b"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(res["ball_fit"]["gap"].as_f64().unwrap() < 1e-6);
    assert!(std::fs::read_to_string(out.with_extension("csv")).unwrap().starts_with("radius,ball_re,ball_im\n"));
}

#[test]
fn laurent_table_and_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l.json");
    let o = run("laurent", &configs().join("laurent_torus.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res = &report(&out)["result"];
    assert!((res["consistency"]["symbolic_residue"].as_f64().unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-12);
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("k,coefficient,provenance\n-1,"));
}

#[test]
fn covariance_of_the_dirac_operator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cov.json");
    let o = run("covariance", &configs().join("covariance_circle.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let res = &report(&out)["result"];
    assert!(res["residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(res["bidegree"], serde_json::json!([0.0, 1.0]));
}

#[test]
fn failed_tolerance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"geometry": {"kind": "torus", "lengths": [1, 1]},
            "operator": {"family": "laplacian"},
            "functional": {"kind": "zeta_prime0"},
            "f": {"kind": "constant", "value": 0.1},
            "numerics": {"tolerance": 1e-15}}"#,
    );
    let out = dir.path().join("r.json");
    let o = run("anomaly", &cfg, &out, None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(report(&out)["pass"], false);
}

#[test]
fn schema_violations_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let unknown = write_config(dir.path(), "a.json", r#"{"symbol": null, "colour": "red"}"#);
    let o = run("residue", &unknown, &out, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let nested = write_config(
        dir.path(),
        "b.json",
        r#"{"geometry": {"kind": "circle", "lengths": [1], "n": 32}, "operator": {"family": "laplacian"}}"#,
    );
    assert_eq!(run("zeta", &nested, &out, None).status.code(), Some(1));

    let wrong_task = write_config(dir.path(), "c.json", r#"{"task": "zeta"}"#);
    let o = run("residue", &wrong_task, &out, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config is for task `zeta`"));

    let missing = dir.path().join("nope.json");
    assert_eq!(run("zeta", &missing, &out, None).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn unsupported_pairs_report_the_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"geometry": {"kind": "circle", "lengths": [6.283185307179586], "N": 32},
            "operator": {"family": "dirac_circle", "twist": 0.25},
            "functional": {"kind": "zeta_prime0"},
            "f": {"kind": "constant", "value": 0.1}}"#,
    );
    let o = run("anomaly", &cfg, &dir.path().join("r.json"), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no anomaly formula for"), "{}", stderr(&o));
}

#[test]
fn reports_are_deterministic_and_cache_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"task": "zeta",
            "geometry": {"kind": "circle", "lengths": [6.283185307179586], "N": 48,
                         "phi": {"kind": "random", "seed": 5, "band": 2, "amplitude": 0.1}},
            "operator": {"family": "laplacian"},
            "numerics": {"z_grid": [0.25, 0.75, 1.5]}}"#,
    );
    let cache = dir.path().join("cache");
    let cold = dir.path().join("cold.json");
    let plain = dir.path().join("plain.json");
    let warm = dir.path().join("warm.json");
    assert_eq!(run("zeta", &cfg, &plain, None).status.code(), Some(0));
    assert_eq!(run("zeta", &cfg, &cold, Some(&cache)).status.code(), Some(0));
    let entries = std::fs::read_dir(&cache).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "eig")).count();
    assert_eq!(entries, 1);
    let o = run("zeta", &cfg, &warm, Some(&cache));
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("eigen cache hit"), "{}", stderr(&o));
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&plain), read(&cold));
    assert_eq!(read(&cold), read(&warm));
    assert_eq!(read(&plain.with_extension("csv")), read(&warm.with_extension("csv")));
    let r = report(&warm);
    assert_eq!(r["config"]["geometry"]["phi"]["seed"], 5);
    assert!(r["trust"]["eps_floor"].as_f64().unwrap() > 0.0);
}

#[test]
fn help_exits_cleanly() {
    let o = Command::new(env!("CARGO_BIN_EXE_canontrace")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_canontrace")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
