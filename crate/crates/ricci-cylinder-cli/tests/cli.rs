use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ricci-cyl"));
    c.env_remove("RICCI_CYL_OUT_DIR");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const POLY: &str = r#"
[[terms]]
freq = [0, 0]
component = [1, 1]
terms = [[1.0, 1, 0.0]]

[[terms]]
freq = [0, 0]
component = [2, 2]
terms = [[1.0, 1, 0.0]]
"#;

#[test]
fn spectrum_envelope_lists_modes() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["--out", "run", "spectrum", "--lengths", "1,2", "--cutoff", "1", "--rank", "scalar,tt-tensor"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let env = json(&d.path().join("run/envelope.json"));
    assert_eq!(env["task"], "spectrum");
    assert_eq!(env["inputs_digest"].as_str().unwrap().len(), 64);
    let payload = json(&d.path().join("run/payload.json"));
    let scalars = payload["spectra"]["scalar"]["modes"].as_array().unwrap();
    // 3x3 frequency box, constant mode once, the rest in cos and sin
    assert_eq!(scalars.len(), 1 + 2 * 4);
    assert!(payload["spectra"]["tt-tensor"]["modes"].is_array());
    let m = json(&d.path().join("run/manifest.json"));
    assert_eq!(m["config"]["cross_section"]["lengths"][1].as_f64(), Some(2.0));
    assert_eq!(m["config"]["spectrum"]["kinds"][1], "tt-tensor");
}

#[test]
fn manifest_echoes_every_default() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(d.path(), &["--out", "a", "ode-check", "--mu", "1", "--system", "4x4"])), 0);
    let cfg = &json(&d.path().join("a/manifest.json"))["config"];
    for section in [
        "cross_section",
        "spectrum",
        "solve_div",
        "solve_deform",
        "kernel_classify",
        "three_circles",
        "validate",
        "bound_fit",
        "ode_check",
    ] {
        assert!(cfg[section].is_object(), "{section}");
    }
    assert_eq!(cfg["validate"]["n_r"], 128);
    assert_eq!(cfg["validate"]["n_x"], 24);
    assert_eq!(cfg["seed"], 0);
    assert_eq!(cfg["ode_check"]["systems"], serde_json::json!(["4x4"]));
    assert_eq!(cfg["ode_check"]["mus"].as_array().unwrap().len(), 1);
}

#[test]
fn payload_is_deterministic_in_seed() {
    let d = TempDir::new().unwrap();
    for (out, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let o = run(d.path(), &["--out", out, "--seed", seed, "solve-div", "--green"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &str| std::fs::read(d.path().join(p).join("payload.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let env = json(&d.path().join("a/envelope.json"));
    assert_eq!(env["seed"], 7);
    assert_eq!(env["certificates"][1]["name"], "green-quadrature-agreement");
}

#[test]
fn invalid_three_circles_params_exit_2() {
    let d = TempDir::new().unwrap();
    // β' above ½ log(Q(t₃)/Q(t₂)) for L = 3
    let o = run(d.path(), &["--out", "r", "three-circles", "--L", "3", "--beta", "0.5", "--beta-prime", "0.45", "--triples", "0,1,2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid parameters"));
    assert!(!d.path().join("r/envelope.json").exists());
}

#[test]
fn failed_inequality_exits_3_and_writes_series() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("poly.toml"), POLY).unwrap();
    let o = run(
        d.path(),
        &["--out", "r", "three-circles", "--mode-file", "poly.toml", "--L", "10", "--beta", "0.5", "--beta-prime", "0.1", "--triples", "1,2,3"],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let env = json(&d.path().join("r/envelope.json"));
    assert_eq!(env["certificates"][0]["passed"], false);
    let csv = std::fs::read_to_string(d.path().join("r/tube-norm-series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_j,norm_sq"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn config_errors_name_the_field_and_line() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.toml"), "seed = 3\n[validate]\nn_r = 64\ngird = 2\n").unwrap();
    let o = run(d.path(), &["--config", "c.toml", "validate"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gird") && err.contains("line 4"), "{err}");
}

#[test]
fn json_config_and_env_output_dir() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("c.json"), r#"{"seed": 5, "cross_section": {"lengths": [6.283185307179586, 4.0], "cutoff": 1}}"#)
        .unwrap();
    let o = bin()
        .current_dir(d.path())
        .env("RICCI_CYL_OUT_DIR", "from-env")
        .args(["--config", "c.json", "kernel-classify", "--tau", "0"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&d.path().join("from-env/manifest.json"));
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["kernel_classify"]["tau"].as_f64(), Some(0.0));
}

#[test]
fn export_bound_fit_and_missing_series() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(d.path(), &["--out", "b", "bound-fit"])), 0);
    let o = run(d.path(), &["export", "--envelope", "b", "--kind", "bound-fit", "--label", "function", "--csv", "f.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("f.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("rho,ratio,log_gap"));
    assert_eq!(csv.lines().count(), 6);
    let o = run(d.path(), &["export", "--envelope", "b/envelope.json", "--kind", "remainder-scan"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing series"));
}

#[test]
fn validate_default_grid_passes() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["--out", "v", "validate", "--report", "report.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&d.path().join("report.json"));
    assert_eq!(report["grid"]["n_r"], 128);
    assert!(report["certificates"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let o = run(d.path(), &["export", "--envelope", "v", "--kind", "remainder-scan"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(d.path().join("v/remainder-scan.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epsilon,remainder_norm"));
}

#[test]
fn memory_guard_is_invalid_input() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["--out", "v", "validate", "--grid", "100000x2000"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}
