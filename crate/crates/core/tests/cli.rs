use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const CHAIN2: &str = r#"
model = "one"
seed = 3

[lattice]
kind = "chain"
sites = 2
t = 1.0

[interactions]
u = -1.0

[sector]
particles = 2

[verify]
trials = 200

[qmc]
beta = 8.0
steps = 256
walkers = 256
measure_interval = 2
splitting = "symmetric"
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> (i32, String) {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bosehub"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

#[test]
fn verify_accepts_the_two_site_chain() {
    let dir = TempDir::new().unwrap();
    let (code, stderr) = run(dir.path(), CHAIN2, &["verify"]);
    assert_eq!(code, 0, "{stderr}");
    let report = read_json(dir.path(), "verify.json");
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "verify");
    assert_eq!(report["pass"], true);
    assert_eq!(report["result"]["degeneracy"]["count"], 1);
}

#[test]
fn disconnected_lattice_is_a_precondition_error() {
    let dir = TempDir::new().unwrap();
    let config = r#"
model = "one"

[lattice]
sites = 3
bonds = [[1, 2, 1.0, 0.0]]

[interactions]
u = -1.0

[sector]
particles = 2
"#;
    let (code, _) = run(dir.path(), config, &["verify"]);
    assert_eq!(code, 2);
    let report = read_json(dir.path(), "error.json");
    assert_eq!(report["error"]["kind"], "precondition");
}

#[test]
fn malformed_config_lists_field_paths() {
    let dir = TempDir::new().unwrap();
    let config = CHAIN2.replace("u = -1.0", "u = [-1.0, -1.0, -1.0]");
    let (code, _) = run(dir.path(), &config, &["ed"]);
    assert_eq!(code, 2);
    let report = read_json(dir.path(), "error.json");
    assert_eq!(report["error"]["kind"], "config");
    let details = report["error"]["details"].as_array().unwrap();
    assert!(details.iter().any(|d| d.as_str().unwrap().starts_with("interactions.u")));
}

#[test]
fn failing_verdict_exits_with_one() {
    // Real hopping keeps the two components on equal footing, so the ground
    // state is not a spin singlet once U2 > 0.
    let dir = TempDir::new().unwrap();
    let config = r#"
model = "two"

[lattice]
kind = "chain"
sites = 2
t = 1.0

[interactions]
u1 = -1.0
u2 = 0.5

[sector]
particles = 2

[verify]
trials = 100
"#;
    let (code, _) = run(dir.path(), config, &["verify"]);
    assert_eq!(code, 1);
    let report = read_json(dir.path(), "verify.json");
    assert_eq!(report["pass"], false);
    assert_eq!(report["result"]["verdict"]["zero_spin"], false);
}

#[test]
fn qmc_agrees_with_ed() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), CHAIN2, &["ed"]).0, 0);
    let exact = read_json(dir.path(), "ed.json")["result"]["ground_energy"].as_f64().unwrap();
    let (code, stderr) = run(dir.path(), CHAIN2, &["qmc"]);
    assert_eq!(code, 0, "{stderr}");
    let summary = &read_json(dir.path(), "qmc_summary.json")["result"]["summary"];
    let (energy, error) = (summary["energy"].as_f64().unwrap(), summary["error"].as_f64().unwrap());
    assert!((energy - exact).abs() <= 3.0 * error, "{energy} +/- {error} vs {exact}");

    let trace = fs::read_to_string(dir.path().join("out/qmc_trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some(bosehub::cli::TRACE_HEADER));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = CHAIN2.replace("walkers = 256", "walkers = 64");
    assert_eq!(run(dir.path(), &config, &["qmc"]).0, 0);
    let first = fs::read(dir.path().join("out/qmc_summary.json")).unwrap();
    assert_eq!(run(dir.path(), &config, &["qmc"]).0, 0);
    assert_eq!(first, fs::read(dir.path().join("out/qmc_summary.json")).unwrap());
}
