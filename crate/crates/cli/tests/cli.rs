use std::path::Path;
use std::process::{Command, Output};

use blackstock_cli::checkpoint::Checkpoint;
use serde_json::{json, Value};

fn run(sub: &str, config: &Value, dir: &Path, extra: &[&str]) -> Output {
    let cfg_path = dir.join(format!("{sub}.json"));
    std::fs::write(&cfg_path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_blackstock"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--output")
        .arg(dir)
        .args(extra)
        .env_remove("BLACKSTOCK_SEED")
        .output()
        .unwrap()
}

fn base(amplitude: f64, t_final: f64) -> Value {
    json!({
        "grid": {"dim": 1, "modes": [32]},
        "medium": {"c": 1, "b": 1, "k": 1, "sigma": 1},
        "initial": {
            "psi0": {"kind": "single_mode", "m": [1], "amplitude": amplitude},
            "psi1": {"kind": "multi_mode", "modes": []}
        },
        "integrator": {"dt": 1e-3, "T": t_final}
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_data_gives_zero_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("simulate", &base(0.0, 0.5), dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,E,E1,E2,F1,F2,F3,L,D_cum,w_ptt,w_lap_vt"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 51);
    for row in rows {
        let values: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(values.len(), 11);
        assert!(values[1..].iter().all(|&x| x == 0.0), "{row}");
    }
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["termination"]["status"], "completed");
}

#[test]
fn large_amplitude_exits_with_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(100.0, 1.0);
    cfg["grid"]["modes"] = json!([64]);
    let out = run("simulate", &cfg, dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["termination"]["status"], "diverged");
    let t = summary["termination"]["time"].as_f64().unwrap();
    assert!(t > 0.0 && t < 1.0, "{t}");
}

#[test]
fn config_errors_exit_one_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(0.01, 1.0);
    cfg["medium"]["b"] = json!(0);
    let out = run("simulate", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sound diffusivity must be positive"));
}

#[test]
fn fit_of_linear_csv_recovers_unit_rate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(0.01, 20.0);
    cfg["medium"] = json!({"c": 1, "b": 1, "k": 0, "sigma": 0});
    cfg["fit"] = json!({"window": [5.0, 15.0]});
    assert_eq!(
        run("simulate", &cfg, dir.path(), &[]).status.code(),
        Some(0)
    );
    let series = dir.path().join("series.csv");
    let out = run(
        "fit",
        &cfg,
        dir.path(),
        &["--series", series.to_str().unwrap()],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit = read_json(&dir.path().join("fit.json"));
    let zeta = fit["zeta"].as_f64().unwrap();
    assert!((zeta - 1.0).abs() < 0.15, "{zeta}");
    assert_eq!(fit["classification"], "decays");
}

#[test]
fn threshold_on_linear_medium_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(1.0, 4.0);
    cfg["medium"] = json!({"c": 1, "b": 1, "k": 0, "sigma": 0});
    cfg["threshold"] = json!({"lo": 0.01, "hi": 100.0, "iters": 2});
    let out = run("threshold", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("both decay"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = base(0.5, 1.0);
    run("simulate", &cfg, a.path(), &[]);
    run("simulate", &cfg, b.path(), &[]);
    let read = |d: &Path| std::fs::read(d.join("series.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    let half = tempfile::tempdir().unwrap();
    let rest = tempfile::tempdir().unwrap();
    let cfg = base(0.5, 1.0);
    assert_eq!(
        run("simulate", &cfg, full.path(), &[]).status.code(),
        Some(0)
    );
    let mut first = cfg.clone();
    first["integrator"]["T"] = json!(0.5);
    assert_eq!(
        run("simulate", &first, half.path(), &[]).status.code(),
        Some(0)
    );
    let mut second = cfg.clone();
    second["resume_from"] = json!(half.path().join("checkpoint.bin"));
    let out = run("simulate", &second, rest.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = Checkpoint::load(&full.path().join("checkpoint.bin")).unwrap();
    let b = Checkpoint::load(&rest.path().join("checkpoint.bin")).unwrap();
    assert_eq!(a.steps_taken, b.steps_taken);
    let diff = a
        .state
        .psi
        .max_abs_diff(&b.state.psi)
        .max(a.state.v.max_abs_diff(&b.state.v));
    assert!(diff <= 1e-12, "{diff}");
}

#[test]
fn sweep_writes_one_directory_per_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(0.01, 0.2);
    cfg["sweep"] = json!({"k": [0.0, 1.0], "amplitude": [1.0, 2.0, 3.0]});
    let out = run("sweep", &cfg, dir.path(), &["--jobs", "2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let index = read_json(&dir.path().join("sweep.json"));
    let entries = index.as_array().unwrap();
    assert_eq!(entries.len(), 6);
    for e in entries {
        let d = dir.path().join(e["directory"].as_str().unwrap());
        assert!(d.join("series.csv").exists() && d.join("summary.json").exists());
    }
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(0.0, 0.1);
    cfg["seed"] = json!(5);
    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_blackstock"))
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--output")
        .arg(dir.path())
        .env("BLACKSTOCK_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(&dir.path().join("summary.json"))["seed"], 77);
}
