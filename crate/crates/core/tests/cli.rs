//! The command-line binary: artifacts, output-root precedence and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_trafficfluid"));
    c.env_remove("TRAFFICFLUID_OUT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SHORT_MICRO: &str = r#"{"schema": 1, "id": "short", "kind": "micro",
    "micro": {"preset": "ncc-viscous", "params": {"t_end": 2.0}}}"#;

#[test]
fn simulate_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.json", SHORT_MICRO);
    let out = dir.path().join("out");
    let o = bin().args(["simulate", "--config", &cfg, "--out"]).arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "report.json", "series.csv", "frames.csv"] {
        assert!(out.join("short").join(f).is_file(), "missing {f}");
    }
    let series = std::fs::read_to_string(out.join("short/series.csv")).unwrap();
    assert!(series.lines().next().unwrap().starts_with("t_s,"));
}

#[test]
fn environment_sets_the_output_root_and_flag_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.json", SHORT_MICRO);
    let env_root = dir.path().join("env");
    let o = bin().env("TRAFFICFLUID_OUT", &env_root).args(["simulate", "--config", &cfg]).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_root.join("short/report.json").is_file());

    let flag_root = dir.path().join("flag");
    let o = bin().env("TRAFFICFLUID_OUT", &env_root).args(["simulate", "--config", &cfg, "--out"]).arg(&flag_root).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_root.join("short/report.json").is_file());
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"schema": 1, "id": "x", "kind": "micro", "micro": {"preset": "ncc-viscous", "bogus": 1}}"#);
    let o = bin().args(["simulate", "--config", &bad]).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let unreachable = write(
        dir.path(),
        "vmax.json",
        r#"{"schema": 1, "id": "x", "kind": "micro", "micro": {"preset": "ncc-viscous", "params": {"v_star": [35.0], "v_max": 35.0}}}"#,
    );
    let o = bin().args(["simulate", "--config", &unreachable]).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("v_max"));

    for args in [
        vec!["simulate", "--preset", "no-such-preset"],
        vec!["simulate", "--config", "/nonexistent/cfg.json"],
        vec!["simulate", "--config", &bad, "--preset", "ncc-viscous"],
        vec!["accept", "no-such-suite"],
        vec!["plot-data"],
    ] {
        let o = bin().args(&args).current_dir(dir.path()).output().unwrap();
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn solver_abort_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // The wave data peak at 31.25 veh/km, above this jam density.
    let cfg = write(
        dir.path(),
        "jam.json",
        r#"{"schema": 1, "id": "jam", "kind": "macro",
            "macro": {"models": [{"model": "ncc-wave"}],
                      "wave": {"rho_bar": 20.0, "rho_max": 30.0, "checkpoints": [0.0, 0.05]}}}"#,
    );
    let o = bin().args(["simulate", "--config", &cfg, "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn accept_reports_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["accept", "prop1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS  prop1"));
    assert!(dir.path().join("accept-prop1.json").is_file());

    let o = bin().args(["accept", "convergence-speed-prcc-inviscid", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL  convergence"));
}

#[test]
fn plot_data_writes_gnuplot_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.json", SHORT_MICRO);
    let o = bin().args(["plot-data", "--config", &cfg, "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let plot = dir.path().join("short/plot");
    for f in ["speed_error.dat", "min_distance.dat", "frames.dat"] {
        assert!(plot.join(f).is_file(), "missing {f}");
    }
    assert!(std::fs::read_to_string(plot.join("speed_error.dat")).unwrap().starts_with("# t_s "));
}
