use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sqha::output::{parse_csv, SummaryRecord, CSV_HEADER};

fn sqha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqha"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_summary(path: &Path) -> SummaryRecord {
    SummaryRecord::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lindemann_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("lind.json");
    let o = sqha(&["case", "lindemann", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec = read_summary(&json);
    let ratio = rec.results["lambda_q_over_r0"].as_f64().unwrap();
    assert!((ratio - 0.2357).abs() < 1e-3);
    assert_eq!(rec.results["within_empirical_band"], true);
    assert_eq!(rec.provenance.config_sha256.len(), 64);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1, "one-line summary: {stdout}");
}

#[test]
fn helium_reports_both_temperatures() {
    let o = sqha(&["case", "helium"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let json = &text[..text.trim_end().rfind('\n').unwrap()];
    let rec = SummaryRecord::from_json(json).unwrap();
    let lp = &rec.results["lambda_point"];
    let theta = lp["theta_star"].as_f64().unwrap();
    assert!((2.0..=2.6).contains(&theta));
    assert_eq!(lp["paper_value"].as_f64(), Some(2.17));
    assert!(rec.results["bound_state"]["ordering_holds"].as_bool().unwrap());
}

#[test]
fn stochastic_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let o = sqha(&[
            "simulate",
            "--scheme",
            "stochastic_quantum",
            "--theta",
            "300 K",
            "--seed",
            seed,
            "--t-end",
            "0.2 ps",
            "--csv",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(&path).unwrap()
    };
    let a = csv("a.csv", "11");
    let b = csv("b.csv", "11");
    let c = csv("c.csv", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let rows = parse_csv(std::str::from_utf8(&a).unwrap()).unwrap();
    assert!(rows.len() > 2);
    assert!(a.starts_with(CSV_HEADER.as_bytes()));
}

#[test]
fn cfl_violation_is_numerical_and_leaves_no_summary() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let o = sqha(&["simulate", "--dt", "1 ps", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CFL"), "{}", stderr(&o));
    assert!(!json.exists());
}

#[test]
fn config_errors_name_the_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[grid]\npoints = 101\nresolution = 3\n").unwrap();
    let o = sqha(&["lambda-c", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("resolution"), "{err}");
    let o = sqha(&["lambda-c", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let json = dir.path().join("out.json");
    fs::write(
        &cfg,
        format!(
            "[material]\nmass = 4.0026 u\n[noise]\ntheta = 1 K\n[output]\njson = {}\n",
            json.display()
        ),
    )
    .unwrap();
    let o = sqha(&["lambda-c", "--config", cfg.to_str().unwrap(), "--theta", "2.17 K"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec = read_summary(&json);
    assert_eq!(rec.config.noise.theta, 2.17);
    let lc = rec.results["lambda_c"].as_f64().unwrap();
    assert!((lc / 3.29e-10 - 1.0).abs() < 5e-3);
}

#[test]
fn classify_and_audit() {
    let o = sqha(&["classify", "--family", "power", "--g", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ballistic (converges: false)"));
    let o = sqha(&["noise-audit", "--theta", "2 K", "--samples", "500", "--points", "2049"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = sqha(&["noise-audit"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn regime_with_and_without_noise() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let run = |extra: &[&str]| {
        let mut args = vec!["classify", "--family", "power", "--g", "1.4", "--delta-l", "1 nm"];
        args.extend_from_slice(extra);
        args.extend(["--json", json.to_str().unwrap()]);
        let o = sqha(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        read_summary(&json).results
    };
    let quiet = run(&[]);
    assert_eq!(quiet["regime"], "nonlocal_deterministic");
    assert!(quiet["lambda_q"].is_null());
    let hot = run(&["--theta", "300 K"]);
    assert!(hot["lambda_q"].as_f64().unwrap() > 0.0);
    assert!(hot["regime"].is_string());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sqha(&[]).status.code(), Some(1));
    assert_eq!(sqha(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(sqha(&["lambda-c", "--mass", "3 K"]).status.code(), Some(1));
    assert_eq!(sqha(&["--version"]).status.code(), Some(0));
}
