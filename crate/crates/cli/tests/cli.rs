use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wvn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wvn")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn free_bands_have_closed_gaps_at_squares() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "free.json", r#"{"periodic": {"period": 1.0}, "lambda_max": 100}"#);
    let o = wvn(&["bands", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("band,lower,upper,width,gap_above\n"));
    for (n, row) in csv_rows(&text).iter().enumerate().take(3) {
        let upper: f64 = row[2].parse().unwrap();
        let gap: f64 = row[4].parse().unwrap();
        assert!((upper - ((n + 1) as f64 * PI).powi(2)).abs() < 1e-8);
        assert!(gap.abs() < 1e-8);
    }
}

#[test]
fn mathieu_ground_edge_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"periodic": {"period": 3.141592653589793, "trig": {"cos": [2.0]}}, "lambda_max": 10}"#,
    );
    let o = wvn(&["bands", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let l0 = v[0]["lower"].as_f64().unwrap();
    assert!((l0 + 0.45514).abs() < 1e-5, "{l0}");
}

#[test]
fn malformed_config_exits_with_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"periodic": {"period": 1.0}, "wvn": {"c": 1.0, "omega": 0.3}}"#);
    let o = wvn(&["bands", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    let o = wvn(&["bands", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "neg.json", r#"{"periodic": {"period": -2.0}}"#);
    let o = wvn(&["bands", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("periodic"));
}

#[test]
fn free_critical_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"periodic": {"period": 1.0}, "wvn": {"c": 1.0, "omega": 0.3, "gamma": 0.9}, "lambda_max": 20, "bands": 1}"#,
    );
    let o = wvn(&["critical", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0");
    let lm: f64 = rows[0][1].parse().unwrap();
    let lp: f64 = rows[0][2].parse().unwrap();
    assert!((lm - 0.09).abs() < 1e-10);
    assert!((lp - 8.0747).abs() < 1e-4);
}

#[test]
fn mathieu_critical_residuals_are_small() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"periodic": {"period": 3.141592653589793, "trig": {"cos": [2.0]}}, "wvn": {"c": 1.0, "omega": 0.8, "gamma": 0.9}, "lambda_max": 30, "bands": 3}"#,
    );
    let o = wvn(&["critical", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    for row in csv_rows(&stdout(&o)) {
        assert!(row[3].parse::<f64>().unwrap() <= 1e-8 && row[4].parse::<f64>().unwrap() <= 1e-8);
    }
}

#[test]
fn violated_frequency_condition_warns_without_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"periodic": {"period": 1.0}, "wvn": {"c": 1.0, "omega": 1.5707963267948966, "gamma": 0.9}}"#,
    );
    let o = wvn(&["critical", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

fn density_rows(cfg: &Path, extra: &[&str]) -> (String, Vec<Vec<String>>) {
    let mut args = vec!["density", "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = wvn(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows = csv_rows(&text);
    (text, rows)
}

#[test]
fn free_density_scans() {
    let dir = tempfile::tempdir().unwrap();
    for (alpha, exact) in [(0.0, (|l: f64| l.sqrt() / PI) as fn(f64) -> f64), (PI / 2.0, |l: f64| 1.0 / (PI * l.sqrt()))] {
        let cfg = write_config(
            dir.path(),
            "d.json",
            &format!(r#"{{"periodic": {{"period": 1.0}}, "alpha": {alpha}, "grid": {{"lo": 0.5, "hi": 25.0, "points": 8}}}}"#),
        );
        let (text, rows) = density_rows(&cfg, &["--workers", "2"]);
        assert!(text.starts_with("lambda,A_re,A_im,m_re,m_im,rho,wronskian_residual,m_residual,reason\n"));
        assert_eq!(rows.len(), 8);
        for row in rows {
            let l: f64 = row[0].parse().unwrap();
            let rho: f64 = row[5].parse().unwrap();
            assert!((rho - exact(l)).abs() <= 1e-6 * exact(l), "{l}: {rho}");
        }
    }
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        r#"{"periodic": {"period": 1.0}, "wvn": {"c": 0.5, "omega": 0.3, "gamma": 0.95}, "grid": {"lo": 2.0, "hi": 6.0, "points": 6}}"#,
    );
    let (one, _) = density_rows(&cfg, &["--workers", "1"]);
    let (three, _) = density_rows(&cfg, &["--workers", "3"]);
    assert_eq!(one, three);
    let out = dir.path().join("scan.csv");
    let (_, _) = density_rows(&cfg, &["--workers", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), one);
}

#[test]
fn refinement_is_denser_near_the_critical_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        r#"{"periodic": {"period": 1.0}, "wvn": {"c": 1.0, "omega": 0.3, "gamma": 0.9},
            "extract": {"x_cap_periods": 2000},
            "grid": {"lo": 0.02, "hi": 0.3, "points": 5, "refine": {"radius": 0.04, "levels": 3}}}"#,
    );
    let (_, rows) = density_rows(&cfg, &[]);
    let xs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    let spacing = |lo: f64, hi: f64| {
        let inside: Vec<f64> = xs.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
        inside.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    };
    let uniform = (0.3 - 0.02) / 4.0;
    assert!(spacing(0.05, 0.13) < uniform / 4.0);
    // λ₀⁻ = 0.09 itself is on the grid and excluded, with a reason
    let centre = rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - 0.09).abs() < 1e-12).unwrap();
    assert!(centre[8].contains("excluded"));
}

#[test]
fn verify_passes_on_free_and_reports_reduction_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.json", r#"{"periodic": {"period": 1.0}, "lambda_max": 40}"#);
    let o = wvn(&["verify", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"periodic": {"period": 3.141592653589793, "trig": {"cos": [2.0]}}, "wvn": {"c": 1.0, "omega": 0.8, "gamma": 0.9}, "lambda_max": 10}"#,
    );
    let o = wvn(&["verify", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    assert!(checks.iter().any(|c| c.starts_with("Q-equation residual")));
    assert!(checks.iter().any(|c| c.starts_with("R2 conjugation symmetry")));
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn verify_fails_with_a_broken_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "f.json",
        r#"{"periodic": {"period": 1.0}, "lambda_max": 40, "tolerances": {"rtol": 1e-2, "atol": 1e-2}}"#,
    );
    let o = wvn(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
