use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn qtraj(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtraj"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a CSV file as string cells, header dropped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn misspelled_key_is_a_parse_error_with_a_suggestion() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "units.hbar = 1.0\npotentail.kind = \"free\"\n");
    let o = qtraj(&["trajectory"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("parse error") && err.contains("line 2") && err.contains("did you mean `potential`"), "{err}");
    assert!(!dir.path().join("out").exists(), "no output before validation succeeds");
}

#[test]
fn zero_a_is_rejected_before_running() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "microstates.list = [[0.0, 1.0]]\n");
    let o = qtraj(&["compare"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a = 0"), "{}", stderr(&o));
}

#[test]
fn free_configuration_separates_floyd_and_dynamical_times() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = qtraj(&["compare"], &configs().join("free.toml"), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let probe = csv_rows(&out.join("probe.csv"));
    let time = |ms: &str, route: &str| -> f64 {
        probe.iter().find(|r| r[0] == ms && r[2] == route).and_then(|r| r[3].parse().ok()).unwrap()
    };
    // microstate (2, 0): t = arctan(2 tan x) on the dynamical routes, 4x / (5 - 3 cos 2x) by Jacobi's theorem
    let x = PI / 4.0;
    let dynamical = (2.0 * x.tan()).atan();
    let jacobi = 4.0 * x / (5.0 - 3.0 * (2.0 * x).cos());
    assert!((time("2", "floyd") - jacobi).abs() <= 1e-4);
    assert!((jacobi - PI / 5.0).abs() < 1e-15);
    for route in ["quadrature", "fiqnl", "closed_form"] {
        assert!((time("2", route) - dynamical).abs() <= 1e-6, "{route}");
    }
    assert!((time("2", "quadrature") - time("2", "floyd")).abs() > 0.4);
    // microstate (1, 0) is classical: every route gives t = x at unit speed
    for route in ["quadrature", "fiqnl", "floyd", "closed_form", "classical"] {
        assert!((time("1", route) - x).abs() <= 1e-6, "{route}");
    }
}

#[test]
fn empty_microstate_list_is_a_valid_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "microstates.list = []\n");
    let out = dir.path().join("out");
    let o = qtraj(&["compare", "--format", "json"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["microstates"].as_array().unwrap().len(), 0);
    assert_eq!(report["success"], true);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = qtraj(&["compare", "--seedless"], &configs().join("harmonic.toml"), out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn exit_status_follows_the_residual_bounds() {
    let dir = TempDir::new().unwrap();
    let base = "grid.x_max = 3.0\ngrid.points = 3001\nmicrostates.list = [[2.0, 0.0]]\nspan.x_end = 2.5\n";
    let ok = write_config(&dir, base);
    assert_eq!(qtraj(&["trajectory"], &ok, &dir.path().join("ok")).status.code(), Some(0));
    let strict = dir.path().join("strict.toml");
    fs::write(&strict, format!("{base}bounds.conservation_rel = 1e-300\n")).unwrap();
    let o = qtraj(&["trajectory"], &strict, &dir.path().join("strict"));
    assert_eq!(o.status.code(), Some(1));
    let checks = fs::read_to_string(dir.path().join("strict").join("checks.csv")).unwrap();
    assert!(checks.contains(",fail"), "{checks}");
}

#[test]
fn trajectory_files_have_the_fixed_columns() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert!(qtraj(&["trajectory"], &configs().join("free.toml"), &out).status.success());
    let text = fs::read_to_string(out.join("ms2_fiqnl.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x,v,acc,jerk,conservation_residual,fiqnl_residual");
    assert!(text.lines().nth(1).unwrap().starts_with("0,0,0.5,"), "{}", text.lines().nth(1).unwrap());
    let classical = fs::read_to_string(out.join("ms2_classical.csv")).unwrap();
    assert!(classical.lines().nth(1).unwrap().ends_with(','), "classical rows leave the fiqnl residual empty");
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), fs::read_to_string(configs().join("free.toml")).unwrap());
    assert!(fs::read_to_string(out.join("plot.gp")).unwrap().contains("'ms2_fiqnl.csv' using 1:2"));
}

#[test]
fn limit_study_approaches_the_classical_slope() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert!(qtraj(&["limit"], &configs().join("limit.toml"), &out).status.success());
    for ms in ["ms1", "ms2"] {
        let rows = csv_rows(&out.join(format!("{ms}_limit.csv")));
        assert_eq!(rows.len(), 5);
        let ratios: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
        assert!((ratios[4] - 1.0).abs() <= 0.01, "{ms}: {ratios:?}");
        // the gap to the classical slope never grows
        assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs() + 1e-12), "{ratios:?}");
    }
}

#[test]
fn basis_dump_reports_the_wronskian() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = qtraj(&["basis"], &configs().join("harmonic.toml"), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("ms1_basis.csv"));
    assert_eq!(rows.len(), 3001);
    // slope-one data at x_min
    assert_eq!(&rows[0][1..], ["0", "1", "1", "0"]);
    let checks = fs::read_to_string(out.join("checks.csv")).unwrap();
    assert!(checks.contains("1,wronskian,-1,,pass"), "{checks}");
}

#[test]
fn json_report_keeps_declaration_order() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert!(qtraj(&["residuals", "--format", "json"], &configs().join("harmonic.toml"), &out).status.success());
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let keys = ["\"command\"", "\"seedless\"", "\"config\"", "\"microstates\"", "\"checks_failed\"", "\"failures\"", "\"success\""];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let indices: Vec<u64> = report["microstates"].as_array().unwrap().iter().map(|m| m["index"].as_u64().unwrap()).collect();
    assert_eq!(indices, [1, 2, 3]);
}
