use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_semiwell");

const MINIMAL: &str = "\
[potential]
V = (x-1)^2
L = 2

[schedule]
eps = 0.1, 0.05, 0.025, 0.0125

[regime]
target = ground
";

fn semiwell(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("SEMIWELL_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("SEMIWELL_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn csv_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn minimal_config_writes_manifest_and_five_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("out");
    let o = semiwell(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{o:?}");
    assert_eq!(csv_names(&out), ["agmon.csv", "bounds.csv", "eigen.csv", "measure.csv", "spectrum.csv"]);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 5);
    for f in outputs {
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
    assert!(manifest["config"].as_str().unwrap().contains("V = (x-1)^2"));
}

#[test]
fn same_config_gives_identical_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let digests = |name: &str| {
        let out = tmp.path().join(name);
        semiwell(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
        manifest["outputs"].clone()
    };
    assert_eq!(digests("a"), digests("b"));
}

#[test]
fn grid_rule_violation_names_eps() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}\n[grid]\npolicy = fixed\nn = 400\n");
    let cfg = write_config(tmp.path(), &text);
    let o = semiwell(&["run", "--config", &cfg, "--out", tmp.path().join("out").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    let line: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(line["error"], "ConfigError");
    assert!(line["message"].as_str().unwrap().contains("eps = 0.05"), "{stderr}");
}

#[test]
fn parse_error_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[potential]\nV = (x-1)^2\nL = 2\nwidth = 3\n");
    let o = semiwell(&["run", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("line 4"), "{stderr}");
}

#[test]
fn environment_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("from-env");
    let flag_dir = tmp.path().join("from-flag");
    let o = semiwell(
        &["spectrum", "--eps", "0.05", "--count", "4", "--out", flag_dir.to_str().unwrap()],
        Some(&env_dir),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(env_dir.join("spectrum.csv").exists());
    assert!(!flag_dir.exists());
}

#[test]
fn spectrum_flags_write_harmonic_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let o = semiwell(&["spectrum", "--eps", "0.05", "--count", "3", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,E,residual,dpsi0,dpsiL");
    for (k, line) in lines.enumerate() {
        let e: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let expected = 0.05 * (2 * k + 1) as f64;
        assert!((e - expected).abs() < 1e-3 * expected, "{line}");
    }
}

#[test]
fn agmon_subcommand_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let o = semiwell(&["agmon", "--energy", "0", "--points", "64", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = fs::read_to_string(tmp.path().join("agmon.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().next().unwrap(), "x,E,d_A");
    assert_eq!(rows.len(), 64);
    for r in rows {
        assert!((r[2] - (r[0] - 1.0).powi(2) / 2.0).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn bounds_rejects_window_and_boundary_together() {
    let o = semiwell(&["bounds", "--window", "1.8,2", "--boundary", "0"], None);
    assert!(!o.status.success());
}
