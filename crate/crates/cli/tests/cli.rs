use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_wentropy");

fn wentropy(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_CIRCLE: &str = r#"
scenario = "small-circle"
dt = 0.015625
t_start = 0.1
t_end = 0.5
checks = ["FIRST_DISSIPATION", "W_MONOTONE", "LI_YAU"]

[flow]
kind = "flat-circle"
length = 4.0

[grid]
size = 256

[initial]
kind = "profile"
constant = 1.0
cosines = [{ mode = 1, amplitude = 0.5 }]

[params]
window = [0.2, 0.5]
"#;

#[test]
fn list_shows_every_builtin() {
    let out = wentropy(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["gaussian-rigidity", "flat-circle", "ou-line", "cone-N", "weighted-sphere-static", "shrinking-sphere", "noncollapse-scan", "logsobolev-line"] {
        assert!(text.contains(name), "missing {name}");
    }
    assert!(text.contains("FISHER_BOUND"));
}

#[test]
fn describe_known_and_unknown() {
    let out = wentropy(&["describe", "FISHER_BOUND"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("inequality"));
    assert_eq!(wentropy(&["describe", "NOT_A_CHECK"]).status.code(), Some(2));
}

#[test]
fn missing_dt_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_CIRCLE.replace("dt = 0.015625\n", ""));
    let out_dir = dir.path().join("out");
    let out = wentropy(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn strict_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_CIRCLE.replace("t_end = 0.5", "t_end = 0.5\nsurprise = 1"));
    let out_dir = dir.path().join("out");
    let out = wentropy(&["run", "--config", &cfg, "--strict", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
    let lenient = wentropy(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(lenient.status.code(), Some(0));
}

#[test]
fn grid_size_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_CIRCLE.replace("size = 256", "size = 32"));
    assert_eq!(wentropy(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn passing_run_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CIRCLE);
    let out_dir = dir.path().join("out");
    let out = wentropy(&["run", "--config", &cfg, "--strict", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    for key in ["config", "checks", "series_files"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert!(report.get("timestamp_unix").is_none());
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    for c in checks {
        for key in ["id", "kind", "value", "tolerance", "pass", "anchor"] {
            assert!(c.get(key).is_some(), "check lacks {key}");
        }
    }

    let csv = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,H,I,H_NK,W_NK_direct,W_via_derivative,entropy_power,Y_a,nash");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    let mantissa = row[1].split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn failing_check_exits_one() {
    // A Gaussian bump in the polar angle is not smooth at the far pole.
    let body = r#"
scenario = "kinked-sphere"
dt = 0.0030679615757712823
t_start = 0.1
t_end = 1.0
checks = ["DYNAMIC_BOCHNER"]

[flow]
kind = "weighted-sphere"
n = 3

[grid]
size = 1024

[initial]
kind = "profile"
constant = 0.2
gaussians = [{ centre = 1.0, width = 0.3, weight = 1.0 }]

[params]
window = [0.25, 1.0]
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), body);
    let out = wentropy(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn numerical_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_CIRCLE.replace(r#"checks = ["FIRST_DISSIPATION", "W_MONOTONE", "LI_YAU"]"#, r#"checks = ["LOG_ENTROPY_DECAY"]"#).replace("[params]", "[params]\na = -1000.0");
    let cfg = write_config(dir.path(), &body);
    let out = wentropy(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn battery_requires_a_selection() {
    assert_eq!(wentropy(&["battery"]).status.code(), Some(2));
}
