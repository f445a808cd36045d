use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn dilab(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dilab"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("DILAB_OUT_DIR")
        .output()
        .expect("spawn dilab");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().expect("exit code"), text)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn csv_header(dir: &Path) -> Vec<String> {
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    csv.lines().next().unwrap().split(',').map(String::from).collect()
}

fn has_witness(r: &Value) -> bool {
    r["records"]
        .as_array()
        .unwrap()
        .iter()
        .any(|rec| !rec["witness"].is_null())
}

#[test]
fn euclidean_audit_passes() {
    let d = TempDir::new().unwrap();
    let (code, _) = dilab(d.path(), &["audit", "--structure", "euclidean:2"]);
    assert_eq!(code, 0);
    let r = report(d.path());
    assert_eq!(r["status"], "pass");
    assert_eq!(r["command"], "audit");
    assert!(!r["records"].as_array().unwrap().is_empty());
}

#[test]
fn rotating_segment_is_not_derivable() {
    let d = TempDir::new().unwrap();
    let (code, _) = dilab(
        d.path(),
        &[
            "curve",
            "--structure",
            "rotating:0.5",
            "--curve",
            "segment",
            "--op",
            "rn",
        ],
    );
    assert_eq!(code, 1);
    assert!(has_witness(&report(d.path())));
}

#[test]
fn failing_reports_carry_witnesses() {
    let cases: &[&[&str]] = &[
        &[
            "diff",
            "--structure",
            "euclidean:2",
            "--op",
            "equiv",
            "--other",
            "rotating:0.3",
            "--samples",
            "10",
        ],
        &[
            "lookdown",
            "--pair",
            "euclidean-heisenberg",
            "--op",
            "audit",
            "--samples",
            "5",
        ],
        &[
            "curve",
            "--structure",
            "euclidean:2",
            "--curve",
            "corner",
            "--op",
            "derive",
            "--t",
            "0",
        ],
        &["audit", "--structure", "broken"],
    ];
    for args in cases {
        let d = TempDir::new().unwrap();
        let (code, out) = dilab(d.path(), args);
        assert_eq!(code, 1, "{args:?}: {out}");
        assert!(has_witness(&report(d.path())), "{args:?}");
    }
}

#[test]
fn unknown_names_exit_two() {
    let d = TempDir::new().unwrap();
    for args in [
        &["audit", "--structure", "nope"][..],
        &["curve", "--curve", "spiral", "--op", "var"],
        &["diff", "--map", "warp"],
        &["lookdown", "--pair", "a-b"],
    ] {
        let (code, out) = dilab(d.path(), args);
        assert_eq!(code, 2, "{args:?}: {out}");
        assert!(out.contains("error"), "{out}");
    }
    let (code, _) = dilab(d.path(), &["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _) = dilab(d.path(), &["curve", "--op", "wiggle"]);
    assert_eq!(code, 2);
}

#[test]
fn unwritable_output_exits_two() {
    let d = TempDir::new().unwrap();
    let blocker = d.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let (code, _) = dilab(&blocker, &["audit", "--structure", "euclidean:2"]);
    assert_eq!(code, 2);
}

#[test]
fn tangent_sum_csv_schema() {
    let d = TempDir::new().unwrap();
    let (code, _) = dilab(
        d.path(),
        &["tangent", "--structure", "heisenberg", "--op", "sum", "--samples", "3"],
    );
    assert_eq!(code, 0);
    let h = csv_header(d.path());
    assert_eq!(
        h,
        [
            "x1", "x2", "x3", "u1", "u2", "u3", "v1", "v2", "v3", "eps", "value1", "value2", "value3", "residual",
            "status"
        ]
    );
    let csv = std::fs::read_to_string(d.path().join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() >= 3);
    let cell = rows[0].split(',').next().unwrap();
    let mantissa = cell.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn gap_trace_schema() {
    let d = TempDir::new().unwrap();
    let (_, out) = dilab(
        d.path(),
        &["lookdown", "--op", "gap", "--z", "0.5,0,0.25", "--w", "0,1,0"],
    );
    assert_eq!(csv_header(d.path()), ["eps", "gap", "vertical"], "{out}");
}

#[test]
fn empty_check_list_is_a_valid_report() {
    let d = TempDir::new().unwrap();
    let (code, _) = dilab(d.path(), &["lookdown", "--op", "qeps", "--z", "1,0,1"]);
    assert_eq!(code, 0);
    let r = report(d.path());
    assert_eq!(r["records"].as_array().unwrap().len(), 0);
    assert_eq!(r["status"], "pass");
}

#[test]
fn config_file_and_flags() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("exp.toml");
    std::fs::write(&cfg, "structure = \"heisenberg\"\nsamples = 7\nout_name = \"run\"\n").unwrap();
    let (code, out) = dilab(
        d.path(),
        &["audit", "--config", cfg.to_str().unwrap(), "--samples", "4"],
    );
    assert_eq!(code, 0, "{out}");
    let r: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(r["config"]["structure"], "heisenberg");
    assert_eq!(r["config"]["samples"], 4);

    std::fs::write(&cfg, "structre = \"heisenberg\"\n").unwrap();
    let (code, _) = dilab(d.path(), &["audit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn output_directory_from_environment() {
    let d = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_dilab"))
        .args(["audit", "--structure", "euclidean:1", "--out-name", "env"])
        .env("DILAB_OUT_DIR", d.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(d.path().join("env.json").exists());
    assert!(d.path().join("env.csv").exists());
}

#[test]
fn suite_is_deterministic() {
    let d = TempDir::new().unwrap();
    let runs: Vec<Value> = (0..2)
        .map(|_| {
            let (code, out) = dilab(d.path(), &["suite", "--jobs", "2"]);
            assert!(code == 0 || code == 1, "{out}");
            let mut r = report(d.path());
            r["wall_clock_secs"] = Value::from(0.0);
            r
        })
        .collect();
    assert_eq!(
        serde_json::to_string(&runs[0]).unwrap(),
        serde_json::to_string(&runs[1]).unwrap()
    );
    assert!(runs[0]["records"].as_array().unwrap().len() >= 12);
}
