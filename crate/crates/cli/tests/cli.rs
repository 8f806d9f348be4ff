//! End-to-end checks of the command-line interface: scenario round-trips,
//! deterministic outputs, consistent sweep/run results, and failure exit
//! codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wgf2d"))
}

fn tmpdir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("wgf2d-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn show_roundtrips_through_config_file() {
    let out = bin()
        .args(["show", "--scenario", "kite", "--k1", "10.76", "--a-lambda", "15", "--set", "ppw=10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("geometry = kite"));

    let dir = tmpdir("roundtrip");
    let cfg = dir.join("case.cfg");
    fs::write(&cfg, &text).unwrap();
    let again = bin().args(["show", "--config"]).arg(&cfg).output().unwrap();
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn invalid_configuration_is_rejected_before_assembly() {
    // c ≥ 1 must fail fast with a nonzero exit code.
    let out = bin()
        .args(["solve", "--scenario", "kite", "--a-lambda", "10", "--set", "c=1.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("c ="), "stderr: {err}");

    let unknown = bin()
        .args(["solve", "--scenario", "kite", "--set", "bogus=3"])
        .output()
        .unwrap();
    assert!(!unknown.status.success());
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_bit_reproducible() {
    let d1 = tmpdir("repro1");
    let d2 = tmpdir("repro2");
    for d in [&d1, &d2] {
        let out = bin()
            .args(["solve", "--scenario", "kite", "--k1", "10.7", "--a-lambda", "8", "--out"])
            .arg(d)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let f1 = read_dir_bytes(&d1);
    let f2 = read_dir_bytes(&d2);
    assert_eq!(f1.len(), 3, "report, spectrum and schema expected");
    assert_eq!(f1, f2, "reruns must reproduce the CSV bundle byte for byte");
}

#[test]
fn singleton_sweep_matches_run_output() {
    let dir = tmpdir("sweep");
    let out = bin()
        .args([
            "sweep", "--scenario", "kite", "--a-lambda", "8", "--axis", "k1", "--values", "10.7",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep_csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let data_line = sweep_csv.lines().nth(1).unwrap();
    let eb_sweep: f64 = data_line.split(',').nth(1).unwrap().parse().unwrap();

    let dir2 = tmpdir("single");
    let out = bin()
        .args(["solve", "--scenario", "kite", "--k1", "10.7", "--a-lambda", "8", "--out"])
        .arg(&dir2)
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = fs::read_to_string(dir2.join("report.csv")).unwrap();
    let header: Vec<&str> = report.lines().next().unwrap().split(',').collect();
    let values: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == "error_eb").unwrap();
    let eb_run: f64 = values[idx].parse().unwrap();
    assert_eq!(eb_sweep, eb_run, "singleton sweep must equal the run output");
}

#[test]
fn diagnose_reports_radiation_and_qp() {
    let out = bin()
        .args(["diagnose", "--scenario", "kite", "--k1", "10.76", "--a-lambda", "10"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("qp mismatch"));
    assert!(text.contains("radiation n = +1"), "stdout: {text}");
}
