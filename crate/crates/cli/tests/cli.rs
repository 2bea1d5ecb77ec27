use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hardylab::main_with;
use serde_json::Value;

const MINIMAL: &str = "\
# bilinear smoke run
[operator]
symbol = sigma1_bilinear
[indices]
p = 1, 1
[grid]
half_width = 16
points = 256
[ensemble]
trials = 5
min_level = 1
max_level = 1
dilation = 1
";

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["hardylab"];
    full.extend_from_slice(args);
    let code = main_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_symbol_exit_codes() {
    let (code, out, _) = run(&["verify-symbol", "sigma1"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("(0,0,0)") && out.trim_end().ends_with("PASS"));

    let (code, out, _) = run(&["verify-symbol", "constant_one", "--require-plane-vanishing"]);
    assert_eq!(code, 1);
    assert!(out.trim_end().ends_with("FAIL"));

    assert_eq!(run(&["verify-symbol", "constant_one"]).0, 0);
    let (code, _, err) = run(&["verify-symbol", "nosuch"]);
    assert_eq!(code, 2);
    assert!(err.contains("nosuch"));
}

#[test]
fn verify_symbol_flags_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_config(dir.path(), "sym.txt", "# a symbol\nsigma1_bilinear\n");
    let (code, out, _) = run(&["verify-symbol", s(&f), "--orders", "1", "--shells", "-2:2"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("2^-2") && out.contains("2^2") && !out.contains("2^3"));
    assert!(!out.contains("(2,0)"));
    assert_eq!(run(&["verify-symbol", "sigma1", "--shells", "3"]).0, 2);
    assert_eq!(run(&["verify-symbol", "sigma1^2"]).0, 0);
}

#[test]
fn run_writes_outputs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.ini", MINIMAL);
    let out = dir.path().join("out");
    let (code, log, err) = run(&["run", s(&cfg), "--out", s(&out), "--jobs", "1"]);
    assert_eq!(code, 0, "{log}{err}");
    for f in ["manifest.json", "report.json", "summary.csv", "boundedness_ratio_histogram.dat"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(!out.join("FAILED").exists());

    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["manifest", "config", "trials", "summary", "pass"] {
        assert!(keys.contains(&k), "{k} missing from report");
    }
    assert_eq!(report["trials"].as_array().unwrap().len(), 5);

    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("trial_id,seed,lhs,rhs,ratio,flags\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 6);

    let hist = fs::read_to_string(out.join("boundedness_ratio_histogram.dat")).unwrap();
    assert!(hist.starts_with("# log10_ratio count\n"));
    let total: f64 = hist.lines().skip(1).map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert_eq!(total, 5.0);

    let rep = out.join("report.json");
    for k in 0..5 {
        let id = format!("boundedness-{k:04}");
        assert_eq!(run(&["replay", s(&rep), &id]).0, 0, "replay {id}");
    }
    assert_eq!(run(&["replay", s(&rep), "boundedness-0099"]).0, 2);
    assert_eq!(run(&["replay", s(&dir.path().join("missing.json")), "boundedness-0000"]).0, 2);
}

#[test]
fn replay_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.ini", MINIMAL);
    let out = dir.path().join("out");
    assert_eq!(run(&["run", s(&cfg), "--out", s(&out)]).0, 0);
    let mut report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let lhs = report["trials"][1]["lhs"].as_f64().unwrap();
    report["trials"][1]["lhs"] = Value::from(lhs * (1.0 + 1e-15) + f64::EPSILON * lhs);
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, serde_json::to_vec(&report).unwrap()).unwrap();
    let (code, log, _) = run(&["replay", s(&tampered), "boundedness-0001"]);
    assert_eq!(code, 1);
    assert!(log.contains("lhs"));
    assert_eq!(run(&["replay", s(&tampered), "boundedness-0000"]).0, 0);
}

#[test]
fn rerun_is_byte_identical_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.ini", MINIMAL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(run(&["run", s(&cfg), "--out", s(&a), "--jobs", "1"]).0, 0);
    assert_eq!(run(&["run", s(&cfg), "--out", s(&b), "--jobs", "3"]).0, 0);
    assert_eq!(run(&["run", s(&cfg), "--out", s(&c), "--seed", "7"]).0, 0);
    let read = |d: &Path| fs::read(d.join("summary.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.ini",
        "[operator]\nsymbol = sigma1_bilinear\nkind = product\n[indices]\np = inf, inf\n",
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&["run", s(&bad), "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("mapping property"), "{err}");
    assert!(!out.exists());

    let typo = write_config(dir.path(), "typo.ini", "[grid]\npoints = 100\n");
    assert_eq!(run(&["run", s(&typo), "--out", s(&out)]).0, 2);
    let unknown = write_config(dir.path(), "unknown.ini", "[grid]\nsize = 3\n");
    assert_eq!(run(&["run", s(&unknown), "--out", s(&out)]).0, 2);
    assert_eq!(run(&["run", s(&dir.path().join("none.ini")), "--out", s(&out)]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn nonempty_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.ini", MINIMAL);
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    assert_eq!(run(&["run", s(&cfg), "--out", s(&out)]).0, 2);
    assert_eq!(fs::read_to_string(out.join("keep.txt")).unwrap(), "x");
}

#[test]
fn failing_checks_leave_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    // cubes of side 1/8 span a single cell at M = 256, so every trial aborts
    let cfg = write_config(dir.path(), "tiny.ini", &MINIMAL.replace("min_level = 1", "min_level = -3"));
    let out = dir.path().join("out");
    let (code, log, _) = run(&["run", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 1);
    assert!(log.contains("FAIL"));
    assert!(out.join("FAILED").is_file());
    assert!(out.join("report.json").is_file());
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.contains("error"));
}

#[test]
fn decay_run_emits_slope_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "decay.ini",
        "[indices]\np = 1, inf\nN = 0\n[grid]\nhalf_width = 64\npoints = 2048\ncutoff = none\n\
         [ensemble]\ntrials = 1\n[checks]\nboundedness = false\ndecay = true\n",
    );
    let out = dir.path().join("out");
    let (code, log, err) = run(&["run", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 0, "{log}{err}");
    let data = fs::read_to_string(out.join("decay_slope.dat")).unwrap();
    assert!(data.starts_with("# log_distance log_abs_T\n"));
    assert_eq!(data.lines().count(), 6);
}

#[test]
fn binary_honours_the_jobs_variable_and_documents_the_csv() {
    let bin = env!("CARGO_BIN_EXE_hardylab");
    let help = Command::new(bin).args(["run", "--help"]).output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8(help.stdout).unwrap();
    assert!(text.contains("trial_id,seed,lhs,rhs,ratio,flags"));
    assert!(text.contains("HARDYLAB_JOBS"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.ini", MINIMAL);
    let out = dir.path().join("out");
    let run = Command::new(bin)
        .args(["run", s(&cfg), "--out", s(&out)])
        .env("HARDYLAB_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0));
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["jobs"], 2);

    let bad = Command::new(bin).args(["replay"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
