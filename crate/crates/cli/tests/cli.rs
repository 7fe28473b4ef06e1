use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_perioscope"));
    c.env_remove("PERIOSCOPE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn synth_to(path: &Path, extra: &[&str]) {
    let mut args = vec![
        "synth", "--period", "24", "--length", "480", "--seed", "5", "--noise", "0.2", "--mr", "0.3", "--or", "0.05",
        "--shift", "2", "--out",
    ];
    let p = path.to_str().unwrap();
    args.push(p);
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn detect_on_a_generated_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    synth_to(&csv, &[]);
    let out = run(&["detect", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["periodic"], Value::Bool(true));
    assert_eq!(v["period"], Value::from(24));
}

#[test]
fn json_series_input_and_text_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    synth_to(&path, &["--format", "json"]);
    let out = run(&["detect", path.to_str().unwrap(), "--format", "text"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("periodic: true"), "{text}");
}

#[test]
fn detect_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    synth_to(&csv, &[]);
    let a = run(&["detect", csv.to_str().unwrap()]);
    let b = run(&["detect", csv.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let out_file = dir.path().join("r.json");
    let c = run(&["detect", csv.to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
    assert_eq!(code(&c), 0);
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out_file).unwrap(), a.stdout);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "value\n1\n2\nabc\n4\n5\n").unwrap();
    let out = run(&["detect", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 4"));

    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&run(&["detect", missing.to_str().unwrap()])), 2);

    let short = dir.path().join("short.csv");
    std::fs::write(&short, "1\n2\n3\n").unwrap();
    assert_eq!(code(&run(&["detect", short.to_str().unwrap()])), 2);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    synth_to(&csv, &[]);
    let p = csv.to_str().unwrap();
    assert_eq!(code(&run(&["detect", p, "--alpha", "1.5"])), 3);
    assert_eq!(code(&run(&["detect", p, "--peak-height", "0"])), 3);
    assert_eq!(code(&run(&["detect", p, "--rho", "-1"])), 3);
    assert_eq!(code(&run(&["detect", p, "--alpha", "abc"])), 3);
    assert_eq!(code(&run(&["bench", "--trials", "0"])), 3);
    assert_eq!(code(&run(&["bench", "--trials", "1", "--algorithms", "proposed,magic"])), 3);
    assert_eq!(code(&run(&["synth", "--period", "1"])), 3);
    assert_eq!(code(&run(&["synth", "--mr", "0.7"])), 3);
    assert_eq!(code(&run(&[])), 3);
    let out = bin().env("PERIOSCOPE_THREADS", "0").args(["synth"]).output().unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["bench", "--help"])), 0);
}

#[test]
fn show_config_prints_defaults() {
    let out = run(&["--show-config"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["detect"]["alpha"], Value::from(0.05));
    assert_eq!(v["detect"]["peak_height_frac"], Value::from(0.3));
    assert_eq!(v["bench_grid"].as_array().unwrap().len(), 9);

    let out = run(&["detect", "--show-config", "--alpha", "0.01", "--lambda1", "7"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["config"]["alpha"], Value::from(0.01));
    assert_eq!(v["config"]["trend_cfg"]["lambda1"], Value::from(7.0));
    assert_eq!(v["config"]["lambda1_per_sample"], Value::Null);
}

#[test]
fn batch_keeps_input_order_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    synth_to(&dir.path().join("b.csv"), &[]);
    synth_to(&dir.path().join("a.json"), &["--format", "json"]);
    std::fs::write(dir.path().join("c.csv"), "x\n1\ny\n").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let run_batch = |threads: &str| {
        bin()
            .env("PERIOSCOPE_THREADS", threads)
            .args(["batch", dir.path().to_str().unwrap()])
            .output()
            .unwrap()
    };
    let out = run_batch("1");
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let entries = v.as_array().unwrap();
    let names: Vec<&str> = entries.iter().map(|e| e["file"].as_str().unwrap()).collect();
    assert_eq!(names, ["a.json", "b.csv", "c.csv"]);
    assert_eq!(entries[0]["result"]["period"], Value::from(24));
    assert!(entries[2]["error"].is_string());
    assert_eq!(run_batch("3").stdout, out.stdout);
}

fn bench_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut a = vec!["bench", "--trials", "2", "--fast-mode", "--no-timing"];
    a.extend_from_slice(extra);
    a
}

#[test]
fn bench_default_grid_has_nine_cells() {
    let out = run(&bench_args(&["--format", "text"]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().nth(1).unwrap();
    assert_eq!(header.matches("MR=").count(), 9, "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("bench: 18/18"));
}

#[test]
fn bench_algorithm_subset_and_stability() {
    let args = bench_args(&["--algorithms", "proposed,lomb", "--mr", "0,0.3", "--or", "0.05"]);
    let a = run(&args);
    assert_eq!(code(&a), 0);
    let v = json(&a);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for (mr, or) in [(0.0, 0.05), (0.3, 0.05)] {
        let rows: Vec<&str> = cells
            .iter()
            .filter(|c| c["missing_ratio"] == Value::from(mr) && c["outlier_ratio"] == Value::from(or))
            .map(|c| c["algorithm"].as_str().unwrap())
            .collect();
        assert_eq!(rows, ["proposed", "lomb"]);
    }
    let b = bin().env("PERIOSCOPE_THREADS", "2").args(&args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}
