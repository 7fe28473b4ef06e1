use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use perioscope::series::{parse_csv, ColumnSelector, ObservedSeries};
use perioscope::synthbench::{generate, run_benchmark_with_progress};
use perioscope::{detect_period, DetectConfig, DetectionResult, Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{BatchCmd, BenchCmd, DetectCmd, OutputFlags, ReportFormat, SeriesFormat, SynthCmd};

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
pub fn stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(output: &OutputFlags, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| with_path(e, path)),
        None => stdout(text),
    }
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn column(arg: &Option<String>) -> Option<ColumnSelector> {
    arg.as_deref().map(|c| c.parse().unwrap_or_else(|e| match e {}))
}

pub fn load_series(path: &Path, column: Option<&ColumnSelector>) -> Result<ObservedSeries<f64>> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let text = std::fs::read_to_string(path).map_err(|e| with_path(e, path))?;
    if is_json {
        ObservedSeries::from_json(&text)
    } else {
        parse_csv(&text, column)
    }
}

fn detection_text(r: &DetectionResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "periodic: {}", r.periodic);
    match r.period {
        Some(p) => {
            let _ = writeln!(out, "period: {p}");
        }
        None => out.push_str("period: -\n"),
    }
    let _ = writeln!(out, "g: {:.6}", r.g_stat);
    let _ = writeln!(out, "p_value: {:.3e}", r.p_value);
    let _ = writeln!(out, "k_star: {}", r.k_star);
    if let Some(d) = r.median_peak_distance {
        let _ = writeln!(out, "peak_period: {d:.3}");
    }
    if let Some(w) = r.rk_window {
        let _ = writeln!(out, "window: [{:.3}, {:.3}]", w.low, w.high);
    }
    if let Some(why) = &r.diagnostics.rejection {
        let _ = writeln!(out, "rejected: {why}");
    }
    out
}

#[derive(Serialize)]
struct Effective<'a, T: Serialize> {
    command: &'a str,
    config: T,
}

fn show<T: Serialize>(command: &str, config: T) -> Result<()> {
    stdout(&to_json(&Effective { command, config })?)
}

pub fn detect(cmd: &DetectCmd) -> Result<()> {
    let cfg = cmd.detect.config()?;
    if cmd.output.show_config {
        return show("detect", cfg);
    }
    let path = cmd.input.as_deref().expect("clap requires input");
    let series = load_series(path, column(&cmd.column).as_ref())?;
    let result = detect_period(&series, &cfg)?;
    let text = match cmd.format {
        ReportFormat::Json => to_json(&result)?,
        ReportFormat::Text => detection_text(&result),
    };
    emit(&cmd.output, &text)
}

#[derive(Serialize)]
struct BatchEntry {
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<DetectionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn batch_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("csv") || e.eq_ignore_ascii_case("json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn run_one(path: &Path, column: Option<&ColumnSelector>, cfg: &DetectConfig) -> BatchEntry {
    let file = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    match load_series(path, column).and_then(|s| detect_period(&s, cfg)) {
        Ok(r) => BatchEntry {
            file,
            result: Some(r),
            error: None,
        },
        Err(e) => BatchEntry {
            file,
            result: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn batch(cmd: &BatchCmd) -> Result<()> {
    let cfg = cmd.detect.config()?;
    if cmd.output.show_config {
        return show("batch", cfg);
    }
    let dir = cmd.dir.as_deref().expect("clap requires dir");
    let files = batch_files(dir).map_err(|e| match e {
        Error::Io(io) => with_path(io, dir),
        other => other,
    })?;
    let column = column(&cmd.column);
    let entries: Vec<BatchEntry> = files
        .par_iter()
        .map(|p| run_one(p, column.as_ref(), &cfg))
        .collect();
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    if failed > 0 {
        eprintln!("batch: {failed} of {} files failed", entries.len());
    }
    let text = match cmd.format {
        ReportFormat::Json => to_json(&entries)?,
        ReportFormat::Text => {
            let mut out = String::new();
            for e in &entries {
                let status = match (&e.result, &e.error) {
                    (Some(r), _) => r.period.map_or_else(|| "non-periodic".to_string(), |p| format!("period {p}")),
                    (None, Some(err)) => format!("error: {err}"),
                    (None, None) => unreachable!(),
                };
                let _ = writeln!(out, "{}\t{status}", e.file);
            }
            out
        }
    };
    emit(&cmd.output, &text)
}

pub fn synth(cmd: &SynthCmd) -> Result<()> {
    let spec = cmd.spec()?;
    if cmd.output.show_config {
        return show("synth", spec);
    }
    let (series, _) = generate(&spec)?;
    let text = match cmd.format {
        SeriesFormat::Csv => series.to_csv(),
        SeriesFormat::Json => {
            let mut s = series.to_json()?;
            s.push('\n');
            s
        }
    };
    emit(&cmd.output, &text)
}

pub fn bench(cmd: &BenchCmd) -> Result<()> {
    let cfg = cmd.config()?;
    let algorithms = cmd.algorithms()?;
    let grid = cmd.grid();
    if cmd.output.show_config {
        #[derive(Serialize)]
        struct Bench<'a> {
            trials: usize,
            grid: &'a [(f64, f64)],
            algorithms: &'a [perioscope::synthbench::Algorithm],
            bench: &'a perioscope::synthbench::BenchConfig,
        }
        return show(
            "bench",
            Bench {
                trials: cmd.trials,
                grid: &grid,
                algorithms: &algorithms,
                bench: &cfg,
            },
        );
    }
    let step = (grid.len() * cmd.trials / 20).max(1);
    let report = run_benchmark_with_progress(&grid, cmd.trials, &algorithms, &cfg, |done, total| {
        if done % step == 0 || done == total {
            eprintln!("bench: {done}/{total} trials");
        }
    })?;
    let report = if cmd.no_timing {
        report.without_timing()
    } else {
        report
    };
    let text = match cmd.format {
        ReportFormat::Json => {
            let mut s = report.to_json()?;
            s.push('\n');
            s
        }
        ReportFormat::Text => report.to_text(),
    };
    emit(&cmd.output, &text)
}

/// Exit status for a library error: 2 for bad input data, 3 for bad configuration.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}
