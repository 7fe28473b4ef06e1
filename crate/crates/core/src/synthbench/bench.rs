//! Precision sweep over missing-ratio x outlier-ratio cells.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate, MissingMode, SynthSpec, TrendSpec, Waveform};
use crate::baselines::{acf_med, default_frequency_grid, fisher_baseline, lomb_scargle, LOMB_FALSE_ALARM};
use crate::detector::{detect_period, DetectConfig};
use crate::error::{Error, Result};
use crate::series::ObservedSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Proposed,
    AcfMed,
    Fisher,
    Lomb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Proposed, Algorithm::AcfMed, Algorithm::Fisher, Algorithm::Lomb];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::AcfMed => "acf-med",
            Algorithm::Fisher => "fisher",
            Algorithm::Lomb => "lomb",
        }
    }

    /// Parses a comma separated list such as `proposed,lomb`.
    pub fn parse_list(s: &str) -> Result<Vec<Algorithm>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let alg: Algorithm = part.parse()?;
            if !out.contains(&alg) {
                out.push(alg);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        Ok(out)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Algorithm::Proposed),
            "acf-med" | "acf_med" | "acfmed" => Ok(Algorithm::AcfMed),
            "fisher" => Ok(Algorithm::Fisher),
            "lomb" | "lomb-scargle" => Ok(Algorithm::Lomb),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// How trial series are drawn. Each trial index gets the same base series
/// (period, waveform, phase, trend, noise) in every cell; only the corruption
/// changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n: usize,
    /// Periods are drawn uniformly from `period_min..=period_max`.
    pub period_min: usize,
    pub period_max: usize,
    pub waveforms: Vec<Waveform>,
    pub amplitude: f64,
    pub noise_sigma: f64,
    /// Largest absolute slope of either trend segment.
    pub max_slope: f64,
    /// Magnitude range of the level shift at the single change point.
    pub shift_range: (f64, f64),
    pub outlier_amp_sigmas: f64,
    pub missing_mode: MissingMode,
    pub base_seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n: 480,
            period_min: 8,
            period_max: 48,
            waveforms: Waveform::ALL.to_vec(),
            amplitude: 1.0,
            noise_sigma: 0.2,
            max_slope: 0.005,
            shift_range: (1.0, 2.0),
            outlier_amp_sigmas: 5.0,
            missing_mode: MissingMode::SingleBlock,
            base_seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.period_min < 2 || self.period_min > self.period_max || self.period_max * 4 > self.n {
            return Err(Error::Config(format!(
                "period range {}..={} must satisfy 2 <= min <= max <= n/4 (n = {})",
                self.period_min, self.period_max, self.n
            )));
        }
        if self.waveforms.is_empty() {
            return Err(Error::Config("at least one waveform is required".into()));
        }
        let (lo, hi) = self.shift_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config("shift range must satisfy 0 <= lo <= hi".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.max_slope >= 0.0 && self.amplitude > 0.0) {
            return Err(Error::Config("noise, slope and amplitude must be non-negative".into()));
        }
        Ok(())
    }

    /// Spec for trial `trial` in cell `(mr, or)`.
    pub fn trial_spec(&self, trial: u64, mr: f64, or: f64) -> SynthSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(trial);
        let period = rng.random_range(self.period_min..=self.period_max);
        let waveform = self.waveforms[rng.random_range(0..self.waveforms.len())];
        let brk = rng.random_range(self.n / 4..=3 * self.n / 4);
        let slopes = vec![
            rng.random_range(-1.0..=1.0) * self.max_slope,
            rng.random_range(-1.0..=1.0) * self.max_slope,
        ];
        let (lo, hi) = self.shift_range;
        let mag = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let shift = if rng.random_bool(0.5) { mag } else { -mag };
        SynthSpec {
            n: self.n,
            period,
            waveform,
            amplitude: self.amplitude,
            phase: None,
            trend: TrendSpec::Piecewise {
                breaks: vec![brk],
                slopes,
                shifts: vec![shift],
            },
            noise_sigma: self.noise_sigma,
            outlier_ratio: or,
            outlier_amp_sigmas: self.outlier_amp_sigmas,
            missing_ratio: mr,
            missing_mode: self.missing_mode,
            seed: rng.random(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub corpus: CorpusConfig,
    /// Used by the proposed method; `alpha` and `peak_height_frac` also drive
    /// the baselines.
    pub detect: DetectConfig,
    pub lomb_oversample: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusConfig::default(),
            detect: DetectConfig::default(),
            lomb_oversample: 4,
        }
    }
}

/// The nine (missing ratio, outlier ratio) cells of the standard table.
pub fn default_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(9);
    for mr in [0.0, 0.05, 0.30] {
        for or in [0.0, 0.01, 0.05] {
            out.push((mr, or));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub missing_ratio: f64,
    pub outlier_ratio: f64,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub correct: usize,
    pub correct_within_one: usize,
    /// Exact integer period matches over trials.
    pub precision: f64,
    /// Matches within one sample; reported only.
    pub precision_within_one: f64,
    pub errors: usize,
    pub mean_runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub trials: usize,
    pub grid: Vec<(f64, f64)>,
    pub algorithms: Vec<Algorithm>,
    pub config: BenchConfig,
    pub lomb_false_alarm: String,
    pub cells: Vec<CellResult>,
}

impl PrecisionReport {
    pub fn cell(&self, mr: f64, or: f64, alg: Algorithm) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.algorithm == alg && c.missing_ratio == mr && c.outlier_ratio == or)
    }

    /// Drops wall-clock timings so that reports from identical runs compare
    /// byte for byte.
    pub fn without_timing(mut self) -> Self {
        for c in &mut self.cells {
            c.mean_runtime_ms = None;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Algorithms as rows, cells as columns; exact precision, then the
    /// within-one variant and runtimes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self
            .grid
            .iter()
            .map(|&(mr, or)| format!("MR={mr} OR={or}"))
            .collect();
        let width = header.iter().map(String::len).max().unwrap_or(0).max(8);
        let mut table = |title: &str, value: &dyn Fn(&CellResult) -> String| {
            let _ = writeln!(out, "{title} (trials = {})", self.trials);
            let _ = write!(out, "{:<10}", "algorithm");
            for h in &header {
                let _ = write!(out, "   {h:>width$}");
            }
            out.push('\n');
            for &alg in &self.algorithms {
                let _ = write!(out, "{:<10}", alg.name());
                for &(mr, or) in &self.grid {
                    let v = self.cell(mr, or, alg).map(value).unwrap_or_else(|| "-".into());
                    let _ = write!(out, "   {v:>width$}");
                }
                out.push('\n');
            }
            out.push('\n');
        };
        table("precision", &|c| format!("{:.3}", c.precision));
        table("precision within +-1", &|c| format!("{:.3}", c.precision_within_one));
        if self.cells.iter().any(|c| c.mean_runtime_ms.is_some()) {
            table("mean runtime [ms]", &|c| {
                c.mean_runtime_ms.map_or_else(|| "-".into(), |ms| format!("{ms:.2}"))
            });
        }
        out
    }
}

/// Period estimate of one algorithm, rounded to the nearest integer; `None`
/// when the algorithm reports no period.
pub fn estimate_period(alg: Algorithm, series: &ObservedSeries<f64>, cfg: &BenchConfig) -> Result<Option<u64>> {
    let alpha = cfg.detect.alpha;
    let est = match alg {
        Algorithm::Proposed => return Ok(detect_period(series, &cfg.detect)?.period),
        Algorithm::AcfMed => acf_med(series, cfg.detect.peak_height_frac)?,
        Algorithm::Fisher => fisher_baseline(series, alpha)?,
        Algorithm::Lomb => lomb_scargle(series, &default_frequency_grid(series.len(), cfg.lomb_oversample), alpha)?,
    };
    Ok(est.period.filter(|p| p.is_finite() && *p >= 0.5).map(|p| p.round() as u64))
}

struct Outcome {
    correct: bool,
    within_one: bool,
    error: bool,
    seconds: f64,
}

pub fn run_benchmark(
    grid: &[(f64, f64)],
    trials: usize,
    algorithms: &[Algorithm],
    cfg: &BenchConfig,
) -> Result<PrecisionReport> {
    run_benchmark_with_progress(grid, trials, algorithms, cfg, |_, _| {})
}

/// As [`run_benchmark`], calling `progress(done, total)` after each trial.
/// Results are aggregated in trial order, so the report does not depend on
/// the thread count.
pub fn run_benchmark_with_progress(
    grid: &[(f64, f64)],
    trials: usize,
    algorithms: &[Algorithm],
    cfg: &BenchConfig,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<PrecisionReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if grid.is_empty() || algorithms.is_empty() {
        return Err(Error::Config("grid and algorithm list must be non-empty".into()));
    }
    cfg.corpus.validate()?;
    cfg.detect.validate()?;
    if cfg.lomb_oversample == 0 {
        return Err(Error::Config("lomb oversampling must be at least 1".into()));
    }
    for &(mr, or) in grid {
        cfg.corpus.trial_spec(0, mr, or).validate()?;
    }

    let total = grid.len() * trials;
    let done = std::sync::atomic::AtomicUsize::new(0);
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|c| (0..trials as u64).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<Vec<Outcome>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (mr, or) = grid[c];
            let spec = cfg.corpus.trial_spec(t, mr, or);
            let out = match generate(&spec) {
                Ok((series, truth)) => algorithms
                    .iter()
                    .map(|&alg| {
                        let start = Instant::now();
                        let est = estimate_period(alg, &series, cfg);
                        let seconds = start.elapsed().as_secs_f64();
                        let p = est.as_ref().ok().copied().flatten();
                        Outcome {
                            correct: p == Some(truth as u64),
                            within_one: p.is_some_and(|p| p.abs_diff(truth as u64) <= 1),
                            error: est.is_err(),
                            seconds,
                        }
                    })
                    .collect(),
                Err(_) => algorithms
                    .iter()
                    .map(|_| Outcome {
                        correct: false,
                        within_one: false,
                        error: true,
                        seconds: 0.0,
                    })
                    .collect(),
            };
            let d = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(d, total);
            out
        })
        .collect();

    let mut cells = Vec::with_capacity(grid.len() * algorithms.len());
    for (c, &(mr, or)) in grid.iter().enumerate() {
        let rows = &outcomes[c * trials..(c + 1) * trials];
        for (a, &alg) in algorithms.iter().enumerate() {
            let (mut correct, mut within, mut errors, mut secs) = (0, 0, 0, 0.0);
            for row in rows {
                let o = &row[a];
                correct += o.correct as usize;
                within += o.within_one as usize;
                errors += o.error as usize;
                secs += o.seconds;
            }
            cells.push(CellResult {
                missing_ratio: mr,
                outlier_ratio: or,
                algorithm: alg,
                trials,
                correct,
                correct_within_one: within,
                precision: correct as f64 / trials as f64,
                precision_within_one: within as f64 / trials as f64,
                errors,
                mean_runtime_ms: Some(1e3 * secs / trials as f64),
            });
        }
    }
    Ok(PrecisionReport {
        trials,
        grid: grid.to_vec(),
        algorithms: algorithms.to_vec(),
        config: cfg.clone(),
        lomb_false_alarm: LOMB_FALSE_ALARM.into(),
        cells,
    })
}
