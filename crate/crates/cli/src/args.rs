use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perioscope::mspec::DeltaMode;
use perioscope::synthbench::{Algorithm, BenchConfig, MissingMode, SynthSpec, TrendSpec, Waveform};
use perioscope::{DetectConfig, Error, Result};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "perioscope", version, about = "Robust dominant period detection")]
pub struct Cli {
    /// Print every default configuration as JSON and exit.
    #[arg(long)]
    pub show_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect the dominant period of one series (CSV or JSON).
    Detect(DetectCmd),
    /// Run detection on every .csv/.json file in a directory.
    Batch(BatchCmd),
    /// Write a synthetic corrupted series.
    Synth(SynthCmd),
    /// Precision sweep over missing-ratio x outlier-ratio cells.
    Bench(BenchCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MissingArg {
    Single,
    Multi,
    Scattered,
}

#[derive(Debug, Clone, Args)]
pub struct DetectFlags {
    /// Significance level of Fisher's test.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed first-difference penalty; overrides the length-scaled default.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// First-difference penalty per sample (lambda1 = value * N).
    #[arg(long, conflicts_with = "lambda1")]
    pub lambda1_per_sample: Option<f64>,
    /// Second-difference penalty.
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Initial ADMM penalty.
    #[arg(long)]
    pub rho: Option<f64>,
    /// ADMM iteration budget.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// ACF peak threshold as a fraction of r_0.
    #[arg(long)]
    pub peak_height: Option<f64>,
    /// Fixed Huber threshold; adaptive when omitted.
    #[arg(long)]
    pub huber_delta: Option<f64>,
    /// IRLS iteration budget per frequency.
    #[arg(long)]
    pub irls_max_iter: Option<usize>,
    /// Plain FFT autocorrelation instead of the Huber periodogram.
    #[arg(long)]
    pub fast_mode: bool,
    /// Report round(N / k*) when the window check fails.
    #[arg(long)]
    pub fallback_to_bin: bool,
}

impl DetectFlags {
    pub fn config(&self) -> Result<DetectConfig> {
        let mut cfg = DetectConfig::default();
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.lambda1 {
            cfg.trend_cfg.lambda1 = v;
            cfg.lambda1_per_sample = None;
        }
        if let Some(v) = self.lambda1_per_sample {
            cfg.lambda1_per_sample = Some(v);
        }
        if let Some(v) = self.lambda2 {
            cfg.trend_cfg.lambda2 = v;
        }
        if let Some(v) = self.rho {
            cfg.trend_cfg.rho = v;
        }
        if let Some(v) = self.max_iter {
            cfg.trend_cfg.max_iter = v;
        }
        if let Some(v) = self.peak_height {
            cfg.peak_height_frac = v;
        }
        if let Some(v) = self.huber_delta {
            cfg.huber_cfg.delta_mode = DeltaMode::Fixed(v);
        }
        if let Some(v) = self.irls_max_iter {
            cfg.huber_cfg.irls_max_iter = v;
        }
        cfg.use_m_periodogram = !self.fast_mode;
        cfg.fallback_to_bin = self.fallback_to_bin;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputFlags {
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub show_config: bool,
}

#[derive(Debug, Args)]
pub struct DetectCmd {
    /// Series file: JSON ({"values", "mask"}) when it ends in .json, CSV otherwise.
    #[arg(required_unless_present = "show_config")]
    pub input: Option<PathBuf>,
    /// CSV column name or zero-based index.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub detect: DetectFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
pub struct BatchCmd {
    /// Directory scanned (not recursively) for .csv and .json files.
    #[arg(required_unless_present = "show_config")]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub detect: DetectFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
pub struct SynthCmd {
    #[arg(long, default_value_t = SynthSpec::default().period)]
    pub period: usize,
    #[arg(long, default_value_t = SynthSpec::default().n)]
    pub length: usize,
    /// Missing ratio.
    #[arg(long, default_value_t = 0.0)]
    pub mr: f64,
    /// Outlier ratio.
    #[arg(long = "or", default_value_t = 0.0)]
    pub outlier_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "sine")]
    pub waveform: String,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Slope of the trend.
    #[arg(long, default_value_t = 0.0)]
    pub slope: f64,
    /// Level shift added at --shift-at.
    #[arg(long, default_value_t = 0.0)]
    pub shift: f64,
    /// Index of the level shift; defaults to the middle of the series.
    #[arg(long)]
    pub shift_at: Option<usize>,
    /// Outlier amplitude in standard deviations of the clean series.
    #[arg(long, default_value_t = 5.0)]
    pub outlier_sigmas: f64,
    #[arg(long, value_enum, default_value = "single")]
    pub missing: MissingArg,
    /// Block count for --missing multi.
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: SeriesFormat,
    #[command(flatten)]
    pub output: OutputFlags,
}

impl SynthCmd {
    pub fn spec(&self) -> Result<SynthSpec> {
        let trend = if self.shift != 0.0 {
            let at = self.shift_at.unwrap_or(self.length / 2);
            TrendSpec::Piecewise {
                breaks: vec![at],
                slopes: vec![self.slope, self.slope],
                shifts: vec![self.shift],
            }
        } else if self.slope != 0.0 {
            TrendSpec::Linear { slope: self.slope }
        } else {
            TrendSpec::None
        };
        let spec = SynthSpec {
            n: self.length,
            period: self.period,
            waveform: self.waveform.parse::<Waveform>()?,
            amplitude: self.amplitude,
            phase: None,
            trend,
            noise_sigma: self.noise,
            outlier_ratio: self.outlier_ratio,
            outlier_amp_sigmas: self.outlier_sigmas,
            missing_ratio: self.mr,
            missing_mode: match self.missing {
                MissingArg::Single => MissingMode::SingleBlock,
                MissingArg::Multi => MissingMode::MultiBlock(self.blocks),
                MissingArg::Scattered => MissingMode::Scattered,
            },
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = BenchConfig::default().corpus.n)]
    pub length: usize,
    /// Base seed of the corpus.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Missing ratios, comma separated; the grid is mr x or.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.05, 0.30])]
    pub mr: Vec<f64>,
    /// Outlier ratios, comma separated.
    #[arg(long = "or", value_delimiter = ',', default_values_t = [0.0, 0.01, 0.05])]
    pub outlier_ratio: Vec<f64>,
    /// Fix every trial to this period instead of drawing it.
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long, default_value_t = BenchConfig::default().corpus.period_min)]
    pub period_min: usize,
    #[arg(long, default_value_t = BenchConfig::default().corpus.period_max)]
    pub period_max: usize,
    #[arg(long, default_value_t = BenchConfig::default().corpus.noise_sigma)]
    pub noise: f64,
    /// Comma separated subset of proposed, acf-med, fisher, lomb.
    #[arg(long, default_value = "proposed,acf-med,fisher,lomb")]
    pub algorithms: String,
    /// Leave runtimes out of the report so that reruns compare byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub detect: DetectFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

impl BenchCmd {
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.mr
            .iter()
            .flat_map(|&mr| self.outlier_ratio.iter().map(move |&or| (mr, or)))
            .collect()
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        Algorithm::parse_list(&self.algorithms)
    }

    pub fn config(&self) -> Result<BenchConfig> {
        let mut cfg = BenchConfig {
            detect: self.detect.config()?,
            ..BenchConfig::default()
        };
        cfg.corpus.n = self.length;
        cfg.corpus.base_seed = self.seed;
        cfg.corpus.noise_sigma = self.noise;
        let (lo, hi) = match self.period {
            Some(p) => (p, p),
            None => (self.period_min, self.period_max),
        };
        cfg.corpus.period_min = lo;
        cfg.corpus.period_max = hi;
        cfg.corpus.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        for &(mr, or) in &self.grid() {
            cfg.corpus.trial_spec(0, mr, or).validate()?;
        }
        Ok(cfg)
    }
}

/// Every default in one document, as printed by `--show-config`.
#[derive(Debug, Serialize)]
pub struct Defaults {
    pub detect: DetectConfig,
    pub synth: SynthSpec,
    pub bench: BenchConfig,
    pub bench_grid: Vec<(f64, f64)>,
    pub threads_env: &'static str,
}

impl Defaults {
    pub fn new() -> Self {
        Self {
            detect: DetectConfig::default(),
            synth: SynthSpec::default(),
            bench: BenchConfig::default(),
            bench_grid: perioscope::synthbench::default_grid(),
            threads_env: crate::THREADS_ENV,
        }
    }
}
