//! Seeded synthetic series: trend + periodic waveform + Gaussian noise,
//! corrupted by outliers and missing blocks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ObservedSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Sine,
    Square,
    Triangle,
}

impl Waveform {
    pub const ALL: [Waveform; 3] = [Waveform::Sine, Waveform::Square, Waveform::Triangle];

    /// Unit-amplitude waveform at phase `u` in cycles.
    pub fn at(self, u: f64) -> f64 {
        let u = u.rem_euclid(1.0);
        match self {
            Waveform::Sine => (2.0 * std::f64::consts::PI * u).sin(),
            Waveform::Square => {
                if u < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Waveform::Triangle => 1.0 - 4.0 * (u - 0.5).abs(),
        }
    }
}

impl std::str::FromStr for Waveform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sine" => Ok(Waveform::Sine),
            "square" => Ok(Waveform::Square),
            "triangle" => Ok(Waveform::Triangle),
            other => Err(Error::Config(format!("unknown waveform {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TrendSpec {
    None,
    Linear {
        slope: f64,
    },
    /// Segment `i` runs from `breaks[i - 1]` (or 0) with slope `slopes[i]`;
    /// at each break the level also jumps by `shifts[i]`.
    Piecewise {
        breaks: Vec<usize>,
        slopes: Vec<f64>,
        shifts: Vec<f64>,
    },
}

impl TrendSpec {
    pub fn values(&self, n: usize) -> Vec<f64> {
        match self {
            TrendSpec::None => vec![0.0; n],
            TrendSpec::Linear { slope } => (0..n).map(|t| slope * t as f64).collect(),
            TrendSpec::Piecewise {
                breaks,
                slopes,
                shifts,
            } => {
                let mut out = Vec::with_capacity(n);
                let mut level = 0.0;
                let mut seg = 0;
                for t in 0..n {
                    if seg < breaks.len() && t == breaks[seg] {
                        level += shifts[seg];
                        seg += 1;
                    }
                    if t > 0 {
                        level += slopes[seg];
                    }
                    out.push(level);
                }
                out
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let TrendSpec::Piecewise {
            breaks,
            slopes,
            shifts,
        } = self
        {
            if slopes.len() != breaks.len() + 1 || shifts.len() != breaks.len() {
                return Err(Error::Config(
                    "piecewise trend needs one more slope than breaks and one shift per break".into(),
                ));
            }
            if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|&b| b == 0 || b >= n) {
                return Err(Error::Config("piecewise breaks must be increasing and inside the series".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "blocks")]
pub enum MissingMode {
    SingleBlock,
    MultiBlock(usize),
    Scattered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub period: usize,
    pub waveform: Waveform,
    pub amplitude: f64,
    /// Phase offset in cycles; `None` draws it from the seed.
    pub phase: Option<f64>,
    pub trend: TrendSpec,
    pub noise_sigma: f64,
    pub outlier_ratio: f64,
    pub outlier_amp_sigmas: f64,
    pub missing_ratio: f64,
    pub missing_mode: MissingMode,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 480,
            period: 24,
            waveform: Waveform::Sine,
            amplitude: 1.0,
            phase: None,
            trend: TrendSpec::None,
            noise_sigma: 0.0,
            outlier_ratio: 0.0,
            outlier_amp_sigmas: 5.0,
            missing_ratio: 0.0,
            missing_mode: MissingMode::SingleBlock,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn missing_count(&self) -> usize {
        (self.missing_ratio * self.n as f64).round() as usize
    }

    pub fn outlier_count(&self) -> usize {
        (self.outlier_ratio * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 2 || self.period > self.n / 4 {
            return Err(Error::Config(format!(
                "period must lie in 2..={} (at least four cycles), got {}",
                self.n / 4,
                self.period
            )));
        }
        for (name, v) in [("outlier ratio", self.outlier_ratio), ("missing ratio", self.missing_ratio)] {
            if !(0.0..0.5).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 0.5), got {v}")));
            }
        }
        for (name, v) in [
            ("noise sigma", self.noise_sigma),
            ("outlier amplitude", self.outlier_amp_sigmas),
            ("amplitude", self.amplitude),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        self.trend.validate(self.n)?;
        let missing = self.missing_count();
        let blocks = match self.missing_mode {
            MissingMode::SingleBlock => 1,
            MissingMode::MultiBlock(b) => b,
            MissingMode::Scattered => 0,
        };
        if blocks > 0 && missing > 0 && missing + blocks + 1 > self.n {
            return Err(Error::Infeasible(format!(
                "{missing} missing samples in {blocks} interior block(s) do not fit in {} samples",
                self.n
            )));
        }
        if matches!(self.missing_mode, MissingMode::MultiBlock(0)) {
            return Err(Error::Config("multi-block missingness needs at least one block".into()));
        }
        Ok(())
    }
}

/// Generated series together with everything needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub series: ObservedSeries<f64>,
    pub period: usize,
    pub clean: Vec<f64>,
    pub trend: Vec<f64>,
    pub outliers: Vec<usize>,
}

/// Splits `extra` observed samples uniformly at random over `slots` gaps.
fn random_composition(rng: &mut ChaCha8Rng, extra: usize, slots: usize) -> Vec<usize> {
    // stars and bars: choose `slots - 1` bar positions among `extra + slots - 1`
    let mut bars: Vec<usize> = sample(rng, extra + slots - 1, slots - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(slots);
    let mut prev = 0;
    for (i, &b) in bars.iter().enumerate() {
        out.push(b - prev - if i == 0 { 0 } else { 1 });
        prev = b;
    }
    let used: usize = out.iter().sum();
    out.push(extra - used);
    out
}

fn missing_mask(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> Vec<bool> {
    let n = spec.n;
    let missing = spec.missing_count();
    let mut mask = vec![true; n];
    if missing == 0 {
        return mask;
    }
    match spec.missing_mode {
        MissingMode::SingleBlock => {
            let start = rng.random_range(1..=n - 1 - missing);
            mask[start..start + missing].fill(false);
        }
        MissingMode::MultiBlock(blocks) => {
            let sizes: Vec<usize> = (0..blocks).map(|i| missing / blocks + usize::from(i < missing % blocks)).collect();
            // every gap between and around the blocks keeps at least one sample
            let gaps = random_composition(rng, n - missing - (blocks + 1), blocks + 1);
            let mut t = 0;
            for (i, &len) in sizes.iter().enumerate() {
                t += gaps[i] + 1;
                mask[t..t + len].fill(false);
                t += len;
            }
        }
        MissingMode::Scattered => {
            for t in sample(rng, n, missing) {
                mask[t] = false;
            }
        }
    }
    mask
}

fn population_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Builds the series described by `spec`. Deterministic in `spec.seed`.
///
/// Draw order: phase, noise, missing positions, outlier positions and signs.
/// Corruption draws come last, so specs differing only in corruption share the
/// same clean series.
pub fn generate_detailed(spec: &SynthSpec) -> Result<SynthSample> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase = match spec.phase {
        Some(p) => p,
        None => rng.random::<f64>(),
    };
    let trend = spec.trend.values(n);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let clean: Vec<f64> = (0..n)
        .map(|t| {
            let u = t as f64 / spec.period as f64 + phase;
            trend[t] + spec.amplitude * spec.waveform.at(u) + noise.sample(&mut rng)
        })
        .collect();

    let mut corruption = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mask = missing_mask(&mut corruption, spec);
    let observed: Vec<usize> = (0..n).filter(|&t| mask[t]).collect();
    let count = spec.outlier_count().min(observed.len());
    let amp = spec.outlier_amp_sigmas * population_sd(&clean);
    let mut values = clean.clone();
    let mut outliers: Vec<usize> = sample(&mut corruption, observed.len(), count)
        .into_iter()
        .map(|i| observed[i])
        .collect();
    outliers.sort_unstable();
    for &t in &outliers {
        let sign = if corruption.random_bool(0.5) { 1.0 } else { -1.0 };
        values[t] += sign * amp;
    }
    let series = ObservedSeries::new(values, mask)?;
    Ok(SynthSample {
        series,
        period: spec.period,
        clean,
        trend,
        outliers,
    })
}

/// The corrupted series and its true period.
pub fn generate(spec: &SynthSpec) -> Result<(ObservedSeries<f64>, usize)> {
    let s = generate_detailed(spec)?;
    Ok((s.series, s.period))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let c = random_composition(&mut rng, 17, 4);
            assert_eq!(c.len(), 4);
            assert_eq!(c.iter().sum::<usize>(), 17);
        }
        assert_eq!(random_composition(&mut rng, 0, 3), vec![0, 0, 0]);
    }

    #[test]
    fn waveforms_are_unit_amplitude() {
        for w in Waveform::ALL {
            let max = (0..1000).map(|i| w.at(i as f64 / 1000.0)).fold(f64::MIN, f64::max);
            assert!((max - 1.0).abs() < 1e-9, "{w:?}");
        }
    }

    #[test]
    fn piecewise_trend_shape() {
        let tr = TrendSpec::Piecewise {
            breaks: vec![3],
            slopes: vec![1.0, 0.0],
            shifts: vec![10.0],
        };
        assert_eq!(tr.values(6), vec![0.0, 1.0, 2.0, 12.0, 12.0, 12.0]);
    }
}
