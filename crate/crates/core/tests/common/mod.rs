#![allow(dead_code)]

use perioscope::series::ObservedSeries;

pub struct TrendFixture {
    pub name: &'static str,
    pub series: ObservedSeries<f64>,
    pub clean: Vec<f64>,
}

pub const FIXTURE_LENGTHS: [usize; 4] = [64, 200, 480, 1000];

pub fn ramp(n: usize) -> TrendFixture {
    let clean: Vec<f64> = (0..n).map(|t| 2.0 + 0.3 * t as f64).collect();
    TrendFixture {
        name: "ramp",
        series: ObservedSeries::fully_observed(clean.clone()).unwrap(),
        clean,
    }
}

/// Continuous piecewise-linear trend with a single 10-sigma spike at `n / 2`.
pub fn piecewise_spike(n: usize) -> TrendFixture {
    let knee = n / 3;
    let clean: Vec<f64> = (0..n)
        .map(|t| {
            if t < knee {
                0.05 * t as f64
            } else {
                0.05 * knee as f64 - 0.02 * (t - knee) as f64
            }
        })
        .collect();
    let mean = clean.iter().sum::<f64>() / n as f64;
    let sd = (clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut y = clean.clone();
    y[n / 2] += 10.0 * sd;
    TrendFixture {
        name: "piecewise+spike",
        series: ObservedSeries::fully_observed(y).unwrap(),
        clean,
    }
}

pub fn gap(n: usize) -> TrendFixture {
    let clean: Vec<f64> = (0..n).map(|t| 1.0 - 0.01 * t as f64).collect();
    let mut mask = vec![true; n];
    for m in &mut mask[n / 3..n / 3 + n / 4] {
        *m = false;
    }
    TrendFixture {
        name: "gap",
        series: ObservedSeries::new(clean.clone(), mask).unwrap(),
        clean,
    }
}

pub fn trend_fixtures() -> Vec<TrendFixture> {
    FIXTURE_LENGTHS
        .iter()
        .flat_map(|&n| [ramp(n), piecewise_spike(n), gap(n)])
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub enum MaskKind {
    SingleBlock,
    MultiBlock,
    Scattered,
}

/// Random mask of length `n` with roughly `ratio` missing, always keeping at
/// least one observation.
pub fn random_mask<R: rand::Rng>(rng: &mut R, n: usize, ratio: f64, kind: MaskKind) -> Vec<bool> {
    let missing = ((ratio * n as f64).round() as usize).min(n - 1);
    let mut mask = vec![true; n];
    match kind {
        MaskKind::SingleBlock => {
            if missing > 0 {
                let start = rng.random_range(0..=n - missing);
                mask[start..start + missing].iter_mut().for_each(|m| *m = false);
            }
        }
        MaskKind::MultiBlock => {
            let blocks = rng.random_range(2..=4);
            for _ in 0..blocks {
                let len = missing / blocks;
                if len > 0 {
                    let start = rng.random_range(0..=n - len);
                    mask[start..start + len].iter_mut().for_each(|m| *m = false);
                }
            }
        }
        MaskKind::Scattered => {
            for m in mask.iter_mut() {
                *m = rng.random::<f64>() >= ratio;
            }
        }
    }
    if !mask.iter().any(|&m| m) {
        mask[0] = true;
    }
    mask
}
