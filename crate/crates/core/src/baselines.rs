//! Non-robust reference detectors: ACF-Med, the plain Fisher g-test and
//! Lomb-Scargle. They share the peak finder and Fisher formulas with the main
//! detector so that comparisons isolate the robust stages.

use serde::{Deserialize, Serialize};

use crate::detector::{find_acf_peaks, fisher_g, fisher_ordinates, fisher_pvalue, median_peak_distance, MIN_DETECT_LEN};
use crate::error::{Error, Result};
use crate::racf::RobustAcf;
use crate::scalar::Real;
use crate::series::{linear_interpolate, ObservedSeries};
use crate::spectral;

/// Name of the false-alarm approximation used by [`lomb_scargle`].
pub const LOMB_FALSE_ALARM: &str = "classical exponential: 1 - (1 - exp(-P))^M, M independent frequencies";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: String,
    pub periodic: bool,
    pub period: Option<f64>,
    /// Method-specific strength: g for Fisher, the first peak's normalised ACF
    /// value for ACF-Med, the normalised power for Lomb-Scargle.
    pub score: f64,
    pub p_value: Option<f64>,
}

impl BaselineResult {
    fn none(method: &str) -> Self {
        Self {
            method: method.into(),
            periodic: false,
            period: None,
            score: 0.0,
            p_value: None,
        }
    }
}

fn check_len<T: Real>(s: &ObservedSeries<T>) -> Result<()> {
    if s.len() < MIN_DETECT_LEN {
        return Err(Error::TooShort {
            len: s.len(),
            min: MIN_DETECT_LEN,
        });
    }
    Ok(())
}

/// Gap-filled series with its mean removed.
fn interpolated_centred<T: Real>(s: &ObservedSeries<T>) -> Result<Vec<T>> {
    let filled = linear_interpolate(s)?;
    let v = filled.values();
    let mean = v.iter().copied().sum::<T>() / T::from_count(v.len());
    Ok(v.iter().map(|&x| x - mean).collect())
}

/// Classical (biased) ACF of the interpolated series, period from the median
/// spacing of its peaks.
pub fn acf_med<T: Real>(s: &ObservedSeries<T>, peak_height_frac: f64) -> Result<BaselineResult> {
    check_len(s)?;
    let x = interpolated_centred(s)?;
    let n = x.len();
    let sums = spectral::autocorrelation(&x);
    let acf = RobustAcf::from_sums(&sums, vec![n; n]).normalized();
    let peaks = find_acf_peaks(&acf, peak_height_frac);
    let mut out = BaselineResult::none("acf-med");
    if let Some(d) = median_peak_distance(&peaks).filter(|&d| d > 1.0) {
        out.periodic = true;
        out.period = Some(d);
        out.score = acf.r[peaks[0]].to_f64_lossy();
    }
    Ok(out)
}

/// Fisher's g-test on the periodogram of the interpolated series; the period
/// is the dominant bin's `N / k`.
pub fn fisher_baseline<T: Real>(s: &ObservedSeries<T>, alpha: f64) -> Result<BaselineResult> {
    check_len(s)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let x = interpolated_centred(s)?;
    let n = x.len();
    let power = spectral::power(&x, n);
    let m = fisher_ordinates(n);
    let mut out = BaselineResult::none("fisher");
    let Some(fg) = fisher_g(&power[1..=m]) else {
        out.p_value = Some(1.0);
        return Ok(out);
    };
    let p = fisher_pvalue(fg.g, m);
    out.score = fg.g;
    out.p_value = Some(p);
    let period = n as f64 / fg.k_star as f64;
    if p < alpha && period > 1.0 {
        out.periodic = true;
        out.period = Some(period);
    }
    Ok(out)
}

/// Frequencies (cycles per sample) covering periods `2..=n/2` at
/// `oversample` times the natural resolution `1 / n`.
pub fn default_frequency_grid(n: usize, oversample: usize) -> Vec<f64> {
    let f_min = 2.0 / n as f64;
    let f_max = 0.5;
    let step = 1.0 / (oversample.max(1) * n) as f64;
    let count = ((f_max - f_min) / step).floor() as usize + 1;
    (0..count).map(|i| f_min + i as f64 * step).collect()
}

/// Normalised Lomb-Scargle power of the observed samples at frequency `f`.
fn ls_power(t: &[f64], y: &[f64], var: f64, f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    let (s2, c2) = t
        .iter()
        .fold((0.0, 0.0), |(s, c), &ti| (s + (2.0 * w * ti).sin(), c + (2.0 * w * ti).cos()));
    let tau = s2.atan2(c2) / (2.0 * w);
    let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let arg = w * (ti - tau);
        let (sn, cs) = arg.sin_cos();
        yc += yi * cs;
        ys += yi * sn;
        cc += cs * cs;
        ss += sn * sn;
    }
    let mut p = 0.0;
    if cc > 0.0 {
        p += yc * yc / cc;
    }
    if ss > 0.0 {
        p += ys * ys / ss;
    }
    p / (2.0 * var)
}

/// Lomb-Scargle periodogram over observed samples only (no gap filling).
/// Periodic when the false-alarm probability of the highest peak is below
/// `alpha`, using [`LOMB_FALSE_ALARM`] with `M` the number of independent
/// frequencies the grid spans over the observed time range.
pub fn lomb_scargle<T: Real>(s: &ObservedSeries<T>, freq_grid: &[f64], alpha: f64) -> Result<BaselineResult> {
    if freq_grid.is_empty() || freq_grid.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidArgument("frequency grid must be non-empty and positive".into()));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = s.observed().map(|(t, v)| (t as f64, v.to_f64_lossy())).unzip();
    if t.len() < 4 {
        return Err(Error::TooFewObserved {
            needed: 4,
            found: t.len(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let y: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let var = y.iter().map(|v| v * v).sum::<f64>() / (y.len() - 1) as f64;
    let mut out = BaselineResult::none("lomb");
    if !(var > 0.0) {
        out.p_value = Some(1.0);
        return Ok(out);
    }
    let (best_f, best_p) = freq_grid
        .iter()
        .map(|&f| (f, ls_power(&t, &y, var, f)))
        .fold((freq_grid[0], f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let span = t[t.len() - 1] - t[0] + 1.0;
    let (lo, hi) = freq_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &f| (lo.min(f), hi.max(f)));
    let independent = ((hi - lo) * span).ceil().max(1.0);
    let fap = 1.0 - (1.0 - (-best_p).exp()).powf(independent);
    out.score = best_p;
    out.p_value = Some(fap.clamp(0.0, 1.0));
    if fap < alpha {
        out.periodic = true;
        out.period = Some(1.0 / best_f);
    }
    Ok(out)
}
