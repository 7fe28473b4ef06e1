//! Period decision: Fisher's g-test on the Wiener-Khinchin periodogram of the
//! robust ACF, ACF peak spacing, and the bin-resolution consistency window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mspec::{robust_acf_m_with_spectrum, HuberConfig};
use crate::racf::{acf_fft, RobustAcf};
use crate::scalar::{median, Real};
use crate::series::{observed_mean, scan_mask, MissingBlockReport, ObservedSeries};
use crate::spectral;
use crate::trendfilter::{robust_detrend, TrendConfig};

/// Shortest series the detector accepts.
pub const MIN_DETECT_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub alpha: f64,
    pub peak_height_frac: f64,
    pub trend_cfg: TrendConfig,
    /// When set, the detrend uses `lambda1 = factor * N` instead of
    /// `trend_cfg.lambda1`; a fixed `lambda1` absorbs long periods into the trend.
    pub lambda1_per_sample: Option<f64>,
    pub huber_cfg: HuberConfig,
    /// Huber periodogram numerator; `false` is the plain FFT fast mode.
    pub use_m_periodogram: bool,
    /// Report `round(N / k*)` when the peak spacing falls outside the window.
    pub fallback_to_bin: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            peak_height_frac: 0.3,
            trend_cfg: TrendConfig::default(),
            lambda1_per_sample: Some(DEFAULT_LAMBDA1_PER_SAMPLE),
            huber_cfg: HuberConfig::default(),
            use_m_periodogram: true,
            fallback_to_bin: false,
        }
    }
}

/// Default `lambda1 / N` for the detector's detrend.
pub const DEFAULT_LAMBDA1_PER_SAMPLE: f64 = 0.03;

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.peak_height_frac > 0.0 && self.peak_height_frac < 1.0) {
            return Err(Error::Config(format!(
                "peak height fraction must lie in (0, 1), got {}",
                self.peak_height_frac
            )));
        }
        if let Some(f) = self.lambda1_per_sample {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("lambda1 per sample must be positive, got {f}")));
            }
        }
        self.trend_cfg.validate()?;
        self.huber_cfg.validate()
    }

    /// Trend configuration actually used for a series of length `n`.
    pub fn trend_for(&self, n: usize) -> TrendConfig {
        let mut cfg = self.trend_cfg;
        if let Some(f) = self.lambda1_per_sample {
            cfg.lambda1 = f * n as f64;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub low: f64,
    pub high: f64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lambda1: f64,
    pub detrend_iterations: usize,
    pub detrend_converged: bool,
    pub missing: MissingBlockReport,
    pub invalid_lags: usize,
    /// Huber bins whose IRLS hit the iteration cap (0 in fast mode).
    pub unconverged_bins: usize,
    pub fisher_ordinates: usize,
    /// Why a significant spectrum was still declared non-periodic, if it was.
    pub rejection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub periodic: bool,
    pub period: Option<u64>,
    pub g_stat: f64,
    pub p_value: f64,
    pub k_star: usize,
    pub acf_peaks: Vec<usize>,
    /// Peak-derived period before rounding, see [`peak_period`].
    pub median_peak_distance: Option<f64>,
    pub rk_window: Option<Window>,
    pub diagnostics: Diagnostics,
}

/// Linear interpolation over lag index of lags with no observed pairs.
fn fill_invalid<T: Real>(acf: &RobustAcf<T>) -> Result<Vec<T>> {
    let valid: Vec<usize> = (0..acf.len()).filter(|&k| acf.is_valid(k)).collect();
    if valid.is_empty() {
        return Err(Error::NoObservations);
    }
    let mut r = acf.r.clone();
    let (first, last) = (valid[0], valid[valid.len() - 1]);
    for k in 0..first {
        r[k] = acf.r[first];
    }
    for k in last + 1..r.len() {
        r[k] = acf.r[last];
    }
    for w in valid.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in a + 1..b {
            let frac = T::from_count(k - a) / T::from_count(b - a);
            r[k] = acf.r[a] + (acf.r[b] - acf.r[a]) * frac;
        }
    }
    Ok(r)
}

/// Power spectrum of the ACF by Wiener-Khinchin, on the `N`-point grid so that
/// bin `k` corresponds to period `N / k`.
///
/// Each lag is weighted by `Q_k / Q_0` before the transform. Without the
/// weight the few-pair lags dominate the spectrum with noise and Fisher's
/// test rejects white noise several times more often than `alpha`; with it a
/// fully observed series gives exactly the classical periodogram.
///
/// The even extension `r_{-k} = r_k` is transformed at the Fourier
/// frequencies of length `N`, which amounts to the DFT of
/// `c_0 = r_0, c_j = r_j + r_{N - j}`. Invalid lags are interpolated first;
/// negative power is clamped to zero and DC is zeroed.
pub fn wk_periodogram<T: Real>(acf: &RobustAcf<T>) -> Result<Vec<T>> {
    let mut r = fill_invalid(acf)?;
    let n = r.len();
    let q0 = T::from_count(acf.pair_count[0].max(1));
    for (k, v) in r.iter_mut().enumerate() {
        *v = *v * T::from_count(acf.pair_count[k]) / q0;
    }
    let mut c = vec![T::zero(); n];
    c[0] = r[0];
    for j in 1..n {
        c[j] = r[j] + r[n - j];
    }
    let mut p: Vec<T> = spectral::dft(&c, n).into_iter().map(|z| z.re.max(T::zero())).collect();
    if let Some(dc) = p.first_mut() {
        *dc = T::zero();
    }
    Ok(p)
}

/// Fisher ordinates of a length-`n` spectrum: bins `1..` up to but excluding Nyquist.
pub fn fisher_ordinates(n: usize) -> usize {
    n.div_ceil(2).saturating_sub(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherG {
    pub g: f64,
    /// 1-based position of the largest ordinate (first on ties).
    pub k_star: usize,
}

/// `g = max P_k / sum P_k` over the given ordinates (bins `1..=M`, DC excluded).
/// `None` when there are fewer than two ordinates or they are all zero.
pub fn fisher_g<T: Real>(ordinates: &[T]) -> Option<FisherG> {
    if ordinates.len() < 2 {
        return None;
    }
    let mut total = 0.0;
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, p) in ordinates.iter().enumerate() {
        let p = p.to_f64_lossy();
        total += p;
        if p > best.1 {
            best = (i, p);
        }
    }
    (total > 0.0 && total.is_finite()).then(|| FisherG {
        g: best.1 / total,
        k_star: best.0 + 1,
    })
}

/// Largest term magnitude for which the alternating series is summed exactly.
const EXACT_TERM_LIMIT: f64 = 1e10;

/// Exact null distribution of Fisher's g for `m` ordinates:
/// `P(G > g) = sum_{j=1}^{floor(1/g)} (-1)^{j-1} C(m, j) (1 - j g)^{m-1}`.
///
/// Terms are evaluated in log space. Where they grow so large that the
/// alternating sum would lose all precision (only when `p` is close to 1),
/// the independent-ordinate approximation `1 - (1 - (1 - g)^{m-1})^m` is used.
pub fn fisher_pvalue(g: f64, m: usize) -> f64 {
    if !(g > 0.0) || m < 2 {
        return 1.0;
    }
    if g >= 1.0 {
        return 0.0;
    }
    let mf = m as f64;
    let upper = ((1.0 / g).floor() as usize).min(m);
    let mut ln_binom = 0.0;
    let mut terms = Vec::with_capacity(upper);
    for j in 1..=upper {
        ln_binom += ((mf - j as f64 + 1.0) / j as f64).ln();
        let base = 1.0 - j as f64 * g;
        if base <= 0.0 {
            break;
        }
        terms.push(ln_binom + (mf - 1.0) * base.ln());
    }
    let largest = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if largest.exp() > EXACT_TERM_LIMIT {
        let q = (1.0 - g).powf(mf - 1.0);
        return (1.0 - (1.0 - q).powf(mf)).clamp(0.0, 1.0);
    }
    // Neumaier summation of the alternating series
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (i, &lt) in terms.iter().enumerate() {
        let term = if i % 2 == 0 { lt.exp() } else { -lt.exp() };
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    (sum + comp).clamp(0.0, 1.0)
}

/// Strict local maxima of the ACF over lags `2..=N/2` that reach
/// `height_frac * r_0`; plateaus report their leftmost lag. Lags without
/// observed pairs are skipped and never act as neighbours.
pub fn find_acf_peaks<T: Real>(acf: &RobustAcf<T>, height_frac: f64) -> Vec<usize> {
    find_acf_peaks_within(acf, height_frac, 1)
}

/// As [`find_acf_peaks`], additionally requiring each peak to be the largest
/// valid value within `half_width` lags on either side (the leftmost one on
/// ties). `half_width = 1` is the plain local-maximum rule.
pub fn find_acf_peaks_within<T: Real>(acf: &RobustAcf<T>, height_frac: f64, half_width: usize) -> Vec<usize> {
    let n = acf.len();
    if n < 4 || !acf.is_valid(0) {
        return Vec::new();
    }
    let r0 = acf.r[0].to_f64_lossy();
    if !(r0 > 0.0) {
        return Vec::new();
    }
    let threshold = height_frac * r0;
    let valid: Vec<usize> = (1..n).filter(|&k| acf.is_valid(k)).collect();
    let value = |k: usize| acf.r[k].to_f64_lossy();
    let hi = n / 2;
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < valid.len() {
        let k = valid[i];
        if k > hi {
            break;
        }
        // extend over a plateau of equal values
        let mut j = i;
        while j + 1 < valid.len() && value(valid[j + 1]) == value(k) {
            j += 1;
        }
        let rises = i > 0 && value(valid[i - 1]) < value(k);
        let falls = j + 1 < valid.len() && value(valid[j + 1]) < value(k);
        let dominates = || {
            let lo = k.saturating_sub(half_width).max(1);
            let top = (k + half_width).min(n - 1);
            (lo..=top)
                .filter(|&q| acf.is_valid(q))
                .all(|q| if q < k { value(q) < value(k) } else { value(q) <= value(k) })
        };
        if k >= 2 && rises && falls && value(k) >= threshold && dominates() {
            peaks.push(k);
        }
        i = j + 1;
    }
    peaks
}

/// Median spacing of successive peaks; a single peak counts as its own lag.
pub fn median_peak_distance(peaks: &[usize]) -> Option<f64> {
    match peaks {
        [] => None,
        [only] => Some(*only as f64),
        _ => {
            let gaps: Vec<f64> = peaks.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
            median(&gaps)
        }
    }
}

/// Sub-lag position of the peak at `k`: vertex of the parabola through lags
/// `k - 1, k, k + 1`, kept within half a lag of `k`.
pub fn refine_peak<T: Real>(acf: &RobustAcf<T>, k: usize) -> f64 {
    if k == 0 || k + 1 >= acf.len() || !acf.is_valid(k - 1) || !acf.is_valid(k + 1) {
        return k as f64;
    }
    let (a, b, c) = (acf.r[k - 1].to_f64_lossy(), acf.r[k].to_f64_lossy(), acf.r[k + 1].to_f64_lossy());
    let curvature = a - 2.0 * b + c;
    if !(curvature < 0.0) {
        return k as f64;
    }
    k as f64 + (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
}

/// Median spacing of successive peaks at their refined sub-lag positions.
pub fn refined_peak_distance<T: Real>(acf: &RobustAcf<T>, peaks: &[usize]) -> Option<f64> {
    let pos: Vec<f64> = peaks.iter().map(|&k| refine_peak(acf, k)).collect();
    match pos.as_slice() {
        [] => None,
        [only] => Some(*only),
        _ => median(&pos.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()),
    }
}

/// Period from the refined peaks read as multiples of one spacing: each peak
/// at `p` is assigned the cycle count `j = round(p / d)` with `d` the
/// [`refined_peak_distance`], and the result is the median of `p / j`.
/// Differencing neighbours doubles the position noise of every spacing;
/// dividing by `j` shrinks it instead, which matters when only a handful of
/// long-period peaks fit in the series.
pub fn peak_period<T: Real>(acf: &RobustAcf<T>, peaks: &[usize]) -> Option<f64> {
    let d = refined_peak_distance(acf, peaks)?;
    if !(d > 0.0) {
        return Some(d);
    }
    let per: Vec<f64> = peaks
        .iter()
        .map(|&k| {
            let p = refine_peak(acf, k);
            p / (p / d).round().max(1.0)
        })
        .collect();
    median(&per)
}

/// Period interval consistent with periodogram bin `k` of a length-`n` series:
/// `[(n/(k+1) + n/k)/2 - 1, (n/k + n/(k-1))/2 + 1]`, with the upper bound
/// capped at `n` for `k = 1`.
pub fn rk_window(n: usize, k: usize) -> Result<Window> {
    if k == 0 || k > n / 2 {
        return Err(Error::InvalidArgument(format!("bin {k} outside 1..={} for length {n}", n / 2)));
    }
    let nf = n as f64;
    let kf = k as f64;
    let low = 0.5 * (nf / (kf + 1.0) + nf / kf) - 1.0;
    let high = if k == 1 {
        nf
    } else {
        0.5 * (nf / kf + nf / (kf - 1.0)) + 1.0
    };
    Ok(Window { low, high })
}

/// Observed values minus trend, centred on their observed mean; masked slots are 0.
fn residual<T: Real>(s: &ObservedSeries<T>, trend: &[T]) -> ObservedSeries<T> {
    let detrended = s.map_observed(|t, v| v - trend[t]);
    let mean = observed_mean(&detrended);
    detrended.map_observed(|_, v| v - mean)
}

/// End-to-end dominant period detection.
pub fn detect_period<T: Real>(s: &ObservedSeries<T>, cfg: &DetectConfig) -> Result<DetectionResult> {
    cfg.validate()?;
    let n = s.len();
    if n < MIN_DETECT_LEN {
        return Err(Error::TooShort {
            len: n,
            min: MIN_DETECT_LEN,
        });
    }
    let trend_cfg = cfg.trend_for(n);
    let fit = robust_detrend(s, &trend_cfg)?;
    let x = residual(s, &fit.trend);

    let (acf, unconverged_bins) = if cfg.use_m_periodogram {
        let (acf, spec) = robust_acf_m_with_spectrum(x.values(), x.mask(), &cfg.huber_cfg)?;
        (acf, spec.unconverged_bins)
    } else {
        (acf_fft(x.values(), x.mask())?, 0)
    };
    let m = fisher_ordinates(n);
    let mut result = DetectionResult {
        periodic: false,
        period: None,
        g_stat: 0.0,
        p_value: 1.0,
        k_star: 0,
        acf_peaks: Vec::new(),
        median_peak_distance: None,
        rk_window: None,
        diagnostics: Diagnostics {
            lambda1: trend_cfg.lambda1,
            detrend_iterations: fit.iterations,
            detrend_converged: fit.converged,
            missing: scan_mask(s.mask()),
            invalid_lags: acf.invalid_lags(),
            unconverged_bins,
            fisher_ordinates: m,
            rejection: None,
        },
    };

    let power = wk_periodogram(&acf)?;
    let Some(fg) = fisher_g(&power[1..=m]) else {
        result.diagnostics.rejection = Some("zero spectrum".into());
        return Ok(result);
    };
    result.g_stat = fg.g;
    result.k_star = fg.k_star;
    result.p_value = fisher_pvalue(fg.g, m);
    result.rk_window = rk_window(n, fg.k_star).ok();

    // Peaks must dominate half the shortest period the dominant bin allows;
    // plain local maxima pick up noise ripples on the ACF.
    let half_width = result.rk_window.map_or(1, |w| ((w.low / 2.0).floor() as usize).max(1));
    let normalized = acf.normalized();
    result.acf_peaks = find_acf_peaks_within(&normalized, cfg.peak_height_frac, half_width);
    result.median_peak_distance = peak_period(&normalized, &result.acf_peaks);

    if result.p_value >= cfg.alpha {
        result.diagnostics.rejection = Some("spectrum not significant".into());
        return Ok(result);
    }
    let consistent = match (result.median_peak_distance, result.rk_window) {
        _ if fg.k_star == 1 => Err("dominant bin is the whole-series frequency"),
        (None, _) => Err("no qualifying ACF peaks"),
        (Some(d), Some(w)) if w.contains(d) && w.contains(d.round()) => Ok(d.round() as u64),
        _ => Err("peak spacing outside the bin's period window"),
    };
    match consistent {
        Ok(period) => {
            result.periodic = true;
            result.period = Some(period);
        }
        Err(why) => {
            result.diagnostics.rejection = Some(why.into());
            if cfg.fallback_to_bin && fg.k_star > 1 {
                result.periodic = true;
                result.period = Some((n as f64 / fg.k_star as f64).round() as u64);
            }
        }
    }
    Ok(result)
}
