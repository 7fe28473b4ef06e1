//! Huber M-periodogram: per-frequency robust harmonic regression.
//!
//! For each bin `k` of a length-`N'` sequence the pair `beta` minimising
//! `sum huber(h[t] - beta . [cos(2 pi k t / N'), sin(2 pi k t / N')])` is found
//! by IRLS and reported as `(N' / 4) |beta|^2`, which equals `|DFT(h)[k]|^2 / N'`
//! when the loss is quadratic. DC and Nyquist use one-parameter fits with the
//! same `1 / N'` scaling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::racf::{check_len, masked_values, pair_counts, RobustAcf};
use crate::scalar::{median_in_place, Real};
use crate::spectral;

/// 95% efficiency tuning constant under Gaussian noise.
const HUBER_K: f64 = 1.345;
/// MAD to standard deviation under Gaussian noise.
const MAD_TO_SD: f64 = 1.4826;
/// Mean absolute deviation to standard deviation under Gaussian noise.
const MEAN_AD_TO_SD: f64 = 1.2533;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Fixed(f64),
    /// `1.345` robust standard deviations of the least-squares residuals.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberConfig {
    pub delta_mode: DeltaMode,
    pub irls_max_iter: usize,
    pub irls_tol: f64,
}

impl Default for HuberConfig {
    fn default() -> Self {
        Self {
            delta_mode: DeltaMode::Adaptive,
            irls_max_iter: 50,
            irls_tol: 1e-8,
        }
    }
}

impl HuberConfig {
    pub fn fixed(delta: f64) -> Self {
        Self {
            delta_mode: DeltaMode::Fixed(delta),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DeltaMode::Fixed(d) = self.delta_mode {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("huber delta must be positive, got {d}")));
            }
        }
        if self.irls_max_iter == 0 {
            return Err(Error::Config("irls_max_iter must be positive".into()));
        }
        if !(self.irls_tol > 0.0 && self.irls_tol.is_finite()) {
            return Err(Error::Config(format!("irls_tol must be positive, got {}", self.irls_tol)));
        }
        Ok(())
    }
}

pub fn huber_loss<T: Real>(x: T, delta: T) -> T {
    let a = x.abs();
    if a <= delta {
        x * x / T::lit(2.0)
    } else {
        delta * a - delta * delta / T::lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFit<T> {
    /// Cosine and sine coefficients (the sine one is zero for DC and Nyquist).
    pub beta: [T; 2],
    /// Huber transition point used for the fit.
    pub delta: T,
    pub iterations: usize,
    pub converged: bool,
    /// Huber objective after the least-squares start and after each IRLS step.
    pub objective: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPeriodogram<T> {
    pub power: Vec<T>,
    pub n_prime: usize,
    /// Bins whose IRLS stopped at `irls_max_iter`.
    pub unconverged_bins: usize,
}

/// `cos` and `sin` of `2 pi j / N'` for `j < N'`.
struct TrigTable<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> TrigTable<T> {
    fn new(n: usize) -> Self {
        let angle = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        Self {
            cos: (0..n).map(|j| T::lit(angle(j).cos())).collect(),
            sin: (0..n).map(|j| T::lit(angle(j).sin())).collect(),
        }
    }
}

/// Regressor columns for bin `k`.
struct Design<'a, T> {
    table: &'a TrigTable<T>,
    k: usize,
    n: usize,
}

impl<T: Real> Design<'_, T> {
    #[inline]
    fn cos(&self, t: usize) -> T {
        self.table.cos[(self.k * t) % self.n]
    }

    #[inline]
    fn sin(&self, t: usize) -> T {
        self.table.sin[(self.k * t) % self.n]
    }
}

fn objective<T: Real>(resid: &[T], delta: T) -> T {
    resid.iter().map(|&r| huber_loss(r, delta)).sum()
}

/// Robust scale of the residuals: MAD, falling back to the mean absolute
/// deviation when more than half of them vanish.
fn robust_scale<T: Real>(resid: &[T], scratch: &mut Vec<T>) -> T {
    scratch.clear();
    scratch.extend(resid.iter().map(|r| r.abs()));
    let mad = median_in_place(scratch).unwrap_or_else(T::zero);
    if mad > T::zero() {
        return T::lit(MAD_TO_SD) * mad;
    }
    let n = T::from_count(resid.len().max(1));
    T::lit(MEAN_AD_TO_SD) * resid.iter().map(|r| r.abs()).sum::<T>() / n
}

/// Transition point for a fit. The adaptive scale only looks at residuals
/// on `informative` samples: padding and missing positions are exact zeros
/// that would otherwise collapse the MAD and turn every real sample into an
/// outlier.
fn choose_delta<T: Real>(resid: &[T], informative: Option<&[bool]>, cfg: &HuberConfig) -> T {
    match cfg.delta_mode {
        DeltaMode::Fixed(d) => T::lit(d),
        DeltaMode::Adaptive => {
            let mut scratch = Vec::with_capacity(resid.len());
            let picked: Vec<T> = match informative {
                Some(m) => resid.iter().zip(m).filter(|(_, &keep)| keep).map(|(&r, _)| r).collect(),
                None => resid.to_vec(),
            };
            T::lit(HUBER_K) * robust_scale(&picked, &mut scratch)
        }
    }
}

fn converged_step<T: Real>(old: &[T; 2], new: &[T; 2], tol: f64) -> bool {
    let diff = ((new[0] - old[0]).powi(2) + (new[1] - old[1]).powi(2)).sqrt();
    let size = (old[0].powi(2) + old[1].powi(2)).sqrt();
    diff.to_f64_lossy() <= tol * size.to_f64_lossy().max(f64::MIN_POSITIVE)
}

/// Huber regression of `h` on the bin-`k` regressors by IRLS, starting from
/// least squares.
fn fit_bin<T: Real>(
    h: &[T],
    informative: Option<&[bool]>,
    k: usize,
    table: &TrigTable<T>,
    cfg: &HuberConfig,
) -> HarmonicFit<T> {
    let n = h.len();
    let d = Design { table, k, n };
    let two_param = k != 0 && 2 * k != n;
    let predict = |beta: &[T; 2], t: usize| {
        if two_param {
            beta[0] * d.cos(t) + beta[1] * d.sin(t)
        } else {
            beta[0] * d.cos(t)
        }
    };
    let wls = |w: &dyn Fn(usize) -> T| -> Option<[T; 2]> {
        let (mut cc, mut ss, mut cs, mut hc, mut hs) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for t in 0..n {
            let wt = w(t);
            let c = d.cos(t);
            cc = cc + wt * c * c;
            hc = hc + wt * h[t] * c;
            if two_param {
                let s = d.sin(t);
                ss = ss + wt * s * s;
                cs = cs + wt * c * s;
                hs = hs + wt * h[t] * s;
            }
        }
        if !two_param {
            return (cc > T::zero()).then(|| [hc / cc, T::zero()]);
        }
        let det = cc * ss - cs * cs;
        (det > T::zero()).then(|| [(ss * hc - cs * hs) / det, (cc * hs - cs * hc) / det])
    };

    let mut beta = wls(&|_| T::one()).unwrap_or([T::zero(); 2]);
    let mut resid: Vec<T> = (0..n).map(|t| h[t] - predict(&beta, t)).collect();
    let delta = choose_delta(&resid, informative, cfg);
    let mut trace = vec![objective(&resid, delta)];
    let mut iterations = 0;
    let mut converged = false;

    if delta <= T::zero() || resid.iter().all(|&r| r == T::zero()) {
        // exact fit: least squares is already the Huber solution
        converged = true;
    } else {
        while iterations < cfg.irls_max_iter {
            iterations += 1;
            let weight = |t: usize| {
                let a = resid[t].abs();
                if a <= delta {
                    T::one()
                } else {
                    delta / a
                }
            };
            let Some(next) = wls(&weight) else { break };
            let done = converged_step(&beta, &next, cfg.irls_tol);
            beta = next;
            for (t, r) in resid.iter_mut().enumerate() {
                *r = h[t] - predict(&beta, t);
            }
            trace.push(objective(&resid, delta));
            if done {
                converged = true;
                break;
            }
        }
    }
    HarmonicFit {
        beta,
        delta,
        iterations,
        converged,
        objective: trace,
    }
}

fn bin_power<T: Real>(fit: &HarmonicFit<T>, k: usize, n: usize) -> T {
    let np = T::from_count(n);
    if k == 0 || 2 * k == n {
        np * fit.beta[0] * fit.beta[0]
    } else {
        np / T::lit(4.0) * (fit.beta[0] * fit.beta[0] + fit.beta[1] * fit.beta[1])
    }
}

fn check_h_bar<T>(h_bar: &[T]) -> Result<()> {
    if h_bar.len() < 4 || h_bar.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "padded series length must be even and at least 4, got {}",
            h_bar.len()
        )));
    }
    Ok(())
}

/// Robust harmonic fit at bin `k` (`0 <= k <= N'/2`).
pub fn harmonic_fit<T: Real>(h_bar: &[T], k: usize, cfg: &HuberConfig) -> Result<HarmonicFit<T>> {
    cfg.validate()?;
    check_h_bar(h_bar)?;
    if k > h_bar.len() / 2 {
        return Err(Error::InvalidArgument(format!("bin {k} above Nyquist")));
    }
    Ok(fit_bin(h_bar, None, k, &TrigTable::new(h_bar.len()), cfg))
}

/// Huber power at a single bin, on the same scale as [`m_periodogram`].
pub fn m_periodogram_bin<T: Real>(h_bar: &[T], k: usize, cfg: &HuberConfig) -> Result<T> {
    let fit = harmonic_fit(h_bar, k, cfg)?;
    Ok(bin_power(&fit, k, h_bar.len()))
}

/// Full Hermitian-symmetric M-periodogram of `h_bar`. Bins are fitted in
/// parallel; each depends only on its own inputs.
pub fn m_periodogram<T: Real>(h_bar: &[T], cfg: &HuberConfig) -> Result<MPeriodogram<T>> {
    periodogram(h_bar, None, cfg)
}

/// As [`m_periodogram`], with the adaptive scale estimated only over samples
/// flagged in `informative` (same length as `h_bar`).
pub fn m_periodogram_masked<T: Real>(
    h_bar: &[T],
    informative: &[bool],
    cfg: &HuberConfig,
) -> Result<MPeriodogram<T>> {
    if informative.len() != h_bar.len() {
        return Err(Error::LengthMismatch {
            values: h_bar.len(),
            mask: informative.len(),
        });
    }
    periodogram(h_bar, Some(informative), cfg)
}

fn periodogram<T: Real>(h_bar: &[T], informative: Option<&[bool]>, cfg: &HuberConfig) -> Result<MPeriodogram<T>> {
    cfg.validate()?;
    check_h_bar(h_bar)?;
    let n = h_bar.len();
    let table = TrigTable::new(n);
    let half: Vec<(T, bool)> = (0..=n / 2)
        .into_par_iter()
        .map(|k| {
            let fit = fit_bin(h_bar, informative, k, &table, cfg);
            (bin_power(&fit, k, n).max(T::zero()), fit.converged)
        })
        .collect();
    let mut power = vec![T::zero(); n];
    for (k, &(p, _)) in half.iter().enumerate() {
        power[k] = p;
        if k > 0 {
            power[n - k] = p;
        }
    }
    Ok(MPeriodogram {
        power,
        n_prime: n,
        unconverged_bins: half.iter().filter(|(_, c)| !c).count(),
    })
}

/// Missing-data ACF with the Huber periodogram in place of `|FFT(h)|^2`.
/// `x` is assumed zero-mean over observed positions; masked payloads are ignored.
pub fn robust_acf_m<T: Real>(x: &[T], mask: &[bool], cfg: &HuberConfig) -> Result<RobustAcf<T>> {
    Ok(robust_acf_m_with_spectrum(x, mask, cfg)?.0)
}

pub(crate) fn robust_acf_m_with_spectrum<T: Real>(
    x: &[T],
    mask: &[bool],
    cfg: &HuberConfig,
) -> Result<(RobustAcf<T>, MPeriodogram<T>)> {
    check_len(x, mask)?;
    let n = x.len();
    let mut h_bar = masked_values(x, mask);
    h_bar.resize(2 * n, T::zero());
    let mut informative = mask.to_vec();
    informative.resize(2 * n, false);
    let spec = m_periodogram_masked(&h_bar, &informative, cfg)?;
    let scale = T::from_count(2 * n);
    let mut sums = spectral::inverse_real(&spec.power);
    sums.truncate(n);
    for s in &mut sums {
        *s = *s * scale;
    }
    Ok((RobustAcf::from_sums(&sums, pair_counts(mask)), spec))
}
