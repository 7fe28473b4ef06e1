//! Autocorrelation of series with missing samples.
//!
//! `r_k = (1 / Q_k) * sum x[t + k] x[t]` over the `Q_k` pairs whose endpoints
//! are both observed. Lags with `Q_k = 0` carry no information and are
//! flagged invalid instead of failing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::MIN_LEN;
use crate::spectral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustAcf<T> {
    /// `r[k]` for `k = 0..N`; zero at invalid lags.
    pub r: Vec<T>,
    /// Number of observed pairs at each lag.
    pub pair_count: Vec<usize>,
    /// Whether `r` has been divided by `r[0]`.
    pub normalized: bool,
}

impl<T: Real> RobustAcf<T> {
    pub(crate) fn from_sums(sums: &[T], pair_count: Vec<usize>) -> Self {
        let r = sums
            .iter()
            .zip(&pair_count)
            .map(|(&s, &q)| if q > 0 { s / T::from_count(q) } else { T::zero() })
            .collect();
        Self {
            r,
            pair_count,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.pair_count.get(k).is_some_and(|&q| q > 0)
    }

    pub fn invalid_lags(&self) -> usize {
        self.pair_count.iter().filter(|&&q| q == 0).count()
    }

    /// Copy scaled so that `r[0] == 1`. Left unscaled when `r[0]` is zero or
    /// lag 0 has no pairs.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        let r0 = self.r.first().copied().unwrap_or_else(T::zero);
        if self.is_valid(0) && r0 != T::zero() && r0.is_finite() {
            for v in &mut out.r {
                *v = *v / r0;
            }
            out.normalized = true;
        }
        out
    }

    /// Valid lag in `lo..=hi` with the largest value (smallest lag on ties).
    pub fn argmax_lag(&self, lo: usize, hi: usize) -> Option<usize> {
        let hi = hi.min(self.len().saturating_sub(1));
        (lo..=hi)
            .filter(|&k| self.is_valid(k))
            .fold(None, |best: Option<usize>, k| match best {
                Some(b) if self.r[b] >= self.r[k] => Some(b),
                _ => Some(k),
            })
    }
}

pub(crate) fn check_len<T>(x: &[T], mask: &[bool]) -> Result<()> {
    if x.len() != mask.len() {
        return Err(Error::LengthMismatch {
            values: x.len(),
            mask: mask.len(),
        });
    }
    if x.len() < MIN_LEN {
        return Err(Error::TooShort {
            len: x.len(),
            min: MIN_LEN,
        });
    }
    Ok(())
}

/// `h[t] = x[t] * I[t]`: masked payloads replaced by zero.
pub(crate) fn masked_values<T: Real>(x: &[T], mask: &[bool]) -> Vec<T> {
    x.iter()
        .zip(mask)
        .map(|(&v, &m)| if m { v } else { T::zero() })
        .collect()
}

/// Direct `O(N^2)` evaluation over observed pairs.
pub fn acf_bruteforce<T: Real>(x: &[T], mask: &[bool]) -> Result<RobustAcf<T>> {
    check_len(x, mask)?;
    let n = x.len();
    let mut sums = vec![T::zero(); n];
    let mut counts = vec![0usize; n];
    for k in 0..n {
        for t in 0..n - k {
            if mask[t] && mask[t + k] {
                sums[k] = sums[k] + x[t + k] * x[t];
                counts[k] += 1;
            }
        }
    }
    Ok(RobustAcf::from_sums(&sums, counts))
}

/// `O(N log N)` evaluation: numerator and pair counts are both linear
/// autocorrelations, computed through a zero-padded FFT.
pub fn acf_fft<T: Real>(x: &[T], mask: &[bool]) -> Result<RobustAcf<T>> {
    check_len(x, mask)?;
    let sums = spectral::autocorrelation(&masked_values(x, mask));
    Ok(RobustAcf::from_sums(&sums, pair_counts(mask)))
}

/// `Q_k` for `k = 0..N` from the FFT autocorrelation of the indicator,
/// rounded to the exact integer.
pub fn pair_counts(mask: &[bool]) -> Vec<usize> {
    let ind: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    spectral::autocorrelation(&ind)
        .into_iter()
        .map(|q| q.round().max(0.0) as usize)
        .collect()
}

/// `Q_k` by direct counting.
pub fn pair_counts_direct(mask: &[bool]) -> Vec<usize> {
    let n = mask.len();
    (0..n)
        .map(|k| (0..n - k).filter(|&t| mask[t] && mask[t + k]).count())
        .collect()
}

/// Valid starts for an interior block of length `l` in a series of length `n`:
/// the block never covers the first or last sample.
pub fn interior_starts(n: usize, l: usize) -> std::ops::Range<usize> {
    if l == 0 {
        return 1..1;
    }
    1..n.saturating_sub(l)
}

/// First `(start, lag)` at which a single interior block of length `l`
/// leaves no observed pair, searching every placement and lag.
pub fn find_empty_lag(n: usize, l: usize) -> Option<(usize, usize)> {
    let mut mask = vec![true; n];
    for m in interior_starts(n, l) {
        mask.iter_mut().for_each(|v| *v = true);
        mask[m..m + l].iter_mut().for_each(|v| *v = false);
        for k in 1..n {
            if !(0..n - k).any(|t| mask[t] && mask[t + k]) {
                return Some((m, k));
            }
        }
    }
    None
}

/// True iff every interior placement of a block of length `l` keeps
/// `Q_k > 0` at every lag `1..n`. Exhaustive.
pub fn check_proposition(n: usize, l: usize) -> bool {
    find_empty_lag(n, l).is_none()
}
