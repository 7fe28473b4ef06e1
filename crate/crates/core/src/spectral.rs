//! FFT helpers over real sequences.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;

/// Smallest power of two that is at least `2 * n`; padding to this length
/// makes circular correlation equal to linear correlation for lags `< n`.
pub fn padded_len(n: usize) -> usize {
    (2 * n).next_power_of_two()
}

/// Forward DFT of `x` zero-padded to `len` (unnormalised).
pub fn dft<T: Real>(x: &[T], len: usize) -> Vec<Complex<T>> {
    assert!(len >= x.len());
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    buf.resize(len, Complex::new(T::zero(), T::zero()));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf
}

/// `|DFT(x)|^2` with `x` zero-padded to `len`.
pub fn power<T: Real>(x: &[T], len: usize) -> Vec<T> {
    dft(x, len).into_iter().map(|c| c.norm_sqr()).collect()
}

/// Real part of the inverse DFT of a real spectrum, scaled by `1 / len`.
pub fn inverse_real<T: Real>(spectrum: &[T]) -> Vec<T> {
    let len = spectrum.len();
    let mut buf: Vec<Complex<T>> = spectrum.iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let scale = T::from_count(len);
    buf.into_iter().map(|c| c.re / scale).collect()
}

/// Linear autocorrelation sums `sum_t x[t] x[t + k]` for `k = 0..x.len()`.
pub fn autocorrelation<T: Real>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let mut out = inverse_real(&power(x, padded_len(n)));
    out.truncate(n);
    out
}
