mod common;

use std::f64::consts::PI;

use common::*;
use perioscope::mspec::*;
use perioscope::racf::acf_fft;
use perioscope::spectral;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn cosine(n: usize, k0: usize) -> Vec<f64> {
    (0..n).map(|t| (2.0 * PI * (k0 * t) as f64 / n as f64).cos()).collect()
}

fn sinusoid(n: usize, period: f64) -> Vec<f64> {
    (0..n).map(|t| (2.0 * PI * t as f64 / period).sin()).collect()
}

fn padded(x: &[f64], mask: &[bool]) -> Vec<f64> {
    let mut h: Vec<f64> = x.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
    h.resize(2 * x.len(), 0.0);
    h
}

/// Replaces `count` observed positions with `+-amp` spikes.
fn add_spikes(rng: &mut ChaCha8Rng, x: &mut [f64], mask: &[bool], count: usize, amp: f64) {
    let mut observed: Vec<usize> = (0..x.len()).filter(|&t| mask[t]).collect();
    for i in 0..count.min(observed.len()) {
        let j = rng.random_range(i..observed.len());
        observed.swap(i, j);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x[observed[i]] = sign * amp;
    }
}

fn centred(x: &[f64], mask: &[bool]) -> Vec<f64> {
    let (s, c) = x.iter().zip(mask).filter(|(_, &m)| m).fold((0.0, 0.0), |(s, c), (&v, _)| (s + v, c + 1.0));
    x.iter().map(|v| v - s / c).collect()
}

#[test]
fn clean_fourier_sinusoid_has_one_bin_pair() {
    let (n, k0) = (128, 9);
    let spec = m_periodogram(&cosine(n, k0), &HuberConfig::default()).unwrap();
    let peak = spec.power[k0];
    assert!((peak - n as f64 / 4.0).abs() < 1e-9);
    assert_eq!(spec.power[n - k0], peak);
    for (k, &p) in spec.power.iter().enumerate() {
        if k != k0 && k != n - k0 {
            assert!(p < 1e-8 * peak, "k={k} p={p}");
        }
    }
}

#[test]
fn huge_delta_is_proportional_to_fft_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [30usize, 64, 90] {
        let h: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let spec = m_periodogram(&h, &HuberConfig::fixed(1e9)).unwrap();
        let fft = spectral::power(&h, n);
        let ratio = spec.power[1] / fft[1];
        for k in 0..n {
            assert!((spec.power[k] - ratio * fft[k]).abs() <= 1e-6 * ratio * fft[k].max(1e-12), "n={n} k={k}");
        }
        assert!((ratio - 1.0 / n as f64).abs() < 1e-12);
    }
}

#[test]
fn spike_barely_moves_the_fitted_bin() {
    let (n, k0) = (288, 12);
    let clean = cosine(n, k0);
    let mut spiked = clean.clone();
    spiked[37] += 100.0;
    let cfg = HuberConfig::default();
    let robust_clean = m_periodogram_bin(&clean, k0, &cfg).unwrap();
    let robust_spiked = m_periodogram_bin(&spiked, k0, &cfg).unwrap();
    assert!((robust_spiked / robust_clean - 1.0).abs() < 0.05);

    let fft_clean = spectral::power(&clean, n)[k0] / n as f64;
    let fft_spiked = spectral::power(&spiked, n)[k0] / n as f64;
    let leak = 100.0f64.powi(2) / n as f64;
    assert!((fft_spiked - fft_clean).abs() > 0.5 * leak);
}

#[test]
fn irls_objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 96;
    let mut x: Vec<f64> = sinusoid(n / 2, 8.0)
        .into_iter()
        .map(|v| v + 0.3 * { let e: f64 = StandardNormal.sample(&mut rng); e })
        .collect();
    let mask = vec![true; n / 2];
    add_spikes(&mut rng, &mut x, &mask, 4, 6.0);
    let h = padded(&x, &mask);
    for cfg in [HuberConfig::default(), HuberConfig::fixed(0.2), HuberConfig::fixed(2.0)] {
        for k in 0..=n / 2 {
            let fit = harmonic_fit(&h, k, &cfg).unwrap();
            for w in fit.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "k={k} {:?}", fit.objective);
            }
        }
    }
}

#[test]
fn degenerates_to_fft_acf() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(16..100);
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mask = vec![true; n];
        let x = centred(&x, &mask);
        let robust = robust_acf_m(&x, &mask, &HuberConfig::fixed(1e9)).unwrap().normalized();
        let plain = acf_fft(&x, &mask).unwrap().normalized();
        assert!(max_abs_diff(&robust.r, &plain.r) < 1e-6);
    }
}

#[test]
fn robust_acf_survives_outliers_and_a_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 144;
    let mut x = sinusoid(n, 12.0);
    let mask = random_mask(&mut rng, n, 0.2, MaskKind::SingleBlock);
    let sd = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    add_spikes(&mut rng, &mut x, &mask, (0.05 * n as f64).round() as usize, 5.0 * sd);
    let x = centred(&x, &mask);
    let acf = robust_acf_m(&x, &mask, &HuberConfig::default()).unwrap();
    // every multiple of the period ties in expectation for this estimator
    let lag = acf.argmax_lag(2, n / 2).unwrap();
    assert_eq!(lag % 12, 0, "argmax {lag}");
}

#[test]
fn outlier_breakdown_probe() {
    let n = 288;
    let clean = sinusoid(n, 12.0);
    let mask = vec![true; n];
    let sd = (clean.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let on_period = |lag: Option<usize>| lag.is_some_and(|k| k % 12 == 0);
    let mut plain_moved = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = clean.clone();
        let count = rng.random_range(1..=(0.05 * n as f64) as usize);
        add_spikes(&mut rng, &mut x, &mask, count, 5.0 * sd);
        let x = centred(&x, &mask);
        let robust = robust_acf_m(&x, &mask, &HuberConfig::default()).unwrap();
        assert!(on_period(robust.argmax_lag(2, n / 2)), "seed={seed}");
        if !on_period(acf_fft(&x, &mask).unwrap().argmax_lag(2, n / 2)) {
            plain_moved += 1;
        }
    }
    eprintln!("plain acf argmax moved in {plain_moved}/50 seeds");
}

#[test]
fn zero_observations_give_zero_acf() {
    let mask = random_mask(&mut ChaCha8Rng::seed_from_u64(1), 40, 0.3, MaskKind::SingleBlock);
    let acf = robust_acf_m(&[0.0; 40], &mask, &HuberConfig::default()).unwrap();
    assert!(acf.r.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectrum_is_hermitian_and_nonnegative(
        h in (2usize..40).prop_flat_map(|half| prop::collection::vec(-10.0f64..10.0, 2 * half)),
    ) {
        let spec = m_periodogram(&h, &HuberConfig::default()).unwrap();
        let n = spec.n_prime;
        prop_assert_eq!(n, h.len());
        for k in 1..n {
            prop_assert_eq!(spec.power[k], spec.power[n - k]);
        }
        prop_assert!(spec.power.iter().all(|&p| p >= 0.0));
    }
}
