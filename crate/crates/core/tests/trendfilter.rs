mod common;

use common::*;
use perioscope::series::{linear_interpolate, ObservedSeries};
use perioscope::trendfilter::*;
use proptest::prelude::*;

#[test]
fn affine_ramp_is_reproduced() {
    for n in FIXTURE_LENGTHS {
        let f = ramp(n);
        let fit = robust_detrend(&f.series, &TrendConfig::default()).unwrap();
        assert!(fit.converged, "n={n}");
        assert!(max_abs_diff(&fit.trend, &f.clean) < 1e-6, "n={n}");
    }
}

#[test]
fn spike_does_not_drag_the_trend() {
    for n in FIXTURE_LENGTHS {
        let f = piecewise_spike(n);
        let fit = robust_detrend(&f.series, &TrendConfig::default()).unwrap();
        let t = n / 2;
        let spike = f.series.values()[t] - f.clean[t];
        assert!((fit.trend[t] - f.clean[t]).abs() < spike / 10.0, "n={n}");
    }
}

#[test]
fn gap_over_a_line_is_bridged() {
    for n in FIXTURE_LENGTHS {
        let f = gap(n);
        let fit = robust_detrend(&f.series, &TrendConfig::default()).unwrap();
        assert!(max_abs_diff(&fit.trend, &f.clean) < 1e-3, "n={n}");
    }
}

#[test]
fn fixtures_converge_within_default_budget() {
    let cfg = TrendConfig::default();
    for f in trend_fixtures() {
        let fit = robust_detrend(&f.series, &cfg).unwrap();
        assert!(fit.converged && fit.iterations <= cfg.max_iter, "{} n={}", f.name, f.series.len());
        assert!(fit.primal_residual <= fit.primal_tolerance);
    }
}

#[test]
fn works_in_single_precision() {
    let y: Vec<f32> = (0..100).map(|t| 1.0 + 0.1 * t as f32).collect();
    let s = ObservedSeries::fully_observed(y.clone()).unwrap();
    let fit = robust_detrend(&s, &TrendConfig::default()).unwrap();
    let err = fit.trend.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(err < 1e-3, "{err}");
}

fn series_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (8usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(prop::bool::weighted(0.8), n),
        )
            .prop_map(|(v, mut m)| {
                m[0] = true;
                m[1] = true;
                (v, m)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stacked_l1_equals_objective(
        (y, mask) in series_strategy(),
        seed in 0u64..1000,
        l1 in 0.01f64..50.0,
        l2 in 0.01f64..50.0,
    ) {
        let tau: Vec<f64> = (0..y.len()).map(|t| ((t as u64 * 7 + seed) as f64).sin() * 3.0).collect();
        let sys = StackedSystem::new(&y, &mask, l1, l2).unwrap();
        let obj = trend_objective(&y, &mask, &tau, l1, l2);
        prop_assert!((sys.residual_l1(&tau) - obj).abs() <= 1e-10 * obj.max(1.0));
    }

    #[test]
    fn masked_values_are_ignored((y, mask) in series_strategy(), junk in -1e3f64..1e3) {
        let cfg = TrendConfig::default();
        let a = ObservedSeries::new(y.clone(), mask.clone()).unwrap();
        let other: Vec<f64> = y.iter().zip(&mask).map(|(&v, &m)| if m { v } else { junk }).collect();
        let b = ObservedSeries::new(other, mask).unwrap();
        let fa = robust_detrend(&a, &cfg).unwrap();
        let fb = robust_detrend(&b, &cfg).unwrap();
        prop_assert!(max_abs_diff(&fa.trend, &fb.trend) < 1e-8);
    }

    #[test]
    fn objective_beats_simple_candidates((y, mask) in series_strategy()) {
        let cfg = TrendConfig::default();
        let s = ObservedSeries::new(y.clone(), mask.clone()).unwrap();
        let fit = robust_detrend(&s, &cfg).unwrap();
        let obj = |tau: &[f64]| trend_objective(&y, &mask, tau, cfg.lambda1, cfg.lambda2);
        let got = obj(&fit.trend);
        let interp = linear_interpolate(&s).unwrap();
        prop_assert!(got <= obj(interp.values()) + 1e-9);
        prop_assert!(got <= obj(&vec![0.0; y.len()]) + 1e-9);
        if fit.converged {
            prop_assert!(fit.primal_residual <= fit.primal_tolerance);
        }
    }
}
