use perioscope::detector::{detect_period, DetectConfig};
use perioscope::series::scan_missing_blocks;
use perioscope::synthbench::*;
use perioscope::Error;
use proptest::prelude::*;

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        seed,
        noise_sigma: 0.2,
        trend: TrendSpec::Piecewise {
            breaks: vec![200],
            slopes: vec![0.003, -0.002],
            shifts: vec![1.5],
        },
        ..SynthSpec::default()
    }
}

#[test]
fn clean_sinusoid_plus_trend() {
    let s = SynthSpec {
        trend: TrendSpec::Linear { slope: 0.01 },
        seed: 2,
        ..SynthSpec::default()
    };
    let sample = generate_detailed(&s).unwrap();
    assert!(sample.series.is_fully_observed());
    assert!(sample.outliers.is_empty());
    let phase_free: Vec<f64> = sample
        .clean
        .iter()
        .zip(&sample.trend)
        .map(|(c, t)| c - t)
        .collect();
    assert!(phase_free.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    // one period apart the seasonal part repeats exactly
    for t in 0..s.n - 24 {
        assert!((phase_free[t] - phase_free[t + 24]).abs() < 1e-9);
    }
    let r = detect_period(&sample.series, &DetectConfig::default()).unwrap();
    assert_eq!(r.period, Some(24));
}

#[test]
fn same_seed_same_series() {
    let a = generate(&spec(9)).unwrap();
    let b = generate(&spec(9)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0, generate(&spec(10)).unwrap().0);
}

#[test]
fn single_block_of_thirty_percent() {
    let s = SynthSpec {
        missing_ratio: 0.3,
        ..spec(4)
    };
    let (series, period) = generate(&s).unwrap();
    assert_eq!(period, 24);
    let report = scan_missing_blocks(&series);
    assert_eq!(report.blocks.len(), 1);
    let block = report.blocks[0];
    assert_eq!(block.len, 144);
    assert!(block.start >= 1 && block.start + block.len <= 479);
}

#[test]
fn corruption_keeps_the_clean_series() {
    let base = generate_detailed(&spec(7)).unwrap();
    let dirty = generate_detailed(&SynthSpec {
        missing_ratio: 0.2,
        outlier_ratio: 0.05,
        ..spec(7)
    })
    .unwrap();
    assert_eq!(base.clean, dirty.clean);
}

#[test]
fn outliers_sit_on_observed_samples_at_five_sigma() {
    let s = SynthSpec {
        missing_ratio: 0.2,
        outlier_ratio: 0.05,
        missing_mode: MissingMode::MultiBlock(3),
        ..spec(11)
    };
    let sample = generate_detailed(&s).unwrap();
    let n = s.n as f64;
    let mean = sample.clean.iter().sum::<f64>() / n;
    let sd = (sample.clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert_eq!(sample.outliers.len(), 24);
    for &t in &sample.outliers {
        assert!(sample.series.is_observed(t));
        let jump = sample.series.values()[t] - sample.clean[t];
        assert!((jump.abs() - 5.0 * sd).abs() < 1e-9, "t={t} jump={jump}");
    }
    for t in 0..s.n {
        if sample.series.is_observed(t) && !sample.outliers.contains(&t) {
            assert_eq!(sample.series.values()[t], sample.clean[t]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corruption_counts_match_the_ratios(
        n in 40usize..400,
        mr in 0.0f64..0.45,
        or in 0.0f64..0.45,
        mode in 0usize..3,
        blocks in 1usize..5,
        seed in any::<u64>(),
    ) {
        let missing_mode = match mode {
            0 => MissingMode::SingleBlock,
            1 => MissingMode::MultiBlock(blocks),
            _ => MissingMode::Scattered,
        };
        let s = SynthSpec { n, period: 4, missing_ratio: mr, outlier_ratio: or, missing_mode, seed, ..SynthSpec::default() };
        let sample = generate_detailed(&s).unwrap();
        let missing = (mr * n as f64).round() as usize;
        prop_assert_eq!(n - sample.series.observed_count(), missing);
        let want = ((or * n as f64).round() as usize).min(n - missing);
        prop_assert_eq!(sample.outliers.len(), want);
        let report = scan_missing_blocks(&sample.series);
        prop_assert!(sample.series.is_observed(0) || mode == 2);
        prop_assert!(sample.series.is_observed(n - 1) || mode == 2);
        match missing_mode {
            MissingMode::SingleBlock if missing > 0 => prop_assert_eq!(report.blocks.len(), 1),
            MissingMode::MultiBlock(b) if missing >= b => prop_assert_eq!(report.blocks.len(), b),
            _ => {}
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        SynthSpec { period: 1, ..SynthSpec::default() },
        SynthSpec { period: 121, ..SynthSpec::default() },
        SynthSpec { missing_ratio: 0.5, ..SynthSpec::default() },
        SynthSpec { outlier_ratio: -0.1, ..SynthSpec::default() },
        SynthSpec { noise_sigma: f64::NAN, ..SynthSpec::default() },
        SynthSpec { missing_mode: MissingMode::MultiBlock(0), missing_ratio: 0.1, ..SynthSpec::default() },
        SynthSpec {
            trend: TrendSpec::Piecewise { breaks: vec![10], slopes: vec![0.0], shifts: vec![1.0] },
            ..SynthSpec::default()
        },
    ];
    for s in bad {
        assert!(matches!(generate(&s), Err(Error::Config(_))), "{s:?}");
    }
}

#[test]
fn oversized_blocks_are_infeasible() {
    let s = SynthSpec {
        n: 16,
        period: 4,
        missing_ratio: 0.49,
        missing_mode: MissingMode::MultiBlock(8),
        ..SynthSpec::default()
    };
    assert!(matches!(generate(&s), Err(Error::Infeasible(_))));
}

#[test]
fn trial_specs_share_the_base_series_across_cells() {
    let corpus = CorpusConfig::default();
    for trial in 0..5 {
        let a = corpus.trial_spec(trial, 0.0, 0.0);
        let b = corpus.trial_spec(trial, 0.3, 0.05);
        assert_eq!((a.period, a.waveform, a.seed, &a.trend), (b.period, b.waveform, b.seed, &b.trend));
        assert_eq!(generate_detailed(&a).unwrap().clean, generate_detailed(&b).unwrap().clean);
        assert!((corpus.period_min..=corpus.period_max).contains(&a.period));
        assert_ne!(a.seed, corpus.trial_spec(trial + 1, 0.0, 0.0).seed);
    }
}

#[test]
fn default_grid_has_nine_cells() {
    let g = default_grid();
    assert_eq!(g.len(), 9);
    assert_eq!(g[0], (0.0, 0.0));
    assert_eq!(g[8], (0.30, 0.05));
}

fn clean_bench() -> BenchConfig {
    BenchConfig {
        corpus: CorpusConfig {
            period_min: 24,
            period_max: 24,
            waveforms: vec![Waveform::Sine],
            noise_sigma: 0.0,
            max_slope: 0.0,
            shift_range: (0.0, 0.0),
            ..CorpusConfig::default()
        },
        ..BenchConfig::default()
    }
}

#[test]
fn one_clean_trial_is_perfect_everywhere() {
    let report = run_benchmark(&[(0.0, 0.0)], 1, &Algorithm::ALL, &clean_bench()).unwrap();
    assert_eq!(report.cells.len(), 4);
    for c in &report.cells {
        assert_eq!(c.precision, 1.0, "{:?}", c.algorithm);
        assert_eq!(c.trials, 1);
        assert_eq!(c.errors, 0);
    }
}

#[test]
fn report_is_independent_of_thread_count() {
    let cfg = BenchConfig {
        detect: DetectConfig {
            use_m_periodogram: false,
            ..DetectConfig::default()
        },
        ..BenchConfig::default()
    };
    let grid = [(0.0, 0.0), (0.3, 0.05)];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_benchmark(&grid, 6, &Algorithm::ALL, &cfg).unwrap().without_timing())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn report_shapes() {
    let cfg = clean_bench();
    let algs = Algorithm::parse_list("proposed,lomb").unwrap();
    let report = run_benchmark(&default_grid(), 1, &algs, &cfg).unwrap();
    assert_eq!(report.cells.len(), 18);
    for &(mr, or) in &default_grid() {
        let rows: Vec<_> = report
            .cells
            .iter()
            .filter(|c| c.missing_ratio == mr && c.outlier_ratio == or)
            .collect();
        assert_eq!(rows.len(), 2);
    }
    let text = report.to_text();
    assert!(text.contains("MR=0.3 OR=0.05"));
    assert_eq!(text.lines().filter(|l| l.starts_with("proposed")).count(), 3);
    let report = report.without_timing();
    let back: PrecisionReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn bad_benchmark_arguments() {
    let cfg = BenchConfig::default();
    assert!(matches!(run_benchmark(&default_grid(), 0, &Algorithm::ALL, &cfg), Err(Error::Config(_))));
    assert!(run_benchmark(&[], 1, &Algorithm::ALL, &cfg).is_err());
    assert!(run_benchmark(&[(0.6, 0.0)], 1, &Algorithm::ALL, &cfg).is_err());
    assert!(Algorithm::parse_list("proposed,nope").is_err());
    assert!(Algorithm::parse_list(" , ").is_err());
    assert_eq!(
        Algorithm::parse_list("lomb, acf-med,lomb").unwrap(),
        vec![Algorithm::Lomb, Algorithm::AcfMed]
    );
}
