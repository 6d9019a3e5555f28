mod common;

use icegraph_core::baseline::{
    apportion_light, baseline_classify, classify_stats, cut_performance, labeled_stats, pseudo_chi2, tune_cuts,
    BaselineCuts, BaselineStats, LabeledStats, PeakStatistic, SegmentProfile, CHI2_SEGMENT_LENGTH,
};
use icegraph_core::exec::Sequential;
use icegraph_core::geometry::build_standard_geometry;
use icegraph_core::sim::Simulator;
use icegraph_core::stats::quantile_sorted;
use icegraph_core::{Label, SimConfig};

fn dataset(seed: u64, n_signal: usize, n_background: usize) -> (icegraph_core::DetectorGeometry, Vec<icegraph_core::Event>) {
    let geometry = build_standard_geometry();
    let events = Simulator::new(SimConfig { seed, ..SimConfig::default() }, &geometry)
        .unwrap()
        .generate_dataset(n_signal, n_background, &Sequential)
        .unwrap();
    (geometry, events)
}

#[test]
fn apportioning_matches_nearest_center_search() {
    let (geometry, events) = dataset(61, 20, 20);
    let volume = geometry.bounding_box().unwrap();
    for event in &events {
        for length in [50.0, 120.0] {
            let Ok(profile) = apportion_light(event, &event.truth, length, &geometry, &volume) else {
                continue;
            };
            let mut light = vec![0.0; profile.centers.len()];
            for hit in &event.hits {
                let s = event.truth.project(geometry.position(hit.dom_id).unwrap());
                let mut best = 0;
                for (k, c) in profile.centers.iter().enumerate() {
                    // Strictly nearer only: a hit on a boundary goes to the later segment.
                    if (s - c).abs() < (s - profile.centers[best]).abs()
                        || ((s - c).abs() == (s - profile.centers[best]).abs() && k > best)
                    {
                        best = k;
                    }
                }
                light[best] += hit.q_total;
            }
            for (a, b) in light.iter().zip(&profile.light) {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
            let total: f64 = profile.light.iter().sum();
            assert!((total - event.total_charge()).abs() <= 1e-9 * total);
        }
    }
}

#[test]
fn chi2_of_quadratic_profile() {
    // Best line through y = x² at x = 0..3 is y = 3x - 1, residuals (1, -1, -1, 1).
    let profile = SegmentProfile {
        segment_length: 1.0,
        centers: vec![0.0, 1.0, 2.0, 3.0],
        light: vec![0.0, 1.0, 4.0, 9.0],
    };
    assert!((pseudo_chi2(&profile).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn classify_is_composition_of_stats_and_cuts() {
    let (geometry, events) = dataset(62, 20, 20);
    let volume = geometry.bounding_box().unwrap();
    let cuts = BaselineCuts::new(50.0, 2.0);
    for event in &events {
        match BaselineStats::compute(event, &geometry, &volume, PeakStatistic::Mean) {
            Ok(stats) => assert_eq!(baseline_classify(event, &cuts, &geometry).unwrap(), classify_stats(&stats, &cuts)),
            Err(_) => assert!(baseline_classify(event, &cuts, &geometry).is_err()),
        }
    }
    let profile = apportion_light(&events[0], &events[0].truth, CHI2_SEGMENT_LENGTH, &geometry, &volume);
    assert!(profile.is_ok());
}

fn exhaustive_best(events: &[LabeledStats], target: f64, grid: usize) -> f64 {
    let axis = |f: fn(&LabeledStats) -> f64| -> Vec<f64> {
        let mut v: Vec<f64> = events.iter().map(f).filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        (0..grid).map(|k| quantile_sorted(&v, k as f64 / grid as f64)).collect()
    };
    let chi2 = axis(|e| e.stats.chi2);
    let pm = axis(|e| e.stats.peak_ratio);
    let mut best = 0.0;
    for &c in &chi2 {
        for &p in &pm {
            let perf = cut_performance(events, &BaselineCuts::new(c, p), target);
            if perf.feasible && perf.signal_per_year > best {
                best = perf.signal_per_year;
            }
        }
    }
    best
}

#[test]
fn tuning_matches_exhaustive_search() {
    let (geometry, events) = dataset(63, 300, 600);
    let stats = labeled_stats(&events, &geometry, PeakStatistic::Mean).unwrap();
    let (cuts, perf) = tune_cuts(&stats, 1.0, 50).unwrap();
    assert!(perf.feasible);
    assert_eq!(perf, cut_performance(&stats, &cuts, 1.0));
    assert_eq!(perf.signal_per_year, exhaustive_best(&stats, 1.0, 50));

    // The 200-level grid contains the 50-level one.
    let (_, fine) = tune_cuts(&stats, 1.0, 200).unwrap();
    assert_eq!(fine.signal_per_year, exhaustive_best(&stats, 1.0, 200));
    assert!(fine.signal_per_year >= perf.signal_per_year);
    println!(
        "signal per year: 50 levels {}, 200 levels {} ({:+.1}%)",
        perf.signal_per_year,
        fine.signal_per_year,
        100.0 * (fine.signal_per_year / perf.signal_per_year - 1.0)
    );
}

#[test]
fn tuning_is_deterministic_and_respects_target() {
    let (geometry, events) = dataset(64, 100, 200);
    let stats = labeled_stats(&events, &geometry, PeakStatistic::Median).unwrap();
    for target in [0.5, 1.0, 2.0] {
        let a = tune_cuts(&stats, target, 20).unwrap();
        let b = tune_cuts(&stats, target, 20).unwrap();
        assert_eq!(a, b);
        if a.1.feasible {
            assert!(a.1.snr >= target);
        }
    }
    assert!(stats.iter().any(|s| s.label == Label::Signal));
}
