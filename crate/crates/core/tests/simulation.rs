mod common;

use icegraph_core::baseline::{labeled_stats, PeakStatistic};
use icegraph_core::exec::Sequential;
use icegraph_core::geometry::build_standard_geometry;
use icegraph_core::sim::{event_weight, sample_power_law, sample_track, Simulator};
use icegraph_core::stats::{mean, separation_in_standard_errors};
use icegraph_core::{Label, SimConfig};

use common::rng;

/// Closed-form power-law CDF on `[lo, hi]` for `index ≠ 1`.
fn cdf(e: f64, index: f64, lo: f64, hi: f64) -> f64 {
    let p = 1.0 - index;
    (e.powf(p) - lo.powf(p)) / (hi.powf(p) - lo.powf(p))
}

#[test]
fn power_law_samples_pass_ks() {
    let n = 10_000;
    for (case, index) in [1.5, 2.0, 2.7].into_iter().enumerate() {
        let mut r = rng(41, case as u64);
        let mut xs: Vec<f64> = (0..n).map(|_| sample_power_law(&mut r, index, (1e2, 1e6))).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x, index, 1e2, 1e6);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // Critical value at the 0.1% level.
        assert!(d < 1.95 / (n as f64).sqrt(), "index {index}: D = {d}");
    }
}

#[test]
fn weighted_energy_histogram_follows_true_spectrum() {
    let geometry = build_standard_geometry();
    let config = SimConfig::default();
    let spectrum = config.signal_spectrum();
    let volume = geometry.bounding_box().unwrap().inflated(200.0);
    let n = 10_000;
    let mut r = rng(42, 0);
    let (lo, hi) = spectrum.energy_range;
    let bins = 10;
    let edges: Vec<f64> = (0..=bins).map(|k| lo * (hi / lo).powf(k as f64 / bins as f64)).collect();
    let mut sum_w = vec![0.0; bins];
    let mut sum_w2 = vec![0.0; bins];
    let mut total = 0.0;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let track = sample_track(&mut r, &spectrum, &volume);
        let w = event_weight(track.energy, &spectrum).unwrap();
        total += w;
        samples.push((track.energy, w));
    }
    let scale = spectrum.annual_rate / total;
    for (e, w) in samples {
        let k = (((e / lo).ln() / (hi / lo).ln() * bins as f64) as usize).min(bins - 1);
        sum_w[k] += w * scale;
        sum_w2[k] += (w * scale).powi(2);
    }
    let index = spectrum.index_true;
    for k in 0..bins {
        let expected = spectrum.annual_rate * (cdf(edges[k + 1], index, lo, hi) - cdf(edges[k], index, lo, hi));
        let chi2 = (sum_w[k] - expected).powi(2) / sum_w2[k];
        assert!(chi2 < 3.0, "bin {k}: {} vs {expected}, chi2 {chi2}", sum_w[k]);
    }
}

#[test]
fn signal_is_more_stochastic_than_background() {
    let geometry = build_standard_geometry();
    let sim = Simulator::new(SimConfig::default(), &geometry).unwrap();
    let events = sim.generate_dataset(200, 200, &Sequential).unwrap();
    let stats = labeled_stats(&events, &geometry, PeakStatistic::Mean).unwrap();
    let pick = |label: Label, f: fn(&icegraph_core::baseline::BaselineStats) -> f64| -> Vec<f64> {
        stats
            .iter()
            .filter(|s| s.label == label && s.stats.is_defined())
            .map(|s| f(&s.stats))
            .collect()
    };
    let chi2_s = pick(Label::Signal, |s| s.chi2);
    let chi2_b = pick(Label::Background, |s| s.chi2);
    assert!(mean(&chi2_s) > mean(&chi2_b));
    assert!(separation_in_standard_errors(&chi2_s, &chi2_b) > 0.0);
}

#[test]
fn events_meet_contract() {
    let geometry = build_standard_geometry();
    let config = SimConfig { seed: 3, ..SimConfig::default() };
    let sim = Simulator::new(config.clone(), &geometry).unwrap();
    let events = sim.generate_dataset(30, 40, &Sequential).unwrap();
    assert_eq!(events.iter().filter(|e| e.label == Label::Signal).count(), 30);
    assert_eq!(events.iter().filter(|e| e.label == Label::Background).count(), 40);
    for e in &events {
        e.validate().unwrap();
        assert!(e.hits.len() >= config.min_hits);
        for h in &e.hits {
            geometry.dom(h.dom_id).unwrap();
        }
    }
    let rate = |l: Label| events.iter().filter(|e| e.label == l).map(|e| e.weight).sum::<f64>();
    assert!((rate(Label::Signal) - config.signal_rate).abs() < 1e-9);
    assert!((rate(Label::Background) - config.background_rate).abs() < 1e-9);
}
