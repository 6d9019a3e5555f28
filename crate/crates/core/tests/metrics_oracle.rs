mod common;

use icegraph_core::metrics::{auc, operating_point, weighted_roc, OperatingPoint, RocPoint, ScoredEvent};
use icegraph_core::Label;
use rand::Rng;

use common::rng;

/// Scores on a coarse grid (many ties) or continuous, integer weights so
/// every sum is exact whatever the summation order.
fn instance(case: u64) -> Vec<ScoredEvent> {
    let mut r = rng(51, case);
    let n = if case % 2 == 0 { r.random_range(2..=10_000) } else { r.random_range(2..=1_500) };
    let levels = r.random_range(2..=300);
    let mut events: Vec<ScoredEvent> = (0..n)
        .map(|_| {
            let signal = r.random_bool(0.3);
            let score: f64 = if case % 2 == 0 {
                r.random_range(0..levels) as f64 / levels as f64
            } else {
                r.random()
            };
            ScoredEvent {
                score: if signal { score.max(r.random()) } else { score },
                label: if signal { Label::Signal } else { Label::Background },
                weight: r.random_range(1..=1000) as f64,
            }
        })
        .collect();
    events[0].label = Label::Signal;
    events[1].label = Label::Background;
    events
}

fn selected(events: &[ScoredEvent], tau: f64) -> (f64, f64) {
    let mut sig = 0.0;
    let mut bkg = 0.0;
    for e in events {
        if e.score >= tau {
            match e.label {
                Label::Signal => sig += e.weight,
                Label::Background => bkg += e.weight,
            }
        }
    }
    (sig, bkg)
}

fn brute_roc(events: &[ScoredEvent]) -> Vec<RocPoint> {
    let (s_tot, b_tot) = selected(events, f64::NEG_INFINITY);
    let mut taus: Vec<f64> = events.iter().map(|e| e.score).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let mut roc = vec![RocPoint { threshold: f64::NEG_INFINITY, tpr: 1.0, fpr: 1.0 }];
    for tau in taus {
        let (s, b) = selected(events, tau);
        roc.push(RocPoint { threshold: tau, tpr: s / s_tot, fpr: b / b_tot });
    }
    roc.push(RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 });
    roc
}

fn brute_operating_point(events: &[ScoredEvent], target: f64) -> OperatingPoint {
    let mut taus: Vec<f64> = events.iter().map(|e| e.score).collect();
    taus.sort_by(|a, b| b.total_cmp(a));
    taus.dedup();
    let points: Vec<OperatingPoint> = taus
        .iter()
        .map(|&tau| {
            let (s, b) = selected(events, tau);
            let snr = if b > 0.0 { s / b } else { f64::INFINITY };
            OperatingPoint { threshold: tau, signal_per_year: s, background_per_year: b, snr, feasible: snr >= target }
        })
        .collect();
    let mut best: Option<OperatingPoint> = None;
    for p in points.iter().filter(|p| p.feasible) {
        if best.is_none_or(|b| p.signal_per_year > b.signal_per_year || (p.signal_per_year == b.signal_per_year && p.snr > b.snr)) {
            best = Some(*p);
        }
    }
    if best.is_none() {
        for p in &points {
            if best.is_none_or(|b| p.snr > b.snr || (p.snr == b.snr && p.signal_per_year > b.signal_per_year)) {
                best = Some(*p);
            }
        }
    }
    best.unwrap()
}

#[test]
fn roc_and_operating_point_match_enumeration() {
    for case in 0..50u64 {
        let events = instance(case);
        let roc = weighted_roc(&events).unwrap();
        assert_eq!(roc, brute_roc(&events), "case {case}");
        for target in [0.5, 1.0, 3.0] {
            let op = operating_point(&events, target).unwrap();
            assert_eq!(op, brute_operating_point(&events, target), "case {case} target {target}");
        }
    }
}

#[test]
fn auc_matches_pairwise_probability() {
    for case in 0..10u64 {
        let mut events = instance(100 + case);
        events.truncate(800);
        let mut concordant = 0.0;
        let mut total = 0.0;
        for s in events.iter().filter(|e| e.label == Label::Signal) {
            for b in events.iter().filter(|e| e.label == Label::Background) {
                let w = s.weight * b.weight;
                total += w;
                concordant += w * if s.score > b.score {
                    1.0
                } else if s.score == b.score {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let a = auc(&weighted_roc(&events).unwrap());
        assert!((a - concordant / total).abs() < 1e-12, "case {case}: {a} vs {}", concordant / total);
    }
}

#[test]
fn roc_is_monotone() {
    for case in 0..20u64 {
        let roc = weighted_roc(&instance(200 + case)).unwrap();
        for w in roc.windows(2) {
            assert!(w[0].threshold < w[1].threshold);
            assert!(w[0].tpr >= w[1].tpr && w[0].fpr >= w[1].fpr);
        }
    }
}
