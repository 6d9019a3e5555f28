//! Weighted classifier evaluation.
//!
//! Every count is a sum of event weights, so rates are in events per year.
//! An event is selected at threshold `τ` when `score ≥ τ`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::DetectorGeometry;
use crate::graph::GraphInput;
use crate::model::GnnModel;
use crate::sim::{Event, Label};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEvent {
    pub score: f64,
    pub label: Label,
    /// Events per year.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Selected rates at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub signal_per_year: f64,
    pub background_per_year: f64,
    /// `signal / background`, `+∞` when no background is selected.
    pub snr: f64,
    /// Whether the target signal-to-noise ratio is met.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sorted by ascending threshold, from `−∞` (everything selected) to `+∞`.
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub operating: OperatingPoint,
}

fn check_scored(scored: &[ScoredEvent]) -> Result<()> {
    for (i, e) in scored.iter().enumerate() {
        if e.score.is_nan() {
            return Err(Error::Validation(format!("event {i} has a NaN score")));
        }
        if !(e.weight >= 0.0 && e.weight.is_finite()) {
            return Err(Error::Validation(format!("event {i} has weight {}", e.weight)));
        }
    }
    Ok(())
}

/// Cumulative selected weight at each distinct score, scanning from the
/// highest score down: `(threshold, signal, background)`.
fn cumulative_by_threshold(scored: &[ScoredEvent]) -> Vec<(f64, f64, f64)> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].score.total_cmp(&scored[a].score));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    let (mut sig, mut bkg) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let tau = scored[order[k]].score;
        while k < order.len() && scored[order[k]].score == tau {
            let e = &scored[order[k]];
            match e.label {
                Label::Signal => sig += e.weight,
                Label::Background => bkg += e.weight,
            }
            k += 1;
        }
        out.push((tau, sig, bkg));
    }
    out
}

fn class_totals(scored: &[ScoredEvent]) -> (f64, f64) {
    scored.iter().fold((0.0, 0.0), |(s, b), e| match e.label {
        Label::Signal => (s + e.weight, b),
        Label::Background => (s, b + e.weight),
    })
}

/// Weighted ROC with a point at every distinct score plus the `±∞` sentinels.
pub fn weighted_roc(scored: &[ScoredEvent]) -> Result<Vec<RocPoint>> {
    check_scored(scored)?;
    let (sig_total, bkg_total) = class_totals(scored);
    let n_sig = scored.iter().filter(|e| e.label.is_signal()).count();
    if n_sig == 0 || n_sig == scored.len() || !(sig_total > 0.0) || !(bkg_total > 0.0) {
        return Err(Error::Empty("ROC needs weighted events of both classes".into()));
    }
    let mut roc = Vec::with_capacity(scored.len() + 2);
    roc.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        tpr: 1.0,
        fpr: 1.0,
    });
    for (tau, sig, bkg) in cumulative_by_threshold(scored).into_iter().rev() {
        roc.push(RocPoint {
            threshold: tau,
            tpr: sig / sig_total,
            fpr: bkg / bkg_total,
        });
    }
    roc.push(RocPoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
    });
    Ok(roc)
}

/// Trapezoidal area under TPR(FPR).
pub fn auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| (w[0].fpr - w[1].fpr).abs() * 0.5 * (w[0].tpr + w[1].tpr))
        .sum()
}

/// Among thresholds at the observed scores, the one selecting the most
/// signal per year while keeping `snr ≥ target_snr`. Ties on signal go to
/// the higher snr, then to the higher threshold. When no threshold is
/// feasible, the one with the highest snr is returned with
/// `feasible = false`.
pub fn operating_point(scored: &[ScoredEvent], target_snr: f64) -> Result<OperatingPoint> {
    check_scored(scored)?;
    if scored.is_empty() {
        return Err(Error::Empty("no scored events".into()));
    }
    if !scored.iter().any(|e| e.label.is_signal()) {
        return Err(Error::Empty("operating point needs signal events".into()));
    }
    let mut best_feasible: Option<OperatingPoint> = None;
    let mut best_snr: Option<OperatingPoint> = None;
    // Descending thresholds: on full ties the first (highest) one is kept.
    for (tau, sig, bkg) in cumulative_by_threshold(scored) {
        let snr = if bkg > 0.0 { sig / bkg } else { f64::INFINITY };
        let point = OperatingPoint {
            threshold: tau,
            signal_per_year: sig,
            background_per_year: bkg,
            snr,
            feasible: snr >= target_snr,
        };
        if point.feasible {
            let better = match &best_feasible {
                None => true,
                Some(b) => sig > b.signal_per_year || (sig == b.signal_per_year && snr > b.snr),
            };
            if better {
                best_feasible = Some(point);
            }
        }
        let better = match &best_snr {
            None => true,
            Some(b) => snr > b.snr || (snr == b.snr && sig > b.signal_per_year),
        };
        if better {
            best_snr = Some(point);
        }
    }
    best_feasible
        .or(best_snr)
        .ok_or_else(|| Error::Empty("no candidate thresholds".into()))
}

/// Value used for model selection: signal per year at the operating point,
/// or 0 when the target cannot be met.
pub fn selection_metric(point: &OperatingPoint) -> f64 {
    if point.feasible {
        point.signal_per_year
    } else {
        0.0
    }
}

/// Fraction of total weight classified correctly at `threshold`.
pub fn weighted_accuracy(scored: &[ScoredEvent], threshold: f64) -> f64 {
    let (mut right, mut total) = (0.0, 0.0);
    for e in scored {
        let predicted_signal = e.score >= threshold;
        if predicted_signal == e.label.is_signal() {
            right += e.weight;
        }
        total += e.weight;
    }
    right / total
}

pub fn report_from_scores(scored: &[ScoredEvent], target_snr: f64) -> Result<EvalReport> {
    let roc = weighted_roc(scored)?;
    Ok(EvalReport {
        auc: auc(&roc),
        operating: operating_point(scored, target_snr)?,
        roc,
    })
}

/// Scores every event with the model, in input order.
pub fn score_events<E: Executor>(
    model: &GnnModel,
    events: &[Event],
    geometry: &DetectorGeometry,
    exec: &E,
) -> Result<Vec<ScoredEvent>> {
    exec.map(events.len(), |i| {
        let event = &events[i];
        let input = GraphInput::from_event(event, geometry, &model.normalizer)?;
        Ok(ScoredEvent {
            score: model.score(&input)?,
            label: event.label,
            weight: event.weight,
        })
    })
    .into_iter()
    .collect()
}

/// Scores, ROC, AUC and operating point of `model` on `events`.
pub fn evaluate<E: Executor>(
    model: &GnnModel,
    events: &[Event],
    geometry: &DetectorGeometry,
    target_snr: f64,
    exec: &E,
) -> Result<EvalReport> {
    let scored = score_events(model, events, geometry, exec)?;
    report_from_scores(&scored, target_snr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ev(score: f64, signal: bool, weight: f64) -> ScoredEvent {
        ScoredEvent {
            score,
            label: if signal { Label::Signal } else { Label::Background },
            weight,
        }
    }

    #[test]
    fn perfect_separation() {
        let scored = vec![ev(0.9, true, 1.0), ev(0.8, true, 2.0), ev(0.2, false, 1.0), ev(0.1, false, 3.0)];
        let roc = weighted_roc(&scored).unwrap();
        assert!(roc.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(auc(&roc), 1.0);
        let op = operating_point(&scored, 1.0).unwrap();
        assert_eq!(op.signal_per_year, 3.0);
        assert_eq!(op.background_per_year, 0.0);
        assert!(op.snr.is_infinite() && op.feasible);
    }

    #[test]
    fn inverted_scores() {
        let scored = vec![ev(0.1, true, 1.0), ev(0.2, true, 2.0), ev(0.8, false, 1.0), ev(0.9, false, 3.0)];
        assert_eq!(auc(&weighted_roc(&scored).unwrap()), 0.0);
    }

    #[test]
    fn hand_case_six_events() {
        // Signal weights {1,1,2} at scores {0.9,0.6,0.3}; background {1,1,2} at {0.8,0.5,0.2}.
        let scored = vec![
            ev(0.9, true, 1.0),
            ev(0.6, true, 1.0),
            ev(0.3, true, 2.0),
            ev(0.8, false, 1.0),
            ev(0.5, false, 1.0),
            ev(0.2, false, 2.0),
        ];
        let roc = weighted_roc(&scored).unwrap();
        let expected = [
            (f64::NEG_INFINITY, 1.0, 1.0),
            (0.2, 1.0, 1.0),
            (0.3, 1.0, 0.5),
            (0.5, 0.5, 0.5),
            (0.6, 0.5, 0.25),
            (0.8, 0.25, 0.25),
            (0.9, 0.25, 0.0),
            (f64::INFINITY, 0.0, 0.0),
        ];
        assert_eq!(roc.len(), expected.len());
        for (p, &(t, tpr, fpr)) in roc.iter().zip(&expected) {
            assert_eq!((p.threshold, p.tpr, p.fpr), (t, tpr, fpr));
        }
        // Trapezoids over fpr ∈ [0, .25], [.25, .5], [.5, 1].
        let by_hand = 0.25 * 0.25 + 0.25 * 0.5 + 0.5 * 1.0;
        assert!((auc(&roc) - by_hand).abs() < 1e-15);
        // Same number as the weighted fraction of correctly ordered pairs: 11/16.
        assert_eq!(by_hand, 11.0 / 16.0);
    }

    #[test]
    fn single_class_rejected() {
        assert!(weighted_roc(&[ev(0.4, true, 1.0), ev(0.5, true, 1.0)]).is_err());
        assert!(operating_point(&[], 1.0).is_err());
        assert!(operating_point(&[ev(0.3, false, 1.0)], 1.0).is_err());
    }

    #[test]
    fn infeasible_returns_best_snr() {
        let scored = vec![ev(0.9, false, 10.0), ev(0.8, true, 1.0), ev(0.7, false, 1.0), ev(0.6, true, 1.0)];
        let op = operating_point(&scored, 1.0).unwrap();
        assert!(!op.feasible);
        assert_eq!(op.threshold, 0.6);
        assert!((op.snr - 2.0 / 11.0).abs() < 1e-15);
        assert_eq!(selection_metric(&op), 0.0);
    }

    #[test]
    fn scaling_weights_scales_rates() {
        let scored = vec![ev(0.9, true, 1.0), ev(0.8, false, 1.0), ev(0.7, true, 3.0), ev(0.2, false, 5.0), ev(0.1, true, 1.0)];
        let scaled: Vec<ScoredEvent> = scored.iter().map(|e| ScoredEvent { weight: 10.0 * e.weight, ..*e }).collect();
        let a = operating_point(&scored, 1.0).unwrap();
        let b = operating_point(&scaled, 1.0).unwrap();
        assert_eq!(a.threshold, b.threshold);
        assert_eq!(10.0 * a.signal_per_year, b.signal_per_year);
        assert_eq!(10.0 * a.background_per_year, b.background_per_year);
        assert_eq!(a.snr, b.snr);
    }
}
