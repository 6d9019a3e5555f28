//! Non-learned stochasticity baseline.
//!
//! The light of an event is apportioned to fixed-length segments along the
//! track. Two statistics summarize how uneven that profile is:
//!
//! - the pseudo-χ²: sum of squared residuals of a least-squares line through
//!   the light of 120 m segments;
//! - the peak ratio: largest 50 m segment divided by the mean (or median)
//!   segment.
//!
//! An event is called signal when both statistics pass their cuts. Cuts are
//! tuned by grid search for the largest signal rate at a target
//! signal-to-noise ratio.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, DetectorGeometry};
use crate::metrics::ScoredEvent;
use crate::sim::{Event, Label, Track};
use crate::stats::{median, quantile_sorted};

pub const CHI2_SEGMENT_LENGTH: f64 = 120.0;
pub const PEAK_SEGMENT_LENGTH: f64 = 50.0;
pub const DEFAULT_GRID: usize = 50;
/// Quantile levels kept to turn the two statistics into a single score.
pub const REFERENCE_LEVELS: usize = 201;

/// Light collected per track segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentProfile {
    /// Meters.
    pub segment_length: f64,
    /// Arc-length coordinate of each segment center, meters.
    pub centers: Vec<f64>,
    /// Photoelectrons per segment.
    pub light: Vec<f64>,
}

/// Denominator of the peak ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakStatistic {
    #[default]
    Mean,
    Median,
}

/// Segments covering the track's chord through `volume`; every hit adds its
/// `q_total` to the segment whose center is nearest to the hit's projection
/// on the track.
pub fn apportion_light(
    event: &Event,
    track: &Track,
    segment_length: f64,
    geometry: &DetectorGeometry,
    volume: &BoundingBox,
) -> Result<SegmentProfile> {
    if !(segment_length > 0.0) {
        return Err(Error::Domain(format!("segment length {segment_length} must be positive")));
    }
    if event.hits.is_empty() {
        return Err(Error::Empty("event has no hits".into()));
    }
    let (t0, t1) = track.chord(volume).ok_or(Error::NoIntersection)?;
    let n = (libm::ceil((t1 - t0) / segment_length) as usize).max(1);
    let centers: Vec<f64> = (0..n).map(|k| t0 + (k as f64 + 0.5) * segment_length).collect();
    let mut light = alloc::vec![0.0; n];
    for hit in &event.hits {
        let s = track.project(geometry.position(hit.dom_id)?);
        let k = libm::floor((s - t0) / segment_length);
        let k = if k < 0.0 { 0 } else { (k as usize).min(n - 1) };
        light[k] += hit.q_total;
    }
    Ok(SegmentProfile {
        segment_length,
        centers,
        light,
    })
}

/// Sum of squared residuals of the ordinary least-squares line of light
/// against segment center.
pub fn pseudo_chi2(profile: &SegmentProfile) -> Result<f64> {
    let n = profile.light.len();
    if n < 2 || profile.centers.len() != n {
        return Err(Error::Empty(format!("pseudo-chi2 needs at least 2 segments, got {n}")));
    }
    let nf = n as f64;
    let mx = profile.centers.iter().sum::<f64>() / nf;
    let my = profile.light.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in profile.centers.iter().zip(&profile.light) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    Ok(profile
        .centers
        .iter()
        .zip(&profile.light)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum())
}

/// Largest segment divided by the mean of all segments (zeros included).
pub fn peak_mean_ratio(profile: &SegmentProfile) -> Result<f64> {
    peak_ratio(profile, PeakStatistic::Mean)
}

pub fn peak_ratio(profile: &SegmentProfile, statistic: PeakStatistic) -> Result<f64> {
    let peak = profile.light.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Empty("profile has no light".into()));
    }
    let denom = match statistic {
        PeakStatistic::Mean => profile.light.iter().sum::<f64>() / profile.light.len() as f64,
        PeakStatistic::Median => median(&profile.light),
    };
    if !(denom > 0.0) {
        return Err(Error::Domain("peak ratio denominator is zero".into()));
    }
    Ok(peak / denom)
}

/// Per-event baseline statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineStats {
    pub chi2: f64,
    pub peak_ratio: f64,
    pub cos_zenith: f64,
    pub total_charge: f64,
}

impl BaselineStats {
    pub fn compute(
        event: &Event,
        geometry: &DetectorGeometry,
        volume: &BoundingBox,
        statistic: PeakStatistic,
    ) -> Result<Self> {
        let track = &event.truth;
        let chi2 = pseudo_chi2(&apportion_light(event, track, CHI2_SEGMENT_LENGTH, geometry, volume)?)?;
        let peak = peak_ratio(
            &apportion_light(event, track, PEAK_SEGMENT_LENGTH, geometry, volume)?,
            statistic,
        )?;
        Ok(BaselineStats {
            chi2,
            peak_ratio: peak,
            cos_zenith: track.cos_zenith(),
            total_charge: event.total_charge(),
        })
    }

    /// Like [`BaselineStats::compute`], but events whose statistics are
    /// undefined (short chord, no light) get `−∞` and fail every finite cut.
    pub fn compute_or_floor(
        event: &Event,
        geometry: &DetectorGeometry,
        volume: &BoundingBox,
        statistic: PeakStatistic,
    ) -> Result<Self> {
        match BaselineStats::compute(event, geometry, volume, statistic) {
            Ok(s) => Ok(s),
            Err(Error::UnknownDom(id)) => Err(Error::UnknownDom(id)),
            Err(_) => Ok(BaselineStats {
                chi2: f64::NEG_INFINITY,
                peak_ratio: f64::NEG_INFINITY,
                cos_zenith: event.truth.cos_zenith(),
                total_charge: event.total_charge(),
            }),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.chi2.is_finite() && self.peak_ratio.is_finite()
    }
}

/// Thresholds of the baseline selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineCuts {
    pub chi2_min: f64,
    pub pm_min: f64,
    /// Optional extra cut on the arrival direction.
    pub cos_zenith_min: Option<f64>,
    /// Optional extra cut on the total charge, photoelectrons.
    pub total_charge_min: Option<f64>,
}

impl BaselineCuts {
    pub fn new(chi2_min: f64, pm_min: f64) -> Self {
        BaselineCuts {
            chi2_min,
            pm_min,
            cos_zenith_min: None,
            total_charge_min: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi2_min.is_nan() || self.pm_min.is_nan() {
            return Err(Error::Validation("cuts must not be NaN".into()));
        }
        Ok(())
    }

    pub fn passes(&self, s: &BaselineStats) -> bool {
        s.chi2 >= self.chi2_min
            && s.peak_ratio >= self.pm_min
            && self.cos_zenith_min.is_none_or(|c| s.cos_zenith >= c)
            && self.total_charge_min.is_none_or(|q| s.total_charge >= q)
    }
}

/// Signal iff both stochasticity statistics (and any optional extra cut)
/// pass, using the event's truth track.
pub fn baseline_classify(event: &Event, cuts: &BaselineCuts, geometry: &DetectorGeometry) -> Result<Label> {
    cuts.validate()?;
    let volume = geometry.bounding_box()?;
    let stats = BaselineStats::compute(event, geometry, &volume, PeakStatistic::Mean)?;
    Ok(classify_stats(&stats, cuts))
}

pub fn classify_stats(stats: &BaselineStats, cuts: &BaselineCuts) -> Label {
    if cuts.passes(stats) {
        Label::Signal
    } else {
        Label::Background
    }
}

/// Baseline statistics of one event with its class and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledStats {
    pub stats: BaselineStats,
    pub label: Label,
    pub weight: f64,
}

/// Selected rates of a set of cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPerformance {
    pub signal_per_year: f64,
    pub background_per_year: f64,
    pub snr: f64,
    pub feasible: bool,
}

pub fn cut_performance(events: &[LabeledStats], cuts: &BaselineCuts, target_snr: f64) -> CutPerformance {
    let (mut sig, mut bkg) = (0.0, 0.0);
    for e in events.iter().filter(|e| cuts.passes(&e.stats)) {
        match e.label {
            Label::Signal => sig += e.weight,
            Label::Background => bkg += e.weight,
        }
    }
    let snr = if bkg > 0.0 {
        sig / bkg
    } else if sig > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    CutPerformance {
        signal_per_year: sig,
        background_per_year: bkg,
        snr,
        feasible: snr >= target_snr,
    }
}

/// `levels` evenly spaced quantiles (from the minimum up) of the defined
/// values of a statistic.
fn quantile_grid(values: &mut Vec<f64>, levels: usize) -> Vec<f64> {
    values.retain(|v| v.is_finite());
    values.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = (0..levels)
        .map(|k| quantile_sorted(values, k as f64 / levels as f64))
        .filter(|v| !v.is_nan())
        .collect();
    grid.dedup();
    grid
}

/// Grid search over `(chi2_min, pm_min)` on `grid × grid` quantiles of the
/// two statistics, maximizing signal per year subject to
/// `snr ≥ target_snr`. Ties on signal go to the higher snr, then to the
/// earlier grid cell. Without a feasible cell, the cell with the highest
/// snr is returned.
pub fn tune_cuts(events: &[LabeledStats], target_snr: f64, grid: usize) -> Result<(BaselineCuts, CutPerformance)> {
    if !events.iter().any(|e| e.label.is_signal()) || !events.iter().any(|e| !e.label.is_signal()) {
        return Err(Error::Empty("cut tuning needs both classes".into()));
    }
    if grid == 0 {
        return Err(Error::Config("grid must have at least one level".into()));
    }
    let chi2_grid = quantile_grid(&mut events.iter().map(|e| e.stats.chi2).collect(), grid);
    let pm_grid = quantile_grid(&mut events.iter().map(|e| e.stats.peak_ratio).collect(), grid);
    if chi2_grid.is_empty() || pm_grid.is_empty() {
        return Err(Error::Empty("no event has defined baseline statistics".into()));
    }
    let mut best_feasible: Option<(BaselineCuts, CutPerformance)> = None;
    let mut best_snr: Option<(BaselineCuts, CutPerformance)> = None;
    for &c in &chi2_grid {
        for &p in &pm_grid {
            let cuts = BaselineCuts::new(c, p);
            let perf = cut_performance(events, &cuts, target_snr);
            if perf.feasible {
                let better = best_feasible.as_ref().is_none_or(|(_, b)| {
                    perf.signal_per_year > b.signal_per_year
                        || (perf.signal_per_year == b.signal_per_year && perf.snr > b.snr)
                });
                if better {
                    best_feasible = Some((cuts, perf));
                }
            }
            let better = best_snr.as_ref().is_none_or(|(_, b)| {
                perf.snr > b.snr || (perf.snr == b.snr && perf.signal_per_year > b.signal_per_year)
            });
            if better {
                best_snr = Some((cuts, perf));
            }
        }
    }
    best_feasible
        .or(best_snr)
        .ok_or_else(|| Error::Internal("empty cut grid".into()))
}

/// Empirical distribution of a statistic, stored as evenly spaced quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileReference {
    pub quantiles: Vec<f64>,
}

impl QuantileReference {
    pub fn fit(values: &[f64], levels: usize) -> Result<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() || levels < 2 {
            return Err(Error::Empty("no defined values for the quantile reference".into()));
        }
        v.sort_by(f64::total_cmp);
        Ok(QuantileReference {
            quantiles: (0..levels)
                .map(|k| quantile_sorted(&v, k as f64 / (levels - 1) as f64))
                .collect(),
        })
    }

    /// Piecewise-linear CDF through the stored quantiles; non-decreasing.
    pub fn cdf(&self, x: f64) -> f64 {
        let q = &self.quantiles;
        let last = q.len() - 1;
        if x.is_nan() || x < q[0] {
            return 0.0;
        }
        if x >= q[last] {
            return 1.0;
        }
        // Largest i with q[i] <= x.
        let i = q.partition_point(|&v| v <= x) - 1;
        let span = q[i + 1] - q[i];
        let frac = if span > 0.0 { (x - q[i]) / span } else { 0.0 };
        (i as f64 + frac) / last as f64
    }
}

/// Tuned cuts plus the references that map the two statistics onto a single
/// score `min(F_chi2(chi2), F_peak(peak))`, for ROC comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub cuts: BaselineCuts,
    pub statistic: PeakStatistic,
    pub chi2_reference: QuantileReference,
    pub peak_reference: QuantileReference,
}

impl BaselineModel {
    pub fn score(&self, stats: &BaselineStats) -> f64 {
        self.chi2_reference
            .cdf(stats.chi2)
            .min(self.peak_reference.cdf(stats.peak_ratio))
    }

    pub fn scored(&self, events: &[LabeledStats]) -> Vec<ScoredEvent> {
        events
            .iter()
            .map(|e| ScoredEvent {
                score: self.score(&e.stats),
                label: e.label,
                weight: e.weight,
            })
            .collect()
    }
}

/// Statistics of every event, in order.
pub fn labeled_stats(
    events: &[Event],
    geometry: &DetectorGeometry,
    statistic: PeakStatistic,
) -> Result<Vec<LabeledStats>> {
    let volume = geometry.bounding_box()?;
    events
        .iter()
        .map(|e| {
            Ok(LabeledStats {
                stats: BaselineStats::compute_or_floor(e, geometry, &volume, statistic)?,
                label: e.label,
                weight: e.weight,
            })
        })
        .collect()
}

/// Tunes cuts on `events` and fits the score references.
pub fn fit_baseline(
    events: &[LabeledStats],
    target_snr: f64,
    grid: usize,
    statistic: PeakStatistic,
) -> Result<(BaselineModel, CutPerformance)> {
    let (cuts, perf) = tune_cuts(events, target_snr, grid)?;
    let chi2: Vec<f64> = events.iter().map(|e| e.stats.chi2).collect();
    let peak: Vec<f64> = events.iter().map(|e| e.stats.peak_ratio).collect();
    Ok((
        BaselineModel {
            cuts,
            statistic,
            chi2_reference: QuantileReference::fit(&chi2, REFERENCE_LEVELS)?,
            peak_reference: QuantileReference::fit(&peak, REFERENCE_LEVELS)?,
        },
        perf,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_standard_geometry;
    use crate::sim::Hit;
    use alloc::vec;

    fn profile(light: &[f64]) -> SegmentProfile {
        SegmentProfile {
            segment_length: 1.0,
            centers: (0..light.len()).map(|k| k as f64).collect(),
            light: light.to_vec(),
        }
    }

    #[test]
    fn chi2_of_line_and_constant() {
        assert!(pseudo_chi2(&profile(&[1.0, 3.0, 5.0, 7.0])).unwrap() < 1e-9);
        assert!(pseudo_chi2(&profile(&[4.0; 6])).unwrap() < 1e-9);
        assert!(pseudo_chi2(&profile(&[4.0])).is_err());
    }

    #[test]
    fn chi2_spike_by_hand() {
        // x = 0..4, y = (0,0,10,0,0): mean y 2, slope 0 by symmetry, so the
        // residuals are (-2,-2,8,-2,-2) and their squares sum to 80.
        assert!((pseudo_chi2(&profile(&[0.0, 0.0, 10.0, 0.0, 0.0])).unwrap() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn peak_ratios() {
        assert_eq!(peak_mean_ratio(&profile(&[2.0, 2.0, 2.0])).unwrap(), 1.0);
        assert_eq!(peak_mean_ratio(&profile(&[0.0, 0.0, 12.0, 0.0])).unwrap(), 4.0);
        assert!(peak_mean_ratio(&profile(&[0.0, 0.0])).is_err());
        assert_eq!(peak_ratio(&profile(&[1.0, 2.0, 8.0]), PeakStatistic::Median).unwrap(), 4.0);
    }

    fn event_on_string(hits: Vec<Hit>) -> Event {
        Event {
            hits,
            weight: 1.0,
            label: Label::Signal,
            truth: Track {
                anchor: [0.0, 0.0, -1400.0],
                direction: [0.0, 0.0, -1.0],
                energy: 1e4,
            },
            multiplicity: 1,
        }
    }

    fn hit(dom_id: u32, q: f64) -> Hit {
        Hit {
            dom_id,
            q_first: q,
            q_total: q,
            t_first: 0.0,
        }
    }

    #[test]
    fn single_and_shared_segments() {
        let g = build_standard_geometry();
        let volume = g.bounding_box().unwrap();
        // String 0 sits at the origin; its modules project onto the vertical track.
        let e = event_on_string(vec![hit(10, 5.0)]);
        let p = apportion_light(&e, &e.truth, 50.0, &g, &volume).unwrap();
        assert_eq!(p.light.iter().filter(|&&l| l > 0.0).count(), 1);
        let e = event_on_string(vec![hit(10, 5.0), hit(11, 2.0)]);
        let p = apportion_light(&e, &e.truth, 120.0, &g, &volume).unwrap();
        assert_eq!(p.light.iter().copied().fold(0.0, f64::max), 7.0);
    }

    #[test]
    fn missing_track_is_an_error() {
        let g = build_standard_geometry();
        let volume = g.bounding_box().unwrap();
        let mut e = event_on_string(vec![hit(10, 5.0)]);
        e.truth.anchor = [1e5, 0.0, 0.0];
        assert_eq!(
            apportion_light(&e, &e.truth, 50.0, &g, &volume).unwrap_err(),
            Error::NoIntersection
        );
    }

    #[test]
    fn vacuous_and_impossible_cuts() {
        let s = BaselineStats {
            chi2: 3.0,
            peak_ratio: 1.5,
            cos_zenith: 0.5,
            total_charge: 10.0,
        };
        assert_eq!(classify_stats(&s, &BaselineCuts::new(f64::NEG_INFINITY, f64::NEG_INFINITY)), Label::Signal);
        assert_eq!(classify_stats(&s, &BaselineCuts::new(f64::INFINITY, f64::INFINITY)), Label::Background);
        let mut cuts = BaselineCuts::new(0.0, 0.0);
        cuts.total_charge_min = Some(20.0);
        assert_eq!(classify_stats(&s, &cuts), Label::Background);
    }

    #[test]
    fn separable_tuning_keeps_all_signal() {
        let mut events = Vec::new();
        for k in 0..20 {
            let signal = k % 2 == 0;
            let v = if signal { 100.0 + k as f64 } else { k as f64 };
            events.push(LabeledStats {
                stats: BaselineStats {
                    chi2: v,
                    peak_ratio: v / 10.0 + 1.0,
                    cos_zenith: 1.0,
                    total_charge: 1.0,
                },
                label: if signal { Label::Signal } else { Label::Background },
                weight: 1.0 + k as f64,
            });
        }
        let (cuts, perf) = tune_cuts(&events, 1.0, 50).unwrap();
        let total_signal: f64 = events.iter().filter(|e| e.label.is_signal()).map(|e| e.weight).sum();
        assert_eq!(perf.signal_per_year, total_signal);
        assert_eq!(perf.background_per_year, 0.0);
        let scaled: Vec<LabeledStats> = events.iter().map(|e| LabeledStats { weight: 7.0 * e.weight, ..*e }).collect();
        assert_eq!(tune_cuts(&scaled, 1.0, 50).unwrap().0, cuts);
    }

    #[test]
    fn reference_cdf_is_monotone() {
        let r = QuantileReference::fit(&[1.0, 2.0, 2.0, 3.0, 10.0], 11).unwrap();
        let mut prev = -1.0;
        for k in 0..200 {
            let c = r.cdf(k as f64 * 0.06);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(r.cdf(0.5), 0.0);
        assert_eq!(r.cdf(10.0), 1.0);
    }
}
