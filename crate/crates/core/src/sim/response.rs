use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use super::{DepositSegment, Hit, SimConfig, LIGHT_SPEED, REFRACTIVE_INDEX, SCATTERING_DELAY};
use crate::geometry::{squared_distance, DetectorGeometry, StringColumn};

/// Distances below this are clamped in the `1/r²` law, meters.
const MIN_DISTANCE: f64 = 25.0;

#[inline]
fn light_factor(distance: f64, config: &SimConfig) -> f64 {
    let r = distance.max(MIN_DISTANCE);
    config.light_yield * libm::exp(-r / config.absorption_length) / (r * r)
}

/// Expected photoelectrons at `position`:
/// `Σ loss · light_yield · exp(−r/absorption_length) / r²`, `r ≥ 1 m`.
pub fn expected_charge_at(profile: &[DepositSegment], position: [f64; 3], config: &SimConfig) -> f64 {
    profile
        .iter()
        .filter(|s| s.loss > 0.0)
        .map(|s| s.loss * light_factor(libm::sqrt(squared_distance(s.center, position)), config))
        .sum()
}

/// Expected photoelectrons at every module, in geometry order.
pub fn expected_charges(profile: &[DepositSegment], geometry: &DetectorGeometry, config: &SimConfig) -> Vec<f64> {
    geometry
        .doms()
        .iter()
        .map(|d| expected_charge_at(profile, d.position, config))
        .collect()
}

/// Samples hits for every module with a non-zero Poisson charge.
///
/// Strings whose upper bound on the expected charge of any module is below
/// `1e-7` photoelectrons are skipped without drawing.
pub fn detector_response<R: Rng + ?Sized>(
    profile: &[DepositSegment],
    geometry: &DetectorGeometry,
    rng: &mut R,
    config: &SimConfig,
) -> Vec<Hit> {
    let strings = geometry.strings();
    detector_response_pruned(profile, geometry, &strings, rng, config, 1e-7)
}

/// Upper bound on the expected charge of any module on `string`, using the
/// distance from each segment to the string's vertical extent.
fn string_bound(profile: &[DepositSegment], string: &StringColumn, config: &SimConfig) -> f64 {
    profile
        .iter()
        .filter(|s| s.loss > 0.0)
        .map(|s| {
            let dx = s.center[0] - string.x;
            let dy = s.center[1] - string.y;
            let z = s.center[2];
            let dz = if z > string.z_max {
                z - string.z_max
            } else if z < string.z_min {
                string.z_min - z
            } else {
                0.0
            };
            s.loss * light_factor(libm::sqrt(dx * dx + dy * dy + dz * dz), config)
        })
        .sum()
}

pub(crate) fn detector_response_pruned<R: Rng + ?Sized>(
    profile: &[DepositSegment],
    geometry: &DetectorGeometry,
    strings: &[StringColumn],
    rng: &mut R,
    config: &SimConfig,
    prune_below: f64,
) -> Vec<Hit> {
    let mut hits = Vec::new();
    if profile.iter().all(|s| s.loss <= 0.0) {
        return hits;
    }
    let delay = Exp::new(1.0 / SCATTERING_DELAY).expect("positive rate");
    for string in strings {
        if string_bound(profile, string, config) < prune_below {
            continue;
        }
        for &i in &string.dom_indices {
            let dom = &geometry.doms()[i];
            let mut expectation = 0.0;
            let mut nearest = (f64::INFINITY, 0.0);
            for s in profile.iter().filter(|s| s.loss > 0.0) {
                let r = libm::sqrt(squared_distance(s.center, dom.position));
                expectation += s.loss * light_factor(r, config);
                if r < nearest.0 {
                    nearest = (r, s.arc);
                }
            }
            if !(expectation > 0.0) {
                continue;
            }
            let q_total = Poisson::new(expectation).map(|p| p.sample(rng)).unwrap_or(0.0);
            if q_total <= 0.0 {
                continue;
            }
            let fraction = rng.random_range(0.3..1.0);
            let (r, arc) = nearest;
            let t_first = arc / LIGHT_SPEED + r * REFRACTIVE_INDEX / LIGHT_SPEED + delay.sample(rng);
            hits.push(Hit {
                dom_id: dom.dom_id,
                q_first: fraction * q_total,
                q_total,
                t_first,
            });
        }
    }
    hits.sort_by_key(|h| h.dom_id);
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_standard_geometry;
    use crate::rng::{stream, StreamDomain};

    fn profile() -> Vec<DepositSegment> {
        (0..20)
            .map(|k| DepositSegment {
                center: [30.0, 10.0, -1500.0 - 10.0 * k as f64],
                arc: 5.0 + 10.0 * k as f64,
                loss: 2.5 + k as f64,
            })
            .collect()
    }

    #[test]
    fn empty_profile_no_hits() {
        let g = build_standard_geometry();
        let mut rng = stream(1, StreamDomain::Custom, 0);
        assert!(detector_response(&[], &g, &mut rng, &SimConfig::default()).is_empty());
    }

    #[test]
    fn expectation_is_linear_in_losses() {
        let g = build_standard_geometry();
        let config = SimConfig::default();
        let p = profile();
        let doubled: Vec<DepositSegment> = p
            .iter()
            .map(|s| DepositSegment {
                loss: 2.0 * s.loss,
                ..*s
            })
            .collect();
        let a = expected_charges(&p, &g, &config);
        let b = expected_charges(&doubled, &g, &config);
        for (x, y) in a.iter().zip(&b) {
            assert!((y - 2.0 * x).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn distant_module_is_suppressed() {
        let config = SimConfig::default();
        let source = [DepositSegment {
            center: [0.0, 0.0, 0.0],
            arc: 0.0,
            loss: 10.0,
        }];
        let near = expected_charge_at(&source, [2.0 * config.absorption_length, 0.0, 0.0], &config);
        let far = expected_charge_at(&source, [20.0 * config.absorption_length, 0.0, 0.0], &config);
        // exp(-20)/exp(-2) · (1/10)² relative to the near module.
        let oracle = near * libm::exp(-18.0) / 100.0;
        assert!((far - oracle).abs() <= 1e-12 * oracle);
        assert!(far < libm::exp(-20.0) * near);
    }

    #[test]
    fn hits_are_physical() {
        let g = build_standard_geometry();
        let config = SimConfig::default();
        let mut rng = stream(1, StreamDomain::Custom, 3);
        let hits = detector_response(&profile(), &g, &mut rng, &config);
        assert!(!hits.is_empty());
        for h in &hits {
            assert!(h.q_total >= h.q_first && h.q_first > 0.0);
            assert!(h.t_first.is_finite() && h.t_first > 0.0);
        }
    }

    #[test]
    fn pruning_only_drops_negligible_strings() {
        let g = build_standard_geometry();
        let config = SimConfig::default();
        let p = profile();
        let expected = expected_charges(&p, &g, &config);
        for s in g.strings() {
            let bound = string_bound(&p, &s, &config);
            for &i in &s.dom_indices {
                assert!(expected[i] <= bound * (1.0 + 1e-12));
            }
        }
    }
}
