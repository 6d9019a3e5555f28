use alloc::format;

use rand::Rng;

use super::Event;
use crate::error::{Error, Result};

/// Power-law spectrum pair: events are generated with `E^-index_gen` and
/// reweighted to `E^-index_true`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub index_true: f64,
    pub index_gen: f64,
    /// GeV.
    pub energy_range: (f64, f64),
    /// Expected events per year over the whole range.
    pub annual_rate: f64,
}

/// Integral of `E^-index` over `[lo, hi]`.
fn power_law_norm(index: f64, (lo, hi): (f64, f64)) -> f64 {
    if (index - 1.0).abs() < 1e-12 {
        libm::log(hi / lo)
    } else {
        let p = 1.0 - index;
        (libm::pow(hi, p) - libm::pow(lo, p)) / p
    }
}

/// Cumulative distribution of a power law with density `∝ E^-index` on `[lo, hi]`.
pub fn power_law_cdf(energy: f64, index: f64, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    if energy <= lo {
        return 0.0;
    }
    if energy >= hi {
        return 1.0;
    }
    power_law_norm(index, (lo, energy)) / power_law_norm(index, range)
}

/// Inverse-CDF draw from a power law with density `∝ E^-index` on `[lo, hi]`.
pub fn sample_power_law<R: Rng + ?Sized>(rng: &mut R, index: f64, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    let e = if (index - 1.0).abs() < 1e-12 {
        lo * libm::pow(hi / lo, u)
    } else {
        let p = 1.0 - index;
        let a = libm::pow(lo, p);
        let b = libm::pow(hi, p);
        libm::pow(a + u * (b - a), 1.0 / p)
    };
    e.clamp(lo, hi)
}

/// Importance weight of one generated event of the given energy, in events
/// per year: `annual_rate · p_true(E) / p_gen(E)`. Proportional to
/// `E^-(index_true - index_gen)`. A sample of `N` events is normalized with
/// [`normalize_weights`].
pub fn event_weight(energy: f64, spectrum: &Spectrum) -> Result<f64> {
    let (lo, hi) = spectrum.energy_range;
    if !(energy >= lo && energy <= hi) {
        return Err(Error::Domain(format!(
            "energy {energy} GeV outside [{lo}, {hi}]"
        )));
    }
    let p_true = libm::pow(energy, -spectrum.index_true) / power_law_norm(spectrum.index_true, spectrum.energy_range);
    let p_gen = libm::pow(energy, -spectrum.index_gen) / power_law_norm(spectrum.index_gen, spectrum.energy_range);
    Ok(spectrum.annual_rate * p_true / p_gen)
}

/// Rescales weights so they sum to `annual_rate`.
pub fn normalize_weights(events: &mut [Event], annual_rate: f64) {
    let total: f64 = events.iter().map(|e| e.weight).sum();
    if total <= 0.0 {
        return;
    }
    let scale = annual_rate / total;
    for e in events.iter_mut() {
        e.weight *= scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamDomain};
    use alloc::vec::Vec;

    fn spectrum(index_true: f64, index_gen: f64) -> Spectrum {
        Spectrum {
            index_true,
            index_gen,
            energy_range: (1.0e2, 1.0e8),
            annual_rate: 10.0,
        }
    }

    #[test]
    fn equal_indices_give_equal_weights() {
        let s = spectrum(2.0, 2.0);
        let w1 = event_weight(150.0, &s).unwrap();
        let w2 = event_weight(3.0e6, &s).unwrap();
        assert!((w1 - w2).abs() <= 1e-12 * w1);
    }

    #[test]
    fn decade_ratio() {
        let s = spectrum(2.0, 1.0);
        let r = event_weight(1.0e4, &s).unwrap() / event_weight(1.0e3, &s).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn strictly_decreasing() {
        let s = spectrum(2.7, 2.0);
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let e = 1.0e2 * libm::pow(10.0, 0.3 * k as f64);
            let w = event_weight(e, &s).unwrap();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn out_of_range_energy() {
        let s = spectrum(2.0, 1.0);
        assert!(matches!(event_weight(10.0, &s), Err(Error::Domain(_))));
        assert!(event_weight(2.0e8, &s).is_err());
    }

    #[test]
    fn cdf_endpoints() {
        assert_eq!(power_law_cdf(100.0, 1.0, (100.0, 1e8)), 0.0);
        assert_eq!(power_law_cdf(1e8, 1.0, (100.0, 1e8)), 1.0);
        assert!((power_law_cdf(1e5, 1.0, (100.0, 1e8)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_range() {
        let mut rng = stream(3, StreamDomain::Custom, 0);
        let xs: Vec<f64> = (0..1000).map(|_| sample_power_law(&mut rng, 2.7, (600.0, 1e5))).collect();
        assert!(xs.iter().all(|&x| (600.0..=1e5).contains(&x)));
    }
}
