//! Toy Monte-Carlo generator of weighted events.
//!
//! Signal is a single muon whose energy losses are dominated by rare,
//! heavy-tailed bursts. Background is a bundle of many muons sharing one
//! axis; summing their independent losses smooths the light profile. Light
//! reaches a module through a point-source `1/r²` law with exponential
//! absorption, and photoelectron counts are Poisson.
//!
//! Energies are drawn from a hard generation spectrum and every event carries
//! a weight that maps the sample back onto the physical spectrum, normalized
//! to a configured number of events per year per class.

mod deposit;
mod response;
mod spectrum;
mod track;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{BoundingBox, DetectorGeometry, StringColumn};
use crate::rng::{stream, StreamDomain, StreamRng};

pub use deposit::{deposit_profile, DepositSegment, Source};
pub use response::{detector_response, expected_charges};
pub use spectrum::{event_weight, normalize_weights, power_law_cdf, sample_power_law, Spectrum};
pub use track::{sample_track, Track};

/// Speed of light in vacuum, m/ns.
pub const LIGHT_SPEED: f64 = 0.3;
/// Refractive index of the ice.
pub const REFRACTIVE_INDEX: f64 = 1.32;
/// Mean of the exponential scattering delay, ns.
pub const SCATTERING_DELAY: f64 = 20.0;
/// Margin added around the array when drawing track anchors, meters.
pub const ANCHOR_MARGIN: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Background,
    Signal,
}

impl Label {
    pub fn is_signal(self) -> bool {
        matches!(self, Label::Signal)
    }

    /// 1 for signal, 0 for background.
    pub fn target(self) -> f64 {
        if self.is_signal() {
            1.0
        } else {
            0.0
        }
    }
}

/// One active module of an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub dom_id: u32,
    /// Charge of the first pulse, photoelectrons.
    pub q_first: f64,
    /// Total charge, photoelectrons.
    pub q_total: f64,
    /// Arrival time of the first pulse, ns.
    pub t_first: f64,
}

impl Hit {
    pub fn validate(&self) -> Result<()> {
        let ok = self.q_first >= 0.0 && self.q_total >= self.q_first && self.t_first.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("malformed hit on dom {}", self.dom_id)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub hits: Vec<Hit>,
    /// Events per year represented by this event.
    pub weight: f64,
    pub label: Label,
    /// Single muon, or the common axis of a bundle.
    pub truth: Track,
    /// Number of muons (1 for signal).
    pub multiplicity: u32,
}

impl Event {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::Validation(format!("event weight {} is not positive", self.weight)));
        }
        let mut ids: Vec<u32> = Vec::with_capacity(self.hits.len());
        for hit in &self.hits {
            hit.validate()?;
            ids.push(hit.dom_id);
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate dom_id within an event".into()));
        }
        Ok(())
    }

    pub fn total_charge(&self) -> f64 {
        self.hits.iter().map(|h| h.q_total).sum()
    }
}

/// Generator settings. Defaults describe the standard synthetic sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Physical spectral index of the signal.
    pub spectral_index_true: f64,
    /// Generation spectral index of the signal (harder than the true one).
    pub spectral_index_gen: f64,
    /// Signal energy range, GeV.
    pub energy_range: (f64, f64),
    pub background_index_true: f64,
    pub background_index_gen: f64,
    /// Energy range of each bundle muon, GeV.
    pub background_energy_range: (f64, f64),
    /// Expected signal events per year over the whole generated signal sample.
    pub signal_rate: f64,
    /// Expected background events per year over the whole generated background sample.
    pub background_rate: f64,
    /// Bundle multiplicity, drawn log-uniform.
    pub bundle_multiplicity_range: (u32, u32),
    /// Light absorption length, meters.
    pub absorption_length: f64,
    /// Length of one energy-deposition segment, meters.
    pub segment_length: f64,
    /// Photoelectrons per GeV at 1 m, before absorption.
    pub light_yield: f64,
    /// Continuous (ionization) loss, GeV/m.
    pub ionization_loss: f64,
    /// Mean radiative loss per unit energy, 1/m.
    pub radiative_coefficient: f64,
    /// Mean number of stochastic bursts per segment.
    pub burst_rate: f64,
    /// Log-space width of the burst size distribution.
    pub burst_sigma_log: f64,
    pub min_hits: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            spectral_index_true: 2.0,
            spectral_index_gen: 1.0,
            energy_range: (1.0e3, 1.0e7),
            background_index_true: 2.7,
            background_index_gen: 2.0,
            background_energy_range: (3.0e2, 1.0e4),
            signal_rate: 10.0,
            background_rate: 100.0,
            bundle_multiplicity_range: (2, 50),
            absorption_length: 20.0,
            segment_length: 10.0,
            light_yield: 100.0,
            ionization_loss: 0.25,
            radiative_coefficient: 3.5e-4,
            burst_rate: 0.3,
            burst_sigma_log: 1.5,
            min_hits: 8,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(what.into()))
            }
        };
        check(
            self.spectral_index_gen < self.spectral_index_true,
            "signal generation index must be harder (smaller) than the true index",
        )?;
        check(
            self.background_index_gen <= self.background_index_true,
            "background generation index must not be softer than the true index",
        )?;
        for (lo, hi) in [self.energy_range, self.background_energy_range] {
            check(lo > 0.0 && lo < hi && hi.is_finite(), "energy range must be ordered and positive")?;
        }
        let (mlo, mhi) = self.bundle_multiplicity_range;
        check(mlo >= 1 && mlo <= mhi, "multiplicity range must be ordered and >= 1")?;
        check(self.absorption_length > 0.0, "absorption_length must be positive")?;
        check(self.segment_length > 0.0, "segment_length must be positive")?;
        check(self.light_yield > 0.0, "light_yield must be positive")?;
        check(self.ionization_loss >= 0.0, "ionization_loss must be non-negative")?;
        check(self.radiative_coefficient >= 0.0, "radiative_coefficient must be non-negative")?;
        check(self.burst_rate > 0.0, "burst_rate must be positive")?;
        check(self.burst_sigma_log >= 1.0, "burst_sigma_log must be at least 1")?;
        check(self.signal_rate > 0.0 && self.background_rate > 0.0, "annual rates must be positive")?;
        check(self.min_hits >= 1, "min_hits must be at least 1")?;
        Ok(())
    }

    pub fn signal_spectrum(&self) -> Spectrum {
        Spectrum {
            index_true: self.spectral_index_true,
            index_gen: self.spectral_index_gen,
            energy_range: self.energy_range,
            annual_rate: self.signal_rate,
        }
    }

    pub fn background_spectrum(&self) -> Spectrum {
        Spectrum {
            index_true: self.background_index_true,
            index_gen: self.background_index_gen,
            energy_range: self.background_energy_range,
            annual_rate: self.background_rate,
        }
    }

    pub fn spectrum(&self, label: Label) -> Spectrum {
        match label {
            Label::Signal => self.signal_spectrum(),
            Label::Background => self.background_spectrum(),
        }
    }
}

/// Geometry-derived data shared by every simulated event.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    config: SimConfig,
    geometry: &'g DetectorGeometry,
    strings: Vec<StringColumn>,
    volume: BoundingBox,
}

/// Upper bound on the expected charge of a module for it to be skipped.
const PRUNE_EXPECTATION: f64 = 1e-7;

/// Attempts per event before giving up on reaching `min_hits`.
const MAX_ATTEMPTS: usize = 100_000;

impl<'g> Simulator<'g> {
    pub fn new(config: SimConfig, geometry: &'g DetectorGeometry) -> Result<Self> {
        config.validate()?;
        let volume = geometry.bounding_box()?;
        Ok(Simulator {
            config,
            geometry,
            strings: geometry.strings(),
            volume,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn volume(&self) -> BoundingBox {
        self.volume
    }

    /// Log-uniform multiplicity.
    pub fn draw_multiplicity(&self, rng: &mut StreamRng) -> u32 {
        let (lo, hi) = self.config.bundle_multiplicity_range;
        if lo == hi {
            return lo;
        }
        let (ln_lo, ln_hi) = (libm::log(lo as f64), libm::log(hi as f64 + 1.0));
        let m = libm::floor(libm::exp(rng.random_range(ln_lo..ln_hi))) as u32;
        m.clamp(lo, hi)
    }

    /// Simulates one attempt; the returned event may have fewer than `min_hits` hits.
    pub fn simulate_once(&self, label: Label, rng: &mut StreamRng) -> Result<Event> {
        let spectrum = self.config.spectrum(label);
        let truth = sample_track(rng, &spectrum, &self.volume);
        let multiplicity = match label {
            Label::Signal => 1,
            Label::Background => self.draw_multiplicity(rng),
        };
        let source = match label {
            Label::Signal => Source::SingleMuon,
            Label::Background => Source::Bundle { multiplicity },
        };
        let profile = deposit_profile(&truth, rng, source, &self.volume, &self.config);
        let hits = response::detector_response_pruned(
            &profile,
            self.geometry,
            &self.strings,
            rng,
            &self.config,
            PRUNE_EXPECTATION,
        );
        Ok(Event {
            hits,
            weight: event_weight(truth.energy, &spectrum)?,
            label,
            truth,
            multiplicity,
        })
    }

    /// Event `index` of class `label`, resampled until it has `min_hits` hits.
    /// Its weight is the unnormalized importance factor.
    pub fn simulate_event(&self, label: Label, index: u64) -> Result<Event> {
        let domain = match label {
            Label::Signal => StreamDomain::SignalEvent,
            Label::Background => StreamDomain::BackgroundEvent,
        };
        let mut rng = stream(self.config.seed, domain, index);
        for _ in 0..MAX_ATTEMPTS {
            let event = self.simulate_once(label, &mut rng)?;
            if event.hits.len() >= self.config.min_hits {
                return Ok(event);
            }
        }
        Err(Error::Config(format!(
            "no event with {} hits after {} attempts",
            self.config.min_hits, MAX_ATTEMPTS
        )))
    }

    /// `n_signal` signal events followed by `n_background` background events,
    /// with weights normalized per class to the configured annual rates.
    pub fn generate_dataset<E: Executor>(
        &self,
        n_signal: usize,
        n_background: usize,
        exec: &E,
    ) -> Result<Vec<Event>> {
        let mut signal: Vec<Event> = exec
            .map(n_signal, |i| self.simulate_event(Label::Signal, i as u64))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut background: Vec<Event> = exec
            .map(n_background, |i| self.simulate_event(Label::Background, i as u64))
            .into_iter()
            .collect::<Result<_>>()?;
        normalize_weights(&mut signal, self.config.signal_rate);
        normalize_weights(&mut background, self.config.background_rate);
        signal.append(&mut background);
        Ok(signal)
    }
}

/// Sequential convenience wrapper around [`Simulator::generate_dataset`].
pub fn generate_dataset(
    config: &SimConfig,
    geometry: &DetectorGeometry,
    n_signal: usize,
    n_background: usize,
) -> Result<Vec<Event>> {
    Simulator::new(config.clone(), geometry)?.generate_dataset(
        n_signal,
        n_background,
        &crate::exec::Sequential,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_standard_geometry;

    #[test]
    fn count_contract_and_min_hits() {
        let g = build_standard_geometry();
        let config = SimConfig {
            seed: 11,
            ..SimConfig::default()
        };
        let events = generate_dataset(&config, &g, 0, 5).unwrap();
        assert_eq!(events.len(), 5);
        for e in &events {
            assert_eq!(e.label, Label::Background);
            assert!(e.hits.len() >= config.min_hits);
            e.validate().unwrap();
            for h in &e.hits {
                g.dom(h.dom_id).unwrap();
            }
        }
        let total: f64 = events.iter().map(|e| e.weight).sum();
        assert!((total - config.background_rate).abs() <= 1e-9 * config.background_rate);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = build_standard_geometry();
        let config = SimConfig {
            seed: 5,
            ..SimConfig::default()
        };
        let a = generate_dataset(&config, &g, 3, 3).unwrap();
        let b = generate_dataset(&config, &g, 3, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = SimConfig {
            spectral_index_gen: 2.5,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            min_hits: 0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn multiplicity_within_range() {
        let g = build_standard_geometry();
        let sim = Simulator::new(SimConfig::default(), &g).unwrap();
        let mut rng = stream(1, StreamDomain::Custom, 0);
        let mut seen_low = false;
        let mut seen_many = false;
        for _ in 0..2000 {
            let m = sim.draw_multiplicity(&mut rng);
            assert!((2..=50).contains(&m));
            seen_low |= m == 2;
            seen_many |= m > 25;
        }
        assert!(seen_low && seen_many);
    }
}
