use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use super::{SimConfig, Track};
use crate::geometry::BoundingBox;

/// What travels along the track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    SingleMuon,
    /// `multiplicity` muons sharing the axis, each with the track energy.
    Bundle { multiplicity: u32 },
}

impl Source {
    pub fn multiplicity(self) -> u32 {
        match self {
            Source::SingleMuon => 1,
            Source::Bundle { multiplicity } => multiplicity.max(1),
        }
    }
}

/// Energy deposited in one piece of the track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepositSegment {
    /// Midpoint, meters.
    pub center: [f64; 3],
    /// Arc length of the midpoint from where the track enters the volume, meters.
    pub arc: f64,
    /// GeV.
    pub loss: f64,
}

/// Energy losses of `source` along the part of `track` inside `volume`,
/// chopped into `config.segment_length` pieces.
///
/// Each muon loses a continuous `ionization_loss` per meter plus stochastic
/// bursts: a Poisson number of bursts per segment with log-normal sizes whose
/// mean adds up to `radiative_coefficient · E` per meter. Losses never exceed
/// the muon's remaining energy.
pub fn deposit_profile<R: Rng + ?Sized>(
    track: &Track,
    rng: &mut R,
    source: Source,
    volume: &BoundingBox,
    config: &SimConfig,
) -> Vec<DepositSegment> {
    let Some((t0, t1)) = track.chord(volume) else {
        return Vec::new();
    };
    let length = t1 - t0;
    if !(length > 0.0) {
        return Vec::new();
    }
    let seg_len = config.segment_length;
    let n_segments = libm::ceil(length / seg_len) as usize;
    let mut segments: Vec<DepositSegment> = (0..n_segments)
        .map(|k| {
            let start = k as f64 * seg_len;
            let end = (start + seg_len).min(length);
            let mid = 0.5 * (start + end);
            DepositSegment {
                center: track.point_at(t0 + mid),
                arc: mid,
                loss: 0.0,
            }
        })
        .collect();

    let multiplicity = source.multiplicity();
    let burst_count = Poisson::new(config.burst_rate).expect("burst_rate validated positive");
    let sigma = config.burst_sigma_log;
    // Unit-mean log-normal.
    let burst_size = LogNormal::new(-0.5 * sigma * sigma, sigma).expect("finite sigma");
    let per_muon_energy = track.energy;

    for _ in 0..multiplicity {
        let mut remaining = per_muon_energy;
        for (k, seg) in segments.iter_mut().enumerate() {
            if remaining <= 0.0 {
                break;
            }
            let this_len = (length - k as f64 * seg_len).min(seg_len);
            let mut loss = config.ionization_loss * this_len;
            let bursts = burst_count.sample(rng) as u64;
            if bursts > 0 {
                let mean_burst =
                    config.radiative_coefficient * remaining * this_len / config.burst_rate;
                for _ in 0..bursts {
                    loss += mean_burst * burst_size.sample(rng);
                }
            }
            let loss = loss.min(remaining);
            remaining -= loss;
            seg.loss += loss;
        }
    }
    segments
}
