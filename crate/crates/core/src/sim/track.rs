use rand::Rng;

use super::spectrum::{sample_power_law, Spectrum};
use super::ANCHOR_MARGIN;
use crate::geometry::BoundingBox;

/// Straight muon track: the line `anchor + s·direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    /// Meters.
    pub anchor: [f64; 3],
    /// Unit vector.
    pub direction: [f64; 3],
    /// GeV. For a bundle, the energy of each of its muons.
    pub energy: f64,
}

impl Track {
    pub fn point_at(&self, s: f64) -> [f64; 3] {
        [
            self.anchor[0] + s * self.direction[0],
            self.anchor[1] + s * self.direction[1],
            self.anchor[2] + s * self.direction[2],
        ]
    }

    /// Arc-length coordinate of the orthogonal projection of `p` on the track.
    pub fn project(&self, p: [f64; 3]) -> f64 {
        (p[0] - self.anchor[0]) * self.direction[0]
            + (p[1] - self.anchor[1]) * self.direction[1]
            + (p[2] - self.anchor[2]) * self.direction[2]
    }

    /// Arc-length interval of the track inside `volume`.
    pub fn chord(&self, volume: &BoundingBox) -> Option<(f64, f64)> {
        volume.clip_line(self.anchor, self.direction)
    }

    /// Cosine of the zenith angle of the arrival direction (1 = straight down).
    pub fn cos_zenith(&self) -> f64 {
        -self.direction[2]
    }

    pub fn is_valid(&self) -> bool {
        let norm2: f64 = self.direction.iter().map(|d| d * d).sum();
        (libm::sqrt(norm2) - 1.0).abs() < 1e-9
            && self.energy > 0.0
            && self.anchor.iter().all(|c| c.is_finite())
    }
}

/// Anchor uniform in the array's box inflated by [`ANCHOR_MARGIN`], direction
/// uniform on the downward hemisphere, energy from the generation spectrum.
pub fn sample_track<R: Rng + ?Sized>(rng: &mut R, spectrum: &Spectrum, volume: &BoundingBox) -> Track {
    let outer = volume.inflated(ANCHOR_MARGIN);
    let mut anchor = [0.0; 3];
    for axis in 0..3 {
        anchor[axis] = outer.min[axis] + rng.random::<f64>() * (outer.max[axis] - outer.min[axis]);
    }
    // Uniform on the hemisphere: cos θ uniform in [0, 1].
    let cos_theta: f64 = rng.random();
    let sin_theta = libm::sqrt((1.0 - cos_theta * cos_theta).max(0.0));
    let phi = 2.0 * core::f64::consts::PI * rng.random::<f64>();
    let direction = [
        sin_theta * libm::cos(phi),
        sin_theta * libm::sin(phi),
        -cos_theta,
    ];
    let energy = sample_power_law(rng, spectrum.index_gen, spectrum.energy_range);
    Track {
        anchor,
        direction,
        energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_standard_geometry;
    use crate::rng::{stream, StreamDomain};
    use crate::sim::SimConfig;

    #[test]
    fn fixed_seed_same_track() {
        let volume = build_standard_geometry().bounding_box().unwrap();
        let s = SimConfig::default().signal_spectrum();
        let a = sample_track(&mut stream(9, StreamDomain::Custom, 1), &s, &volume);
        let b = sample_track(&mut stream(9, StreamDomain::Custom, 1), &s, &volume);
        assert_eq!(a, b);
    }

    #[test]
    fn downward_unit_directions() {
        let volume = build_standard_geometry().bounding_box().unwrap();
        let s = SimConfig::default().signal_spectrum();
        let mut rng = stream(2, StreamDomain::Custom, 0);
        let outer = volume.inflated(ANCHOR_MARGIN);
        for _ in 0..5000 {
            let t = sample_track(&mut rng, &s, &volume);
            assert!(t.direction[2] <= 0.0);
            assert!(t.is_valid());
            for axis in 0..3 {
                assert!(t.anchor[axis] >= outer.min[axis] && t.anchor[axis] <= outer.max[axis]);
            }
        }
    }
}
