//! Sensor-array geometry: optical modules hanging on vertical strings.
//!
//! Coordinates are meters with `z = -depth`, so every module sits at negative
//! `z`. The standard layout has 78 main strings on a triangular lattice with
//! 125 m pitch and 8 infill strings close to the center, each carrying 60
//! modules.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const MAIN_STRING_COUNT: usize = 78;
pub const INFILL_STRING_COUNT: usize = 8;
pub const DOMS_PER_STRING: usize = 60;
pub const STRING_PITCH: f64 = 125.0;
pub const MAIN_DOM_SPACING: f64 = 17.0;
pub const MAIN_TOP_Z: f64 = -1450.0;
pub const INFILL_DENSE_SPACING: f64 = 7.0;
pub const INFILL_DENSE_COUNT: usize = 50;
pub const INFILL_BOTTOM_Z: f64 = -2450.0;

/// Minimum allowed separation between two modules, meters.
pub const MIN_DOM_SEPARATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dom {
    pub dom_id: u32,
    pub string_id: u32,
    pub position: [f64; 3],
}

/// Axis-aligned box, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn inflated(&self, margin: f64) -> BoundingBox {
        BoundingBox {
            min: [self.min[0] - margin, self.min[1] - margin, self.min[2] - margin],
            max: [self.max[0] + margin, self.max[1] + margin, self.max[2] + margin],
        }
    }

    /// Parameter interval `[t0, t1]` along `origin + t·direction` that lies
    /// inside the box (slab method), or `None` when the line misses it.
    pub fn clip_line(&self, origin: [f64; 3], direction: [f64; 3]) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            let o = origin[axis];
            let d = direction[axis];
            if d == 0.0 {
                if o < self.min[axis] || o > self.max[axis] {
                    return None;
                }
                continue;
            }
            let a = (self.min[axis] - o) / d;
            let b = (self.max[axis] - o) / d;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        if t1 > t0 {
            Some((t0, t1))
        } else {
            None
        }
    }
}

/// Immutable catalog of modules, ordered by `dom_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorGeometry {
    name: String,
    doms: Vec<Dom>,
    // dom_id -> index into `doms`
    index: BTreeMap<u32, usize>,
}

impl DetectorGeometry {
    /// Builds a geometry after checking every structural invariant.
    pub fn new(name: impl Into<String>, doms: Vec<Dom>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, dom) in doms.iter().enumerate() {
            if dom.position.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!(
                    "dom {} has a non-finite position",
                    dom.dom_id
                )));
            }
            if index.insert(dom.dom_id, i).is_some() {
                return Err(Error::Validation(format!("duplicate dom_id {}", dom.dom_id)));
            }
        }
        let geometry = DetectorGeometry {
            name: name.into(),
            doms,
            index,
        };
        geometry.check_strings()?;
        geometry.check_separation()?;
        Ok(geometry)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn doms(&self) -> &[Dom] {
        &self.doms
    }

    pub fn len(&self) -> usize {
        self.doms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doms.is_empty()
    }

    pub fn dom(&self, dom_id: u32) -> Result<&Dom> {
        self.index
            .get(&dom_id)
            .map(|&i| &self.doms[i])
            .ok_or(Error::UnknownDom(dom_id))
    }

    pub fn position(&self, dom_id: u32) -> Result<[f64; 3]> {
        self.dom(dom_id).map(|d| d.position)
    }

    /// Distinct string ids in ascending order.
    pub fn string_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.doms.iter().map(|d| d.string_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Horizontal position of every string with the indices of its modules.
    pub fn strings(&self) -> Vec<StringColumn> {
        let mut by_string: BTreeMap<u32, StringColumn> = BTreeMap::new();
        for (i, dom) in self.doms.iter().enumerate() {
            let entry = by_string.entry(dom.string_id).or_insert(StringColumn {
                string_id: dom.string_id,
                x: dom.position[0],
                y: dom.position[1],
                z_min: dom.position[2],
                z_max: dom.position[2],
                dom_indices: Vec::new(),
            });
            entry.z_min = entry.z_min.min(dom.position[2]);
            entry.z_max = entry.z_max.max(dom.position[2]);
            entry.dom_indices.push(i);
        }
        by_string.into_values().collect()
    }

    pub fn bounding_box(&self) -> Result<BoundingBox> {
        let first = self
            .doms
            .first()
            .ok_or_else(|| Error::Empty("geometry has no doms".to_string()))?;
        let mut bbox = BoundingBox {
            min: first.position,
            max: first.position,
        };
        for dom in &self.doms {
            for axis in 0..3 {
                bbox.min[axis] = bbox.min[axis].min(dom.position[axis]);
                bbox.max[axis] = bbox.max[axis].max(dom.position[axis]);
            }
        }
        Ok(bbox)
    }

    fn check_strings(&self) -> Result<()> {
        let mut xy: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for dom in &self.doms {
            let here = (dom.position[0], dom.position[1]);
            match xy.get(&dom.string_id) {
                Some(&expected) if expected != here => {
                    return Err(Error::Validation(format!(
                        "dom {} is off the x,y of string {}",
                        dom.dom_id, dom.string_id
                    )));
                }
                Some(_) => {}
                None => {
                    xy.insert(dom.string_id, here);
                }
            }
        }
        Ok(())
    }

    fn check_separation(&self) -> Result<()> {
        // Modules on different strings are separated by at least the string
        // distance, so only pairs of strings closer than the limit and pairs
        // on the same string need a full check.
        let strings = self.strings();
        for (a, sa) in strings.iter().enumerate() {
            for sb in &strings[a..] {
                let dx = sa.x - sb.x;
                let dy = sa.y - sb.y;
                if sa.string_id != sb.string_id && dx * dx + dy * dy >= MIN_DOM_SEPARATION * MIN_DOM_SEPARATION {
                    continue;
                }
                for &i in &sa.dom_indices {
                    for &j in &sb.dom_indices {
                        if sa.string_id == sb.string_id && j <= i {
                            continue;
                        }
                        let d2 = squared_distance(self.doms[i].position, self.doms[j].position);
                        if d2 < MIN_DOM_SEPARATION * MIN_DOM_SEPARATION {
                            return Err(Error::Validation(format!(
                                "doms {} and {} are closer than {} m",
                                self.doms[i].dom_id, self.doms[j].dom_id, MIN_DOM_SEPARATION
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// One vertical string of the array.
#[derive(Debug, Clone, PartialEq)]
pub struct StringColumn {
    pub string_id: u32,
    pub x: f64,
    pub y: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub dom_indices: Vec<usize>,
}

#[inline]
pub fn squared_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Horizontal positions of the main strings: the 78 lattice sites closest to
/// the lattice origin, ties broken by angle.
pub fn main_string_sites() -> Vec<(f64, f64)> {
    let row_height = STRING_PITCH * libm::sqrt(3.0) / 2.0;
    let mut sites = Vec::new();
    for j in -12i32..=12 {
        for i in -12i32..=12 {
            // Row-offset packing: every row is shifted by half a pitch per row index.
            let x = STRING_PITCH * (i as f64 + j as f64 / 2.0);
            let y = row_height * j as f64;
            // Integer squared radius in units of pitch² keeps ties exact.
            let r2 = i * i + i * j + j * j;
            sites.push((r2, libm::atan2(y, x), x, y));
        }
    }
    sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    sites
        .into_iter()
        .take(MAIN_STRING_COUNT)
        .map(|(_, _, x, y)| (x, y))
        .collect()
}

/// Horizontal positions of the infill strings: the six midpoints between the
/// central string and its neighbors, plus two opposite midpoints of the
/// edges joining neighbors.
pub fn infill_string_sites() -> Vec<(f64, f64)> {
    let mut sites = Vec::with_capacity(INFILL_STRING_COUNT);
    let half = STRING_PITCH / 2.0;
    for k in 0..6 {
        let angle = core::f64::consts::PI / 3.0 * k as f64;
        sites.push((half * libm::cos(angle), half * libm::sin(angle)));
    }
    let edge = STRING_PITCH * libm::sqrt(3.0) / 2.0;
    for angle_deg in [30.0f64, 210.0] {
        let angle = angle_deg.to_radians();
        sites.push((edge * libm::cos(angle), edge * libm::sin(angle)));
    }
    sites
}

fn main_string_depths() -> impl Iterator<Item = f64> {
    (0..DOMS_PER_STRING).map(|k| MAIN_TOP_Z - MAIN_DOM_SPACING * k as f64)
}

fn infill_string_depths() -> Vec<f64> {
    let mut z: Vec<f64> = Vec::with_capacity(DOMS_PER_STRING);
    let dense_top = INFILL_BOTTOM_Z + INFILL_DENSE_SPACING * (INFILL_DENSE_COUNT - 1) as f64;
    // Sparse modules above the dense region, top first.
    for k in (1..=DOMS_PER_STRING - INFILL_DENSE_COUNT).rev() {
        z.push(dense_top + MAIN_DOM_SPACING * k as f64);
    }
    for k in (0..INFILL_DENSE_COUNT).rev() {
        z.push(INFILL_BOTTOM_Z + INFILL_DENSE_SPACING * k as f64);
    }
    z
}

/// The standard 86-string, 5160-module array. Deterministic.
pub fn build_standard_geometry() -> DetectorGeometry {
    let mut doms = Vec::with_capacity((MAIN_STRING_COUNT + INFILL_STRING_COUNT) * DOMS_PER_STRING);
    let mut push_string = |string_id: u32, (x, y): (f64, f64), depths: &mut dyn Iterator<Item = f64>| {
        for z in depths {
            let dom_id = doms.len() as u32;
            doms.push(Dom {
                dom_id,
                string_id,
                position: [x, y, z],
            });
        }
    };
    for (s, site) in main_string_sites().into_iter().enumerate() {
        push_string(s as u32, site, &mut main_string_depths());
    }
    let infill_depths = infill_string_depths();
    for (s, site) in infill_string_sites().into_iter().enumerate() {
        push_string(
            (MAIN_STRING_COUNT + s) as u32,
            site,
            &mut infill_depths.iter().copied(),
        );
    }
    DetectorGeometry::new("standard", doms).expect("standard geometry satisfies its invariants")
}
