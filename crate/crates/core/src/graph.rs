//! Per-event graph construction.
//!
//! Vertices are the active modules of an event. The kernel
//! `d_ij = exp(−‖x_i − x_j‖² / (2σ²))` is turned into a row-stochastic
//! adjacency by a softmax over each row, self term included. `σ` is
//! learnable, so the derivative of the adjacency with respect to `σ` is
//! provided as well.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{squared_distance, DetectorGeometry};
use crate::linalg::Matrix;
use crate::sim::{Event, Hit};

/// Number of per-vertex input features: x, y, z, q_first, q_total, t_first.
pub const FEATURE_DIM: usize = 6;

/// Default kernel width: the string pitch, meters.
pub const DEFAULT_SIGMA: f64 = 125.0;

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("kernel width must be positive, got {sigma}")))
    }
}

/// Pairwise Gaussian kernel over vertex positions (meters).
pub fn kernel_matrix(positions: &[[f64; 3]], sigma: f64) -> Result<Matrix> {
    check_sigma(sigma)?;
    let n = positions.len();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = libm::exp(-squared_distance(positions[i], positions[j]) * inv);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Row-wise softmax of a kernel matrix.
pub fn adjacency(kernel: &Matrix) -> Matrix {
    let mut a = kernel.clone();
    for i in 0..a.rows() {
        softmax_in_place(a.row_mut(i));
    }
    a
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = libm::exp(*x - max);
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

/// `∂a_ij/∂σ`: the kernel derivative `d_ij · ‖x_i − x_j‖² / σ³` pushed
/// through the row softmax Jacobian.
pub fn adjacency_grad_sigma(positions: &[[f64; 3]], sigma: f64) -> Result<Matrix> {
    let kernel = kernel_matrix(positions, sigma)?;
    let a = adjacency(&kernel);
    Ok(adjacency_grad_sigma_with(positions, sigma, &kernel, &a))
}

pub(crate) fn adjacency_grad_sigma_with(
    positions: &[[f64; 3]],
    sigma: f64,
    kernel: &Matrix,
    a: &Matrix,
) -> Matrix {
    let n = positions.len();
    let inv_s3 = 1.0 / (sigma * sigma * sigma);
    let mut out = Matrix::zeros(n, n);
    let mut dk = alloc::vec![0.0; n];
    for i in 0..n {
        let mut mean = 0.0;
        for j in 0..n {
            dk[j] = kernel[(i, j)] * squared_distance(positions[i], positions[j]) * inv_s3;
            mean += a[(i, j)] * dk[j];
        }
        for j in 0..n {
            out[(i, j)] = a[(i, j)] * (dk[j] - mean);
        }
    }
    out
}

/// Affine standardization of the raw feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: [f64; FEATURE_DIM],
    pub scale: [f64; FEATURE_DIM],
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::identity()
    }
}

impl Normalizer {
    pub fn identity() -> Self {
        Normalizer {
            mean: [0.0; FEATURE_DIM],
            scale: [1.0; FEATURE_DIM],
        }
    }

    /// Column means and standard deviations over every hit of `events`.
    /// Columns with zero spread get a unit scale.
    pub fn fit(events: &[Event], geometry: &DetectorGeometry) -> Result<Self> {
        let mut sum = [0.0; FEATURE_DIM];
        let mut sum_sq = [0.0; FEATURE_DIM];
        let mut count = 0usize;
        for event in events {
            for hit in &event.hits {
                let raw = raw_features(hit, geometry.position(hit.dom_id)?);
                for c in 0..FEATURE_DIM {
                    sum[c] += raw[c];
                    sum_sq[c] += raw[c] * raw[c];
                }
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Empty("no hits to fit the normalizer".into()));
        }
        let mut norm = Normalizer::identity();
        let n = count as f64;
        for c in 0..FEATURE_DIM {
            let mean = sum[c] / n;
            let var = (sum_sq[c] / n - mean * mean).max(0.0);
            let sd = libm::sqrt(var);
            norm.mean[c] = mean;
            norm.scale[c] = if sd > 1e-12 { sd } else { 1.0 };
        }
        Ok(norm)
    }

    pub fn apply(&self, raw: [f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for c in 0..FEATURE_DIM {
            out[c] = (raw[c] - self.mean[c]) / self.scale[c];
        }
        out
    }
}

/// Unstandardized features of one hit. Charges enter as `ln(1 + q)`.
pub fn raw_features(hit: &Hit, position: [f64; 3]) -> [f64; FEATURE_DIM] {
    [
        position[0],
        position[1],
        position[2],
        libm::log1p(hit.q_first),
        libm::log1p(hit.q_total),
        hit.t_first,
    ]
}

/// The σ-independent part of an event graph: positions and standardized
/// features. Built once per event and reused while σ changes.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub positions: Vec<[f64; 3]>,
    pub features: Matrix,
}

impl GraphInput {
    pub fn from_event(event: &Event, geometry: &DetectorGeometry, normalizer: &Normalizer) -> Result<Self> {
        if event.hits.is_empty() {
            return Err(Error::Empty("event has no hits".into()));
        }
        let n = event.hits.len();
        let mut positions = Vec::with_capacity(n);
        let mut features = Matrix::zeros(n, FEATURE_DIM);
        for (i, hit) in event.hits.iter().enumerate() {
            let p = geometry.position(hit.dom_id)?;
            positions.push(p);
            features.row_mut(i).copy_from_slice(&normalizer.apply(raw_features(hit, p)));
        }
        Ok(GraphInput { positions, features })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn graph(&self, sigma: f64) -> Result<EventGraph> {
        EventGraph::new(self.positions.clone(), self.features.clone(), sigma)
    }
}

/// Graph of one event at a given kernel width.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGraph {
    /// Vertex positions, meters.
    pub positions: Vec<[f64; 3]>,
    /// `n × 6` standardized features.
    pub features: Matrix,
    pub kernel: Matrix,
    /// Row-stochastic `n × n` adjacency.
    pub adjacency: Matrix,
    pub sigma: f64,
}

impl EventGraph {
    pub fn new(positions: Vec<[f64; 3]>, features: Matrix, sigma: f64) -> Result<Self> {
        if features.rows() != positions.len() {
            return Err(Error::dim("EventGraph features", positions.len(), features.rows()));
        }
        if positions.is_empty() {
            return Err(Error::Empty("graph has no vertices".into()));
        }
        let kernel = kernel_matrix(&positions, sigma)?;
        let adjacency = adjacency(&kernel);
        Ok(EventGraph {
            positions,
            features,
            kernel,
            adjacency,
            sigma,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// `∂A/∂σ` at the graph's own σ.
    pub fn adjacency_grad_sigma(&self) -> Matrix {
        adjacency_grad_sigma_with(&self.positions, self.sigma, &self.kernel, &self.adjacency)
    }

    /// Vertices reordered so that new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<EventGraph> {
        let positions = perm.iter().map(|&p| self.positions[p]).collect();
        EventGraph::new(positions, self.features.permute_rows(perm), self.sigma)
    }
}

/// Graph of `event` with vertices in hit order.
pub fn build_event_graph(
    event: &Event,
    geometry: &DetectorGeometry,
    sigma: f64,
    normalizer: &Normalizer,
) -> Result<EventGraph> {
    GraphInput::from_event(event, geometry, normalizer)?.graph(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_standard_geometry;
    use crate::sim::{Label, Track};
    use alloc::vec;

    #[test]
    fn kernel_diagonal_and_analytic_value() {
        let sigma = 40.0;
        let r = sigma * libm::sqrt(2.0);
        let k = kernel_matrix(&[[0.0, 0.0, 0.0], [r, 0.0, 0.0]], sigma).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k[(1, 1)], 1.0);
        assert!((k[(0, 1)] - libm::exp(-1.0)).abs() < 1e-15);
        assert_eq!(k[(0, 1)], k[(1, 0)]);
    }

    #[test]
    fn non_positive_sigma_rejected() {
        assert!(matches!(kernel_matrix(&[[0.0; 3]], 0.0), Err(Error::Domain(_))));
        assert!(adjacency_grad_sigma(&[[0.0; 3]], -1.0).is_err());
    }

    #[test]
    fn single_vertex_adjacency() {
        let a = adjacency(&kernel_matrix(&[[1.0, 2.0, 3.0]], 10.0).unwrap());
        assert_eq!(a.as_slice(), &[1.0]);
        let g = adjacency_grad_sigma(&[[1.0, 2.0, 3.0]], 10.0).unwrap();
        assert_eq!(g.as_slice(), &[0.0]);
    }

    #[test]
    fn coincident_vertices() {
        let pts = [[5.0, 5.0, 5.0]; 2];
        let a = adjacency(&kernel_matrix(&pts, 10.0).unwrap());
        assert!(a.as_slice().iter().all(|&x| (x - 0.5).abs() < 1e-15));
        let g = adjacency_grad_sigma(&[[5.0, 5.0, 5.0]; 4], 10.0).unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wide_kernel_is_uniform() {
        let pts = [[0.0, 0.0, 0.0], [100.0, 0.0, 0.0], [0.0, 300.0, -20.0], [50.0, 50.0, 50.0]];
        let a = adjacency(&kernel_matrix(&pts, 1e6).unwrap());
        assert!(a.as_slice().iter().all(|&x| (x - 0.25).abs() < 1e-6));
    }

    #[test]
    fn narrow_kernel_is_one_hot_softmax() {
        let pts = [[0.0, 0.0, 0.0], [100.0, 0.0, 0.0], [0.0, 300.0, -20.0]];
        let a = adjacency(&kernel_matrix(&pts, 1e-3).unwrap());
        let e = core::f64::consts::E;
        for i in 0..3 {
            assert!((a[(i, i)] - e / (e + 2.0)).abs() < 1e-12);
        }
    }

    fn event(hits: Vec<Hit>) -> Event {
        Event {
            hits,
            weight: 1.0,
            label: Label::Signal,
            truth: Track {
                anchor: [0.0; 3],
                direction: [0.0, 0.0, -1.0],
                energy: 1e3,
            },
            multiplicity: 1,
        }
    }

    fn hit(dom_id: u32, q: f64) -> Hit {
        Hit {
            dom_id,
            q_first: q / 2.0,
            q_total: q,
            t_first: 100.0 + q,
        }
    }

    #[test]
    fn single_hit_event_graph() {
        let g = build_standard_geometry();
        let graph = build_event_graph(&event(vec![hit(42, 3.0)]), &g, 125.0, &Normalizer::identity()).unwrap();
        assert_eq!(graph.n(), 1);
        assert_eq!(graph.adjacency.as_slice(), &[1.0]);
        assert_eq!(graph.features[(0, 3)], libm::log1p(1.5));
    }

    #[test]
    fn unknown_dom_is_lookup_error() {
        let g = build_standard_geometry();
        let err = build_event_graph(&event(vec![hit(99_999, 1.0)]), &g, 125.0, &Normalizer::identity()).unwrap_err();
        assert_eq!(err, Error::UnknownDom(99_999));
    }

    #[test]
    fn hit_permutation_permutes_graph() {
        let g = build_standard_geometry();
        let hits: Vec<Hit> = (0..10).map(|k| hit(100 + 37 * k, 1.0 + k as f64)).collect();
        let perm = [3usize, 7, 0, 9, 1, 4, 8, 2, 6, 5];
        let permuted: Vec<Hit> = perm.iter().map(|&p| hits[p]).collect();
        let a = build_event_graph(&event(hits), &g, 125.0, &Normalizer::identity()).unwrap();
        let b = build_event_graph(&event(permuted), &g, 125.0, &Normalizer::identity()).unwrap();
        for i in 0..10 {
            assert!((a.adjacency.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for c in 0..FEATURE_DIM {
                assert_eq!(b.features[(i, c)], a.features[(perm[i], c)]);
            }
            for j in 0..10 {
                // Softmax denominators are summed in a different order.
                assert!((b.adjacency[(i, j)] - a.adjacency[(perm[i], perm[j])]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalizer_standardizes_columns() {
        let g = build_standard_geometry();
        let events = [event((0..20).map(|k| hit(13 * k, k as f64)).collect())];
        let norm = Normalizer::fit(&events, &g).unwrap();
        let input = GraphInput::from_event(&events[0], &g, &norm).unwrap();
        for c in 0..FEATURE_DIM {
            let col: Vec<f64> = (0..20).map(|i| input.features[(i, c)]).collect();
            let m = crate::stats::mean(&col);
            assert!(m.abs() < 1e-9, "column {c} mean {m}");
        }
    }
}
