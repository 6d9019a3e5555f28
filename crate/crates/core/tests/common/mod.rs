#![allow(dead_code)]

use icegraph_core::model::Architecture;
use icegraph_core::rng::{stream, StreamDomain, StreamRng};
use icegraph_core::{EventGraph, GnnModel, Matrix, Normalizer};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64, index: u64) -> StreamRng {
    stream(seed, StreamDomain::Custom, index)
}

/// Positions scattered through a 400 m cube.
pub fn random_positions(rng: &mut StreamRng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| [rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0)])
        .collect()
}

pub fn random_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_graph(rng: &mut StreamRng, n: usize, sigma: f64) -> EventGraph {
    let positions = random_positions(rng, n);
    let features = random_matrix(rng, n, 6);
    EventGraph::new(positions, features, sigma).unwrap()
}

/// Small random architecture with random biases and σ, head scaled down so
/// scores stay away from 0 and 1.
pub fn random_model(rng: &mut StreamRng, layers: usize) -> GnnModel {
    let widths = (0..layers).map(|_| rng.random_range(2..=5)).collect();
    let mut model = GnnModel::init(&Architecture { widths }, Normalizer::identity(), rng.random()).unwrap();
    model.sigma = rng.random_range(40.0..200.0);
    for layer in &mut model.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    for w in &mut model.head.weight {
        *w *= 0.05;
    }
    model.head.bias = rng.random_range(-0.5..0.5);
    model
}
