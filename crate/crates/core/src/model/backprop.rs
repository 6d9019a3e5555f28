use alloc::vec::Vec;

use super::{ForwardCache, GConvLayer, GnnModel, PoolingHead, SCORE_EPS};
use crate::error::{Error, Result};
use crate::graph::EventGraph;
use crate::linalg::{dot, Matrix};
use crate::sim::Label;

/// Weighted binary cross-entropy with the score clamped to
/// `[1e-12, 1 − 1e-12]`.
pub fn bce_loss(score: f64, label: Label, weight: f64) -> f64 {
    let p = score.clamp(SCORE_EPS, 1.0 - SCORE_EPS);
    if label.is_signal() {
        -weight * libm::log(p)
    } else {
        -weight * libm::log(1.0 - p)
    }
}

/// `∂loss/∂logit = weight · (score − target)`.
///
/// Exact wherever the clamp in [`bce_loss`] is inactive. Inside the clamp the
/// unclamped value is kept, so saturated mistakes still produce a gradient.
pub fn loss_gradient(score: f64, label: Label, weight: f64) -> f64 {
    weight * (score - label.target())
}

/// Parameter-shaped gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub sigma: f64,
    pub layers: Vec<GConvLayer>,
    pub head: PoolingHead,
}

impl Gradients {
    pub fn zeros_like(model: &GnnModel) -> Self {
        Gradients {
            sigma: 0.0,
            layers: model
                .layers
                .iter()
                .map(|l| GConvLayer::zeros(l.input_dim(), l.width()))
                .collect(),
            head: PoolingHead {
                weight: alloc::vec![0.0; model.head.weight.len()],
                bias: 0.0,
            },
        }
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        self.sigma += scale * other.sigma;
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            for (a, b) in mine.weight.as_mut_slice().iter_mut().zip(theirs.weight.as_slice()) {
                *a += scale * b;
            }
            for (a, b) in mine.bias.iter_mut().zip(&theirs.bias) {
                *a += scale * b;
            }
        }
        for (a, b) in self.head.weight.iter_mut().zip(&other.head.weight) {
            *a += scale * b;
        }
        self.head.bias += scale * other.head.bias;
    }

    /// Same order as [`GnnModel::params_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.push(self.sigma);
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.head.weight);
        out.push(self.head.bias);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|g| g.is_finite())
    }
}

/// Reverse-mode gradient of `bce_loss(forward(model, graph), label, weight)`
/// with respect to every parameter, σ included. `ReLU'(0) = 0`.
pub fn backward(
    model: &GnnModel,
    graph: &EventGraph,
    cache: &ForwardCache,
    label: Label,
    weight: f64,
) -> Result<Gradients> {
    let t_count = model.layers.len();
    let n = graph.n();
    if cache.inputs.len() != t_count + 1
        || cache.pre_activations.len() != t_count
        || cache.propagated.len() != t_count
        || cache.inputs[0].rows() != n
        || cache.pooled.len() != model.head.weight.len()
    {
        return Err(Error::Internal("forward cache does not match model and graph".into()));
    }

    let mut grads = Gradients::zeros_like(model);
    let d_logit = loss_gradient(cache.score, label, weight);
    if d_logit == 0.0 {
        return Ok(grads);
    }

    for (g, &p) in grads.head.weight.iter_mut().zip(&cache.pooled) {
        *g = d_logit * p;
    }
    grads.head.bias = d_logit;

    // Sum pooling broadcasts the pooled gradient to every vertex.
    let d_pool: Vec<f64> = model.head.weight.iter().map(|a| d_logit * a).collect();
    let mut d_x = Matrix::zeros(n, d_pool.len());
    for i in 0..n {
        d_x.row_mut(i).copy_from_slice(&d_pool);
    }

    let a = &graph.adjacency;
    let d_a_d_sigma = graph.adjacency_grad_sigma();
    let mut d_sigma = 0.0;

    for t in (0..t_count).rev() {
        let layer = &model.layers[t];
        let z = &cache.pre_activations[t];
        let x = &cache.inputs[t];
        let p = &cache.propagated[t];
        let h = layer.width();
        let d = x.cols();
        if z.rows() != n || z.cols() != h || x.cols() != layer.input_dim() || d_x.cols() != 2 * h {
            return Err(Error::Internal("stale forward cache".into()));
        }

        // X_{t+1} = [ReLU(Z), Z].
        let mut d_z = Matrix::zeros(n, h);
        for i in 0..n {
            let upstream = d_x.row(i);
            let (d_relu, d_lin) = upstream.split_at(h);
            for (c, out) in d_z.row_mut(i).iter_mut().enumerate() {
                let gate = if z[(i, c)] > 0.0 { d_relu[c] } else { 0.0 };
                *out = gate + d_lin[c];
            }
        }

        // Z = [P, X]·W + b.
        let grad = &mut grads.layers[t];
        let gw = grad.weight.as_mut_slice();
        for i in 0..n {
            let dz_row = d_z.row(i);
            for (gb, &v) in grad.bias.iter_mut().zip(dz_row) {
                *gb += v;
            }
            for (k, &v) in p.row(i).iter().chain(x.row(i)).enumerate() {
                if v == 0.0 {
                    continue;
                }
                for (g, &dz) in gw[k * h..(k + 1) * h].iter_mut().zip(dz_row) {
                    *g += v * dz;
                }
            }
        }

        // dC = dZ·Wᵀ split into dP (first d columns) and the direct dX part.
        let d_c = d_z.matmul_t(&layer.weight)?;
        let mut d_p = Matrix::zeros(n, d);
        let mut d_x_prev = Matrix::zeros(n, d);
        for i in 0..n {
            let row = d_c.row(i);
            d_p.row_mut(i).copy_from_slice(&row[..d]);
            d_x_prev.row_mut(i).copy_from_slice(&row[d..]);
        }

        // P = A·X: dA contribution ⟨dP, (∂A/∂σ)·X⟩ for σ, and Aᵀ·dP for X.
        let da_x = d_a_d_sigma.matmul(x)?;
        d_sigma += dot(d_p.as_slice(), da_x.as_slice());

        if t > 0 {
            let at_dp = a.t_matmul(&d_p)?;
            for (o, v) in d_x_prev.as_mut_slice().iter_mut().zip(at_dp.as_slice()) {
                *o += v;
            }
            d_x = d_x_prev;
        }
    }
    grads.sigma = d_sigma;
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Normalizer;
    use crate::model::{forward, Architecture};

    fn graph(coincident: bool) -> EventGraph {
        let positions: Vec<[f64; 3]> = (0..5)
            .map(|i| {
                if coincident {
                    [1.0, 2.0, -1500.0]
                } else {
                    [30.0 * i as f64, 10.0 * (i * i) as f64, -1500.0 - 17.0 * i as f64]
                }
            })
            .collect();
        let features = Matrix::from_fn(5, 6, |i, j| libm::cos(0.3 * i as f64 + 0.7 * j as f64));
        EventGraph::new(positions, features, 80.0).unwrap()
    }

    #[test]
    fn loss_values() {
        let ln2 = core::f64::consts::LN_2;
        assert!((bce_loss(0.5, Label::Signal, 1.0) - ln2).abs() < 1e-15);
        assert!((bce_loss(0.5, Label::Background, 1.0) - ln2).abs() < 1e-15);
        assert!(bce_loss(1.0 - 1e-15, Label::Signal, 1.0) < 1e-11);
        assert!(bce_loss(0.0, Label::Background, 1.0) < 1e-11);
        assert_eq!(bce_loss(0.3, Label::Signal, 2.0), 2.0 * bce_loss(0.3, Label::Signal, 1.0));
        assert!(bce_loss(0.0, Label::Signal, 1.0).is_finite());
    }

    #[test]
    fn zero_weight_zero_gradients() {
        let mut model = GnnModel::init(&Architecture { widths: alloc::vec![3, 2] }, Normalizer::identity(), 1).unwrap();
        model.sigma = 80.0;
        let g = graph(false);
        let (_, cache) = forward(&model, &g).unwrap();
        let grads = backward(&model, &g, &cache, Label::Signal, 0.0).unwrap();
        assert!(grads.to_flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coincident_vertices_zero_sigma_gradient() {
        let mut model = GnnModel::init(&Architecture { widths: alloc::vec![3, 2] }, Normalizer::identity(), 2).unwrap();
        model.sigma = 80.0;
        let g = graph(true);
        let (_, cache) = forward(&model, &g).unwrap();
        let grads = backward(&model, &g, &cache, Label::Background, 1.0).unwrap();
        assert_eq!(grads.sigma, 0.0);
        assert!(grads.head.bias != 0.0);
    }

    #[test]
    fn stale_cache_rejected() {
        let model = GnnModel::init(&Architecture { widths: alloc::vec![3] }, Normalizer::identity(), 2).unwrap();
        let deeper = GnnModel::init(&Architecture { widths: alloc::vec![3, 3] }, Normalizer::identity(), 2).unwrap();
        let g = graph(false);
        let (_, cache) = forward(&deeper, &g).unwrap();
        assert!(matches!(
            backward(&model, &g, &cache, Label::Signal, 1.0),
            Err(Error::Internal(_))
        ));
    }
}
