use alloc::format;
use alloc::vec::Vec;

use super::{GConvLayer, GnnModel};
use crate::error::{Error, Result};
use crate::graph::EventGraph;
use crate::linalg::{dot, Matrix};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn check_shapes(a: &Matrix, x: &Matrix, layer: &GConvLayer, index: usize) -> Result<()> {
    let n = x.rows();
    if a.rows() != n || a.cols() != n {
        return Err(Error::dim(format!("layer {index} adjacency"), n, a.rows()));
    }
    if layer.weight.rows() != 2 * x.cols() {
        return Err(Error::dim(format!("layer {index} input width"), layer.weight.rows() / 2, x.cols()));
    }
    if layer.bias.len() != layer.weight.cols() {
        return Err(Error::dim(format!("layer {index} bias"), layer.weight.cols(), layer.bias.len()));
    }
    Ok(())
}

/// `[P, X]·W + 1·bᵀ` for a precomputed `P = A·X`.
fn affine(p: &Matrix, x: &Matrix, layer: &GConvLayer) -> Matrix {
    let n = x.rows();
    let d = x.cols();
    let h = layer.width();
    let w = layer.weight.as_slice();
    let mut z = Matrix::zeros(n, h);
    for i in 0..n {
        let z_row = z.row_mut(i);
        z_row.copy_from_slice(&layer.bias);
        for (k, &v) in p.row(i).iter().chain(x.row(i)).enumerate() {
            if v == 0.0 {
                continue;
            }
            for (o, &wk) in z_row.iter_mut().zip(&w[k * h..(k + 1) * h]) {
                *o += v * wk;
            }
        }
        debug_assert_eq!(p.cols(), d);
    }
    z
}

/// Graph convolution of layer `index`: `[A·X, X]·W + 1·bᵀ`.
pub fn gconv_forward(a: &Matrix, x: &Matrix, layer: &GConvLayer, index: usize) -> Result<Matrix> {
    check_shapes(a, x, layer, index)?;
    let p = a.matmul(x)?;
    Ok(affine(&p, x, layer))
}

/// `[ReLU(Z), Z]` for `Z = gconv_forward(A, X)`.
pub fn layer_forward(a: &Matrix, x: &Matrix, layer: &GConvLayer, index: usize) -> Result<Matrix> {
    let z = gconv_forward(a, x, layer, index)?;
    Ok(relu_concat(&z))
}

pub(crate) fn relu_concat(z: &Matrix) -> Matrix {
    let h = z.cols();
    let mut out = Matrix::zeros(z.rows(), 2 * h);
    for i in 0..z.rows() {
        let (relu, lin) = out.row_mut(i).split_at_mut(h);
        for ((r, l), &v) in relu.iter_mut().zip(lin.iter_mut()).zip(z.row(i)) {
            *r = v.max(0.0);
            *l = v;
        }
    }
    out
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Input of every layer, `X_0 … X_T` (the last one is the pooled input).
    pub inputs: Vec<Matrix>,
    /// `A·X_t` for every layer.
    pub propagated: Vec<Matrix>,
    /// Pre-activation `Z_t` of every layer.
    pub pre_activations: Vec<Matrix>,
    pub pooled: Vec<f64>,
    pub logit: f64,
    pub score: f64,
}

/// Score in (0, 1) and the activations needed by [`super::backward`].
pub fn forward(model: &GnnModel, graph: &EventGraph) -> Result<(f64, ForwardCache)> {
    if graph.features.cols() != model.input_dim() {
        return Err(Error::dim("graph features", model.input_dim(), graph.features.cols()));
    }
    let a = &graph.adjacency;
    let t_count = model.layers.len();
    let mut inputs = Vec::with_capacity(t_count + 1);
    let mut propagated = Vec::with_capacity(t_count);
    let mut pre_activations = Vec::with_capacity(t_count);
    inputs.push(graph.features.clone());
    for (t, layer) in model.layers.iter().enumerate() {
        let x = &inputs[t];
        check_shapes(a, x, layer, t)?;
        let p = a.matmul(x)?;
        let z = affine(&p, x, layer);
        let next = relu_concat(&z);
        propagated.push(p);
        pre_activations.push(z);
        inputs.push(next);
    }
    let last = &inputs[t_count];
    if last.cols() != model.head.weight.len() {
        return Err(Error::dim("head weight", last.cols(), model.head.weight.len()));
    }
    let pooled = last.column_sums();
    let logit = dot(&pooled, &model.head.weight) + model.head.bias;
    let score = sigmoid(logit);
    Ok((
        score,
        ForwardCache {
            inputs,
            propagated,
            pre_activations,
            pooled,
            logit,
            score,
        },
    ))
}
