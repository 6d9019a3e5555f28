//! The graph neural network: a stack of graph convolutions, sum pooling and
//! a logistic head.
//!
//! Layer `t` maps `X` (`n × d`) to `Z = [A·X, X]·W + 1·bᵀ` (`n × h`) and
//! outputs `[ReLU(Z), Z]` (`n × 2h`). The last layer's output is summed over
//! vertices and fed to `sigmoid(poolᵀ·a + c)`.

mod backprop;
mod layers;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphInput, Normalizer, DEFAULT_SIGMA, FEATURE_DIM};
use crate::linalg::Matrix;
use crate::rng::{stream, StreamDomain};

pub use backprop::{backward, bce_loss, loss_gradient, Gradients};
pub use layers::{forward, gconv_forward, layer_forward, sigmoid, ForwardCache};

/// Lower clamp applied to scores inside the loss.
pub const SCORE_EPS: f64 = 1e-12;

/// One graph convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GConvLayer {
    /// `(2·d_in) × h`; the first `d_in` rows act on `A·X`, the rest on `X`.
    pub weight: Matrix,
    /// Length `h`.
    pub bias: Vec<f64>,
}

impl GConvLayer {
    pub fn zeros(input_dim: usize, width: usize) -> Self {
        GConvLayer {
            weight: Matrix::zeros(2 * input_dim, width),
            bias: vec![0.0; width],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows() / 2
    }

    pub fn width(&self) -> usize {
        self.weight.cols()
    }

    /// Width of this layer's output, `[ReLU(Z), Z]`.
    pub fn output_dim(&self) -> usize {
        2 * self.width()
    }
}

/// Logistic regression on the pooled vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolingHead {
    pub weight: Vec<f64>,
    pub bias: f64,
}

/// Layer widths `h_t`. Layer `t` outputs `2·h_t` features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub widths: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            widths: vec![32, 64, 64],
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config("architecture needs at least one layer of non-zero width".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    /// Kernel width, meters.
    pub sigma: f64,
    pub layers: Vec<GConvLayer>,
    pub head: PoolingHead,
    pub normalizer: Normalizer,
}

impl GnnModel {
    /// All-zero parameters with the given shapes and `σ = 125 m`.
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let mut layers = Vec::with_capacity(arch.widths.len());
        let mut d_in = FEATURE_DIM;
        for &h in &arch.widths {
            layers.push(GConvLayer::zeros(d_in, h));
            d_in = 2 * h;
        }
        Ok(GnnModel {
            sigma: DEFAULT_SIGMA,
            layers,
            head: PoolingHead {
                weight: vec![0.0; d_in],
                bias: 0.0,
            },
            normalizer: Normalizer::identity(),
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases,
    /// `σ = 125 m`. Deterministic in `seed`.
    pub fn init(arch: &Architecture, normalizer: Normalizer, seed: u64) -> Result<Self> {
        let mut model = GnnModel::zeros(arch)?;
        model.normalizer = normalizer;
        let mut rng = stream(seed, StreamDomain::Init, 0);
        for layer in &mut model.layers {
            let limit = libm::sqrt(6.0 / (layer.weight.rows() + layer.weight.cols()) as f64);
            for w in layer.weight.as_mut_slice() {
                *w = rng.random_range(-limit..limit);
            }
        }
        let limit = libm::sqrt(6.0 / (model.head.weight.len() + 1) as f64);
        for w in &mut model.head.weight {
            *w = rng.random_range(-limit..limit);
        }
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, GConvLayer::input_dim)
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            widths: self.layers.iter().map(GConvLayer::width).collect(),
        }
    }

    /// Shape and finiteness checks.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Validation(format!("sigma {} is not positive", self.sigma)));
        }
        if self.layers.is_empty() {
            return Err(Error::Validation("model has no layers".into()));
        }
        if self.input_dim() != FEATURE_DIM {
            return Err(Error::dim("model input", FEATURE_DIM, self.input_dim()));
        }
        let mut d_in = FEATURE_DIM;
        for (t, layer) in self.layers.iter().enumerate() {
            if layer.weight.rows() != 2 * d_in {
                return Err(Error::dim(format!("layer {t} weight rows"), 2 * d_in, layer.weight.rows()));
            }
            if layer.bias.len() != layer.width() {
                return Err(Error::dim(format!("layer {t} bias"), layer.width(), layer.bias.len()));
            }
            d_in = layer.output_dim();
        }
        if self.head.weight.len() != d_in {
            return Err(Error::dim("head weight", d_in, self.head.weight.len()));
        }
        if !self.params_flat().iter().all(|p| p.is_finite()) {
            return Err(Error::Validation("model has non-finite parameters".into()));
        }
        Ok(())
    }

    /// Number of scalar parameters, σ included.
    pub fn param_count(&self) -> usize {
        1 + self
            .layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum::<usize>()
            + self.head.weight.len()
            + 1
    }

    /// Parameters in canonical order: σ, each layer's weight (row-major)
    /// and bias, head weight, head bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.push(self.sigma);
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.head.weight);
        out.push(self.head.bias);
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dim("flat parameters", self.param_count(), params.len()));
        }
        let mut it = params.iter().copied();
        self.sigma = it.next().unwrap_or_default();
        for layer in &mut self.layers {
            for w in layer.weight.as_mut_slice() {
                *w = it.next().unwrap_or_default();
            }
            for b in &mut layer.bias {
                *b = it.next().unwrap_or_default();
            }
        }
        for w in &mut self.head.weight {
            *w = it.next().unwrap_or_default();
        }
        self.head.bias = it.next().unwrap_or_default();
        Ok(())
    }

    /// Score of a prepared event at the model's current σ.
    pub fn score(&self, input: &GraphInput) -> Result<f64> {
        let graph = input.graph(self.sigma)?;
        forward(self, &graph).map(|(score, _)| score)
    }
}
