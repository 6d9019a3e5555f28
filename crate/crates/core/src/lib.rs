#![no_std]

//! Graph neural network classification of sparse events recorded on an
//! irregular three-dimensional sensor array.
//!
//! Every active sensor of an event becomes a graph vertex. Edges come from a
//! Gaussian kernel of learnable width over the sensor positions, normalized
//! row-wise with a softmax. A stack of graph convolutions, a sum pooling and
//! a logistic head turn the variable-size event into a single probability.
//!
//! The crate also carries everything needed to exercise the classifier
//! without external data:
//!
//! - [`geometry`]: a string-based detector layout with a dense infill region.
//! - [`sim`]: a toy Monte-Carlo generator of weighted single-muon (signal)
//!   and muon-bundle (background) events.
//! - [`training`]: per-class splitting, minibatch optimization with early
//!   stopping on the weighted yield at a fixed signal-to-noise ratio.
//! - [`metrics`]: weighted ROC, AUC and operating-point selection.
//! - [`baseline`]: the non-learned stochasticity statistics and their cuts.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and thread pools live in the `icegraph` crate.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod training;

pub use crate::error::{Error, Result};
pub use crate::geometry::{DetectorGeometry, Dom};
pub use crate::graph::{EventGraph, Normalizer};
pub use crate::linalg::Matrix;
pub use crate::metrics::{EvalReport, OperatingPoint, RocPoint, ScoredEvent};
pub use crate::model::{Architecture, GnnModel, Gradients};
pub use crate::sim::{Event, Hit, Label, SimConfig, Track};
pub use crate::training::{SplitSpec, TrainConfig, TrainReport};
