//! Dataset splitting, minibatch training with early stopping, and final
//! model selection.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::DetectorGeometry;
use crate::graph::{GraphInput, Normalizer};
use crate::metrics::{auc, operating_point, score_events, selection_metric, weighted_roc, ScoredEvent};
use crate::model::{backward, bce_loss, forward, Architecture, GnnModel, Gradients};
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng::{stream, StreamDomain};
use crate::sim::{Event, Label};

/// σ is kept above this after every update, meters.
pub const MIN_SIGMA: f64 = 1.0;

/// Fractions of each class going to train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.5,
            validation: 0.25,
            test: 0.25,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} fraction {f} must lie in (0, 1)")));
            }
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// `(train, validation, test)` sizes for a class of `n` events.
    /// Validation and test get `n·f` rounded half up; train gets the rest.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let round = |f: f64| libm::floor(n as f64 * f + 0.5) as usize;
        let validation = round(self.validation).min(n);
        let test = round(self.test).min(n - validation);
        (n - validation - test, validation, test)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: Vec<Event>,
    pub validation: Vec<Event>,
    pub test: Vec<Event>,
}

/// Per-class shuffled split. Each subset keeps the input order of its
/// events; weights are left untouched.
pub fn split_dataset(events: &[Event], spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class_index, label) in [Label::Signal, Label::Background].into_iter().enumerate() {
        let mut idx: Vec<usize> = (0..events.len()).filter(|&i| events[i].label == label).collect();
        if idx.is_empty() {
            return Err(Error::Empty(format!("no {label:?} events to split")));
        }
        idx.shuffle(&mut stream(spec.seed, StreamDomain::Split, class_index as u64));
        let (n_train, n_val, _) = spec.counts(idx.len());
        parts[0].extend_from_slice(&idx[..n_train]);
        parts[1].extend_from_slice(&idx[n_train..n_train + n_val]);
        parts[2].extend_from_slice(&idx[n_train + n_val..]);
    }
    let take = |part: &mut Vec<usize>| -> Vec<Event> {
        part.sort_unstable();
        part.iter().map(|&i| events[i].clone()).collect()
    };
    Ok(Splits {
        train: take(&mut parts[0]),
        validation: take(&mut parts[1]),
        test: take(&mut parts[2]),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub optimizer: OptimizerKind,
    /// Use event weights in the loss; otherwise every event counts once.
    pub weighted_loss: bool,
    pub seed: u64,
    pub architecture: Architecture,
    /// Signal-to-noise floor of the validation operating point.
    pub target_snr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 100,
            patience: 15,
            optimizer: OptimizerKind::Adam,
            weighted_loss: true,
            seed: 0,
            architecture: Architecture::default(),
            target_snr: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if !(self.target_snr > 0.0) {
            return Err(Error::Config(format!("target_snr {} must be positive", self.target_snr)));
        }
        self.architecture.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Weighted mean loss over the epoch.
    pub train_loss: f64,
    /// Validation signal per year at the target snr (0 when infeasible).
    pub val_metric: f64,
    pub val_auc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub model_path: Option<String>,
}

impl TrainReport {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.get(self.best_epoch.checked_sub(1)?)
    }
}

/// Model with Glorot-initialized weights and a normalizer fit on `train`.
pub fn initial_model(config: &TrainConfig, train: &[Event], geometry: &DetectorGeometry) -> Result<GnnModel> {
    let normalizer = Normalizer::fit(train, geometry)?;
    GnnModel::init(&config.architecture, normalizer, config.seed)
}

fn prepare(events: &[Event], geometry: &DetectorGeometry, normalizer: &Normalizer) -> Result<Vec<GraphInput>> {
    events
        .iter()
        .map(|e| GraphInput::from_event(e, geometry, normalizer))
        .collect()
}

fn validation_scores<E: Executor>(model: &GnnModel, inputs: &[GraphInput], events: &[Event], exec: &E) -> Result<Vec<ScoredEvent>> {
    exec.map(inputs.len(), |i| {
        Ok(ScoredEvent {
            score: model.score(&inputs[i])?,
            label: events[i].label,
            weight: events[i].weight,
        })
    })
    .into_iter()
    .collect()
}

/// Loss and gradient of one batch: sums over events in batch order, divided
/// by the batch weight.
fn batch_gradient<E: Executor>(
    model: &GnnModel,
    inputs: &[GraphInput],
    events: &[Event],
    batch: &[usize],
    weighted: bool,
    exec: &E,
) -> Result<(f64, f64, Gradients)> {
    let per_event = exec.map(batch.len(), |k| -> Result<(f64, f64, Gradients)> {
        let i = batch[k];
        let w = if weighted { events[i].weight } else { 1.0 };
        let graph = inputs[i].graph(model.sigma)?;
        let (score, cache) = forward(model, &graph)?;
        let grads = backward(model, &graph, &cache, events[i].label, w)?;
        Ok((bce_loss(score, events[i].label, w), w, grads))
    });
    let mut total = Gradients::zeros_like(model);
    let (mut loss, mut weight) = (0.0, 0.0);
    for item in per_event {
        let (l, w, g) = item?;
        loss += l;
        weight += w;
        total.add_scaled(&g, 1.0);
    }
    Ok((loss, weight, total))
}

/// Shuffled minibatch training. After every epoch the validation metric
/// (signal per year at `target_snr`, validation AUC as tie-break) decides
/// whether the parameters are kept. `clock` returns seconds and is only
/// used for the report.
pub fn train<E: Executor>(
    init: GnnModel,
    train_set: &[Event],
    validation: &[Event],
    geometry: &DetectorGeometry,
    config: &TrainConfig,
    exec: &E,
    clock: &mut dyn FnMut() -> f64,
) -> Result<(GnnModel, TrainReport)> {
    config.validate()?;
    init.validate()?;
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::Empty("training needs non-empty train and validation sets".into()));
    }
    let train_inputs = prepare(train_set, geometry, &init.normalizer)?;
    let val_inputs = prepare(validation, geometry, &init.normalizer)?;

    let mut model = init;
    let mut params = model.params_flat();
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, params.len());
    let mut best_model = model.clone();
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut report = TrainReport::default();
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.max_epochs {
        let started = clock();
        order.sort_unstable();
        order.shuffle(&mut stream(config.seed, StreamDomain::Shuffle, epoch as u64));
        let (mut epoch_loss, mut epoch_weight) = (0.0, 0.0);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let (loss, weight, grads) = batch_gradient(&model, &train_inputs, train_set, batch, config.weighted_loss, exec)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence { epoch, batch: b + 1 });
            }
            epoch_loss += loss;
            epoch_weight += weight;
            if weight <= 0.0 {
                continue;
            }
            let mut flat = grads.to_flat();
            for g in &mut flat {
                *g /= weight;
            }
            optimizer.step(&mut params, &flat);
            params[0] = params[0].max(MIN_SIGMA);
            model.set_params_flat(&params)?;
        }

        let scored = validation_scores(&model, &val_inputs, validation, exec)?;
        let op = operating_point(&scored, config.target_snr)?;
        let val_metric = selection_metric(&op);
        let val_auc = auc(&weighted_roc(&scored)?);
        report.epochs.push(EpochRecord {
            epoch,
            train_loss: if epoch_weight > 0.0 { epoch_loss / epoch_weight } else { 0.0 },
            val_metric,
            val_auc,
            seconds: clock() - started,
        });
        if (val_metric, val_auc) > best_key {
            best_key = (val_metric, val_auc);
            best_model = model.clone();
            report.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok((best_model, report))
}

/// Index and test metric of the candidate with the largest test-set
/// metric; ties go to the earliest candidate.
pub fn select_final<E: Executor>(
    models: &[GnnModel],
    test: &[Event],
    geometry: &DetectorGeometry,
    target_snr: f64,
    exec: &E,
) -> Result<(usize, f64)> {
    if models.is_empty() {
        return Err(Error::Empty("no candidate models".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, model) in models.iter().enumerate() {
        let scored = score_events(model, test, geometry, exec)?;
        let metric = selection_metric(&operating_point(&scored, target_snr)?);
        if best.is_none_or(|(_, m)| metric > m) {
            best = Some((i, metric));
        }
    }
    best.ok_or_else(|| Error::Internal("no candidate evaluated".into()))
}

/// Index of the largest metric, earliest on ties.
pub fn argmax_first(metrics: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &m) in metrics.iter().enumerate() {
        if best.is_none_or(|b| m > metrics[b]) {
            best = Some(i);
        }
    }
    best
}
