//! Optimization of the recurrent classifiers: weighted cross-entropy, plain
//! SGD with a per-update decaying learning rate, L1 on weights, inverted
//! dropout on the head features, and patience-based early stopping.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::recurrent::{
    init_params, model_backward, model_forward, ModelConfig, ModelParams, TensorKind,
};
use serde::{Deserialize, Serialize};

/// Per-class loss weights for the cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassWeights {
    /// w_k = n_total / (n_classes * n_k), computed on the training split.
    InverseFrequency,
    Explicit(Vec<f64>),
}

/// Full optimization recipe. Defaults are the production configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr0: f64,
    pub decay_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience_epochs: usize,
    pub l1_coeff: f64,
    pub dropout_rate: f64,
    pub class_weights: ClassWeights,
    pub seed: u64,
    /// Independent training runs (seeds `seed`, `seed+1`, ...); the run with
    /// the lowest best validation loss wins. 1 = a single run.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_restarts() -> usize {
    1
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.001,
            decay_rate: 1e-6,
            batch_size: 32,
            max_epochs: 200,
            patience_epochs: 20,
            l1_coeff: 0.0005,
            dropout_rate: 0.5,
            class_weights: ClassWeights::InverseFrequency,
            seed: 0,
            restarts: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr0 <= 0.0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "lr0, batch_size, and max_epochs must be positive".to_string(),
            ));
        }
        if self.patience_epochs >= self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} must be below max_epochs {}",
                self.patience_epochs, self.max_epochs
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.l1_coeff < 0.0 || self.decay_rate < 0.0 {
            return Err(Error::Config(
                "l1_coeff and decay_rate must be nonnegative".to_string(),
            ));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".to_string()));
        }
        if let ClassWeights::Explicit(w) = &self.class_weights {
            if w.len() != 2 || w.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
                return Err(Error::Config(
                    "explicit class weights must be 2 positive reals".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// One training example: a fixed-length crop and its label.
#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub data: &'a Matrix,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    /// 1-indexed epoch whose validation loss was the minimum observed.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub class_weights: Vec<f64>,
    /// Which restart (0-based) produced this report.
    #[serde(default)]
    pub restart_index: usize,
}

/// Report plus the parameters as of the best validation epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub best_params: ModelParams,
}

/// Loss for one prediction: -weights[label] * ln(probs[label]), with the
/// probability clamped to 1e-12 so a confident miss stays finite.
pub fn weighted_cross_entropy(probs: &[f64], label: usize, weights: &[f64]) -> f64 {
    -weights[label] * probs[label].max(1e-12).ln()
}

/// One decay application: lr_t = lr_prev / (1 + decay_rate * update_index),
/// where `update_index` is the 1-based count of the parameter update that
/// just happened. Each update uses the current lr, then decays it.
pub fn lr_schedule(lr_prev: f64, decay_rate: f64, update_index: usize) -> f64 {
    lr_prev / (1.0 + decay_rate * update_index as f64)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One SGD update: theta <- theta - lr * (g + l1_coeff * sign(theta)).
/// The L1 subgradient touches weight tensors only, never biases.
pub fn sgd_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    lr: f64,
    l1_coeff: f64,
) -> Result<()> {
    let grad_views = grads.tensors();
    for (p, g) in params.tensors_mut().into_iter().zip(grad_views) {
        debug_assert_eq!(p.name, g.name);
        if let Some(bad) = g.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient for '{}' contains {bad}",
                g.name
            )));
        }
        match p.kind {
            TensorKind::Weight => {
                for (pv, gv) in p.values.iter_mut().zip(g.values) {
                    *pv -= lr * (gv + l1_coeff * sign(*pv));
                }
            }
            TensorKind::Bias => {
                for (pv, gv) in p.values.iter_mut().zip(g.values) {
                    *pv -= lr * gv;
                }
            }
        }
    }
    Ok(())
}

/// Patience rule: remember the best (strictly lowest) validation loss; stop
/// once the gap since that epoch reaches the patience.
struct EarlyStopper {
    patience: usize,
    best_epoch: usize,
    best_val: f64,
}

impl EarlyStopper {
    fn new(patience: usize) -> Self {
        EarlyStopper {
            patience,
            best_epoch: 0,
            best_val: f64::INFINITY,
        }
    }

    /// Returns (is_new_best, should_stop) for a 1-indexed epoch.
    fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        let improved = val_loss < self.best_val;
        if improved {
            self.best_val = val_loss;
            self.best_epoch = epoch;
        }
        (improved, epoch - self.best_epoch >= self.patience)
    }
}

fn resolve_class_weights(config: &TrainConfig, train_set: &[TrainSample]) -> Result<Vec<f64>> {
    match &config.class_weights {
        ClassWeights::Explicit(w) => Ok(w.clone()),
        ClassWeights::InverseFrequency => {
            let mut counts = [0usize; 2];
            for s in train_set {
                if s.label > 1 {
                    return Err(Error::Config(format!("label {} outside {{0, 1}}", s.label)));
                }
                counts[s.label] += 1;
            }
            if counts[0] == 0 || counts[1] == 0 {
                return Err(Error::Config(
                    "inverse-frequency weights need both classes in the training split"
                        .to_string(),
                ));
            }
            let n = train_set.len() as f64;
            Ok(vec![n / (2.0 * counts[0] as f64), n / (2.0 * counts[1] as f64)])
        }
    }
}

fn scale_params(params: &mut ModelParams, s: f64) {
    for t in params.tensors_mut() {
        for v in t.values.iter_mut() {
            *v *= s;
        }
    }
}

fn mean_loss(
    model_config: &ModelConfig,
    params: &ModelParams,
    set: &[TrainSample],
    weights: &[f64],
) -> Result<f64> {
    let mut sum = 0.0;
    for s in set {
        let (probs, _) = model_forward(model_config, params, s.data, None)?;
        sum += weighted_cross_entropy(&probs, s.label, weights);
    }
    Ok(sum / set.len() as f64)
}

/// Trains `config.restarts` fresh initializations and returns the run whose
/// best validation loss is lowest (first such run on ties).
///
/// Restart r trains exactly as a single run with seed `config.seed + r`, so
/// `restarts: 1` reproduces a plain run bit for bit. Within each run, rng
/// streams derived from the run seed: 0 initializes parameters, 1 shuffles
/// the training order each epoch, 2 draws dropout masks. Each epoch shuffles,
/// walks batches (last partial batch kept), averages the batch gradient, and
/// applies one SGD update per batch with the decaying learning rate.
/// Validation loss is evaluated on the full validation set without dropout.
pub fn train(
    model_config: &ModelConfig,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut best: Option<TrainOutcome> = None;
    for restart in 0..config.restarts {
        let run_config = TrainConfig {
            seed: config.seed.wrapping_add(restart as u64),
            ..config.clone()
        };
        let mut outcome = train_once(model_config, train_set, val_set, &run_config)?;
        outcome.report.restart_index = restart;
        if best
            .as_ref()
            .map_or(true, |b| outcome.report.best_val_loss < b.report.best_val_loss)
        {
            best = Some(outcome);
        }
    }
    Ok(best.expect("restarts >= 1 was validated"))
}

fn train_once(
    model_config: &ModelConfig,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config(
            "training and validation splits must both be nonempty".to_string(),
        ));
    }
    let weights = resolve_class_weights(config, train_set)?;
    let feature_dim = model_config.feature_dim();

    let mut params = init_params(model_config, &mut Rng::new(config.seed, 0))?;
    let mut rng_shuffle = Rng::new(config.seed, 1);
    let mut rng_dropout = Rng::new(config.seed, 2);
    let mut grads = ModelParams::zeroed(model_config)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut lr = config.lr0;
    let mut update_index = 0usize;
    let mut stopper = EarlyStopper::new(config.patience_epochs);
    let mut best_params = params.clone();
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let keep = 1.0 - config.dropout_rate;

    for epoch in 1..=config.max_epochs {
        rng_shuffle.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.zero_all();
            for &idx in batch {
                let sample = &train_set[idx];
                let mask: Option<Vec<f64>> = (config.dropout_rate > 0.0).then(|| {
                    (0..feature_dim)
                        .map(|_| {
                            if rng_dropout.bernoulli(keep) {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect()
                });
                let (probs, cache) =
                    model_forward(model_config, &params, sample.data, mask.as_deref())?;
                loss_sum += weighted_cross_entropy(&probs, sample.label, &weights);
                let w = weights[sample.label];
                let dlogits: Vec<f64> = probs
                    .iter()
                    .enumerate()
                    .map(|(j, p)| w * (p - if j == sample.label { 1.0 } else { 0.0 }))
                    .collect();
                model_backward(model_config, &params, cache, &dlogits, &mut grads)?;
            }
            scale_params(&mut grads, 1.0 / batch.len() as f64);
            sgd_step(&mut params, &grads, lr, config.l1_coeff)?;
            update_index += 1;
            lr = lr_schedule(lr, config.decay_rate, update_index);
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = mean_loss(model_config, &params, val_set, &weights)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss diverged at epoch {epoch}: train {train_loss}, val {val_loss}"
            )));
        }
        epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
        });
        let (improved, stop) = stopper.observe(epoch, val_loss);
        if improved {
            best_params = params.clone();
        }
        if stop {
            stop_reason = StopReason::Patience;
            break;
        }
    }

    Ok(TrainOutcome {
        report: TrainReport {
            epochs_run: epochs.len(),
            epochs,
            stop_reason,
            best_epoch: stopper.best_epoch,
            best_val_loss: stopper.best_val,
            class_weights: weights,
            restart_index: 0,
        },
        best_params,
    })
}
