//! Optimizer, loss, the training loop with best-validation selection, and
//! checkpoints.
//!
//! Inputs are z-scored per sample across channels. Each target is scaled with
//! the channel mean and standard deviation of the last column of its own input
//! window, so every reported MSE is in those normalized units.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{zscore_per_sample, Split, WindowedDataset};
use crate::gvnn::{batch_gradients, model_forward, GvnnModel};
use crate::gvsa::EPS;
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

pub const NORMALIZATION: &str =
    "inputs z-scored per sample across channels; targets scaled by the last input column's channel mean and std";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub window: usize,
    pub horizon: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Max global gradient norm; `None` disables clipping.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 500,
            batch: 128,
            seed: 0,
            weight_decay: 0.0,
            window: 3,
            horizon: 1,
            stride: 1,
            clip: None,
        }
    }
}

fn default_stride() -> usize {
    1
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be finite and >= 0",
                self.lr
            )));
        }
        if self.epochs == 0 || self.batch == 0 || self.window == 0 || self.stride == 0 {
            return Err(Error::InvalidConfig(
                "epochs, batch, window and stride must be >= 1".into(),
            ));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig("weight decay must be finite and >= 0".into()));
        }
        if let Some(c) = self.clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidConfig("clip norm must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::dims(format!(
            "adam: {} params, {} grads, {} state",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let c1 = 1.0 - state.beta1.powf(state.step as f64);
    let c2 = 1.0 - state.beta2.powf(state.step as f64);
    for k in 0..params.len() {
        let g = grads[k];
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        params[k] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Mean squared error and its gradient `2(pred − target)/N`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::dims("mse: prediction and target lengths"));
    }
    let n = pred.len() as f64;
    let diff: Vec<f64> = pred.iter().zip(target).map(|(p, t)| p - t).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.into_iter().map(|d| 2.0 * d / n).collect()))
}

/// A window and target in training units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Matrix,
    pub target: Vec<f64>,
}

/// Applies the normalization described in the module docs.
pub fn normalize_sample(input: &Matrix, target: &[f64]) -> Sample {
    let last = input.col(input.cols() - 1);
    let (mean, std) = crate::gvsa::mean_std(&last);
    Sample {
        input: zscore_per_sample(input),
        target: target.iter().map(|v| (v - mean) / (std + EPS)).collect(),
    }
}

/// Forecast in the units of `window`: normalizes the input, runs the model
/// and undoes the target scaling.
pub fn forecast(model: &GvnnModel, window: &Matrix) -> Result<Vec<f64>> {
    if window.cols() == 0 {
        return Err(Error::dims("empty window"));
    }
    let last = window.col(window.cols() - 1);
    let (mean, std) = crate::gvsa::mean_std(&last);
    let pred = model_forward(&zscore_per_sample(window), model)?;
    Ok(pred.into_iter().map(|p| p * (std + EPS) + mean).collect())
}

pub fn normalized_split(ds: &WindowedDataset, split: Split) -> Vec<Sample> {
    ds.indices(split)
        .into_iter()
        .map(|k| normalize_sample(&ds.inputs[k], &ds.targets[k]))
        .collect()
}

/// Mean of per-window MSE.
pub fn evaluate_mse(samples: &[Sample], model: &GvnnModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("cannot evaluate an empty split".into()));
    }
    let mut total = 0.0;
    for s in samples {
        let pred = model_forward(&s.input, model)?;
        total += mse_loss(&pred, &s.target)?.0;
    }
    Ok(total / samples.len() as f64)
}

/// Predicts the normalized last input column.
pub fn persistence_mse(samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("cannot evaluate an empty split".into()));
    }
    let mut total = 0.0;
    for s in samples {
        let last = s.input.col(s.input.cols() - 1);
        total += mse_loss(&last, &s.target)?.0;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    /// Row 0 is the untrained model.
    pub curve: Vec<EpochLoss>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub initial_val_loss: f64,
    pub test_mse: f64,
    pub persistence_test_mse: f64,
    pub parameter_count: usize,
    pub normalization: String,
    /// Kept out of the serialized report so reruns are byte-identical.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn curve_csv(&self, header: &str) -> String {
        let mut out = format!("{header}\nepoch,train_loss,val_loss\n");
        for e in &self.curve {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
        }
        out
    }
}

fn global_norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Trains `model` in place and leaves it at the best-validation parameters.
pub fn train_forecaster(ds: &WindowedDataset, model: &mut GvnnModel, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let started = Instant::now();
    let train = normalized_split(ds, Split::Train);
    let val = normalized_split(ds, Split::Val);
    let test = normalized_split(ds, Split::Test);
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "every split needs windows (train {}, val {}, test {})",
            train.len(),
            val.len(),
            test.len()
        )));
    }

    let mut params = model.params();
    let mut adam = AdamState::new(params.len());
    let initial_val = evaluate_mse(&val, model)?;
    let initial_train = evaluate_mse(&train, model)?;
    let mut curve = vec![EpochLoss {
        epoch: 0,
        train_loss: initial_train,
        val_loss: initial_val,
    }];
    let mut best = (0, initial_val, params.clone());
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let mut rng = Rng::derived(cfg.seed, &format!("shuffle/{epoch}"));
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let scale = 1.0 / chunk.len() as f64;
            let mut inputs = Vec::with_capacity(chunk.len());
            let mut upstream = Vec::with_capacity(chunk.len());
            for &k in chunk {
                let s = &train[k];
                let pred = model_forward(&s.input, model)?;
                let (loss, d) = mse_loss(&pred, &s.target)?;
                epoch_loss += loss;
                inputs.push(s.input.clone());
                upstream.push(d.into_iter().map(|g| g * scale).collect());
            }
            let mut grads = batch_gradients(model, &inputs, &upstream)?.flatten();
            if cfg.weight_decay > 0.0 {
                for (g, p) in grads.iter_mut().zip(&params) {
                    *g += cfg.weight_decay * p;
                }
            }
            if let Some(max) = cfg.clip {
                let norm = global_norm(&grads);
                if norm > max {
                    grads.iter_mut().for_each(|g| *g *= max / norm);
                }
            }
            if !grads.iter().all(|g| g.is_finite()) {
                return Err(Error::NonFinite(format!("gradient at epoch {epoch}")));
            }
            adam_step(&mut params, &grads, &mut adam, cfg.lr)?;
            model.set_params(&params)?;
        }
        let train_loss = epoch_loss / train.len() as f64;
        let val_loss = match evaluate_mse(&val, model) {
            Ok(v) if v.is_finite() && train_loss.is_finite() => v,
            Ok(_) | Err(Error::NonFinite(_)) => return Err(Error::NonFinite(format!("loss at epoch {epoch}"))),
            Err(e) => return Err(e),
        };
        curve.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best.1 {
            best = (epoch, val_loss, params.clone());
        }
    }

    model.set_params(&best.2)?;
    Ok(TrainReport {
        config: cfg.clone(),
        curve,
        best_epoch: best.0,
        best_val_loss: best.1,
        initial_val_loss: initial_val,
        test_mse: evaluate_mse(&test, model)?,
        persistence_test_mse: persistence_mse(&test)?,
        parameter_count: params.len(),
        normalization: NORMALIZATION.into(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to rerun a trained model on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: TrainConfig,
    pub normalization: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_sha256: Option<String>,
    pub model: GvnnModel,
}

impl Checkpoint {
    pub fn new(model: GvnnModel, config: TrainConfig) -> Self {
        Self {
            format: "gvnn-kit checkpoint".into(),
            version: CHECKPOINT_VERSION,
            seed: config.seed,
            config,
            normalization: NORMALIZATION.into(),
            manifest_sha256: None,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        if ck.model.layers.is_empty() || ck.model.readout.layers.is_empty() {
            return Err(Error::Checkpoint("model has no layers".into()));
        }
        let probe = Matrix::zeros(ck.model.nodes(), ck.model.window());
        model_forward(&probe, &ck.model).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
