//! Gaussian-augmentation training of small differentiable base classifiers.
//!
//! Every epoch each example is perturbed with fresh `N(0, sigma_train^2 I)`
//! noise before the cross-entropy gradient step, so the base classifier
//! learns to classify well under the smoothing distribution.

mod format;
mod models;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::smoothing::{softmax, BaseClassifier, Label, NoiseStream};

pub use models::{AnyModel, LogisticModel, MlpModel};
use models::ParamModel;

/// Noise-stream example id reserved for parameter initialization.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample<S> {
    pub features: Vec<S>,
    pub label: Label,
}

impl<S: Scalar> LabeledExample<S> {
    pub fn new(features: Vec<S>, label: Label) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidParams("feature vector is empty".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("features must be finite".into()));
        }
        Ok(Self { features, label })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSpec {
    Logistic,
    Mlp { width: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<S> {
    pub sigma_train: S,
    pub epochs: usize,
    pub learning_rate: S,
    pub batch_size: usize,
    pub seed: u64,
    pub model: ModelSpec,
}

impl<S: Scalar> TrainConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_train >= S::zero() && self.sigma_train.is_finite()) {
            return Err(Error::InvalidParams("sigma_train must be finite and >= 0".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParams("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > S::zero() && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams("learning_rate must be positive".into()));
        }
        if let ModelSpec::Mlp { width: 0 } = self.model {
            return Err(Error::InvalidParams("mlp width must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained model with its epoch-averaged training losses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained<S> {
    pub model: AnyModel<S>,
    pub epoch_losses: Vec<S>,
}

/// The augmentation noise `sigma_train * e` added to example `index` in
/// `epoch` (noise stream keyed by the training seed).
pub fn augmentation_noise<S: Scalar>(cfg: &TrainConfig<S>, epoch: usize, index: usize, dim: usize) -> Vec<S> {
    let noise = NoiseStream::new(cfg.seed);
    let mut e = vec![S::zero(); dim];
    noise.fill(index as u64, epoch as u64, &mut e);
    e.iter_mut().for_each(|v| *v *= cfg.sigma_train);
    e
}

fn check_data<S: Scalar>(data: &[LabeledExample<S>]) -> Result<(usize, usize)> {
    let first = data.first().ok_or_else(|| Error::InvalidParams("training set is empty".into()))?;
    let dim = first.features.len();
    let mut seen = Vec::new();
    for ex in data {
        if ex.features.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: ex.features.len() });
        }
        if ex.label >= seen.len() {
            seen.resize(ex.label + 1, false);
        }
        seen[ex.label] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidParams(format!(
            "labels must form a contiguous range 0..{}; label {missing} never occurs",
            seen.len()
        )));
    }
    Ok((dim, seen.len().max(2)))
}

fn sgd<S: Scalar, M: ParamModel<S>>(
    model: &mut M,
    data: &[LabeledExample<S>],
    cfg: &TrainConfig<S>,
) -> Result<Vec<S>> {
    let dim = data[0].features.len();
    let noise = NoiseStream::new(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grad = vec![S::zero(); model.params().len()];
    let mut eps = vec![S::zero(); dim];
    let mut noisy = vec![S::zero(); dim];
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffler);
        let mut total = S::zero();
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = S::zero());
            for &i in batch {
                let ex = &data[i];
                noise.fill(i as u64, epoch as u64, &mut eps);
                for ((z, &x), &e) in noisy.iter_mut().zip(&ex.features).zip(&eps) {
                    *z = x + cfg.sigma_train * e;
                }
                total += model.accumulate_loss_gradient(&noisy, ex.label, &mut grad);
            }
            let step = cfg.learning_rate / S::of_count(batch.len() as u64);
            for (p, &g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= step * g;
            }
        }
        let mean = total / S::of_count(data.len() as u64);
        if !mean.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch: epoch + 1, loss: mean.as_f64() });
        }
        losses.push(mean);
    }
    Ok(losses)
}

/// Trains the configured model by minibatch gradient descent on
/// cross-entropy under Gaussian augmentation. Deterministic given
/// `cfg.seed`.
pub fn train_with_noise<S: Scalar>(data: &[LabeledExample<S>], cfg: &TrainConfig<S>) -> Result<Trained<S>> {
    cfg.validate()?;
    let (dim, labels) = check_data(data)?;
    match cfg.model {
        ModelSpec::Logistic => {
            let mut m = LogisticModel::zeros(dim, labels)?;
            let epoch_losses = sgd(&mut m, data, cfg)?;
            Ok(Trained { model: m.into(), epoch_losses })
        }
        ModelSpec::Mlp { width } => {
            let init = NoiseStream::new(cfg.seed);
            let mut m = MlpModel::initialized(dim, width, labels, |i| init.deviate(INIT_STREAM, i as u64, 0))?;
            let epoch_losses = sgd(&mut m, data, cfg)?;
            Ok(Trained { model: m.into(), epoch_losses })
        }
    }
}

/// Fraction of examples the model labels correctly (deterministic models).
pub fn clean_accuracy<S: Scalar, F: BaseClassifier<S> + ?Sized>(model: &F, data: &[LabeledExample<S>]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidParams("evaluation set is empty".into()));
    }
    let mut correct = 0usize;
    for ex in data {
        if model.classify(&ex.features, crate::smoothing::Draw::new(0))? == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Largest discrepancy between the analytic gradient of `scores(x)[label]`
/// and a central finite difference with step `1e-5`, each coordinate
/// measured relative to `max(|analytic|, |numeric|, 1)`.
pub fn model_gradient_check<S: Scalar, F: BaseClassifier<S> + ?Sized>(model: &F, x: &[S], label: Label) -> Result<S> {
    let m = model
        .as_differentiable()
        .ok_or_else(|| Error::InvalidParams("model has no score gradients".into()))?;
    if label >= m.num_labels() {
        return Err(Error::InvalidParams(format!("label {label} out of range")));
    }
    if let Some(d) = m.input_dim() {
        if d != x.len() {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
    }
    let h = S::of(1e-5);
    let analytic = m.score_gradient(x, label);
    let mut worst = S::zero();
    let mut probe = x.to_vec();
    for (i, &a) in analytic.iter().enumerate() {
        probe[i] = x[i] + h;
        let up = m.scores(&probe)[label];
        probe[i] = x[i] - h;
        let down = m.scores(&probe)[label];
        probe[i] = x[i];
        let numeric = (up - down) / (h + h);
        let scale = a.abs().max(numeric.abs()).max(S::one());
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}

/// The two sides of the Jensen gap on a batch under noise `sigma`, using
/// `k` noise draws per example: the soft objective
/// `-mean log E[softmax_y(x + e)]` and the augmentation loss
/// `mean E[-log softmax_y(x + e)]`. The first never exceeds the second.
pub fn jensen_gap_diagnostic<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    model: &F,
    data: &[LabeledExample<S>],
    sigma: S,
    k: u64,
    seed: u64,
) -> Result<(S, S)> {
    let m = model
        .as_differentiable()
        .ok_or_else(|| Error::InvalidParams("model has no scores".into()))?;
    if data.is_empty() || k == 0 {
        return Err(Error::InvalidParams("diagnostic needs data and k >= 1".into()));
    }
    let noise = NoiseStream::new(seed);
    let (mut soft, mut ce) = (S::zero(), S::zero());
    for (i, ex) in data.iter().enumerate() {
        let mut eps = vec![S::zero(); ex.features.len()];
        let mut noisy = eps.clone();
        let (mut mean_p, mut mean_ce) = (S::zero(), S::zero());
        for j in 0..k {
            noise.fill(i as u64, j, &mut eps);
            for ((z, &x), &e) in noisy.iter_mut().zip(&ex.features).zip(&eps) {
                *z = x + sigma * e;
            }
            let scores = m.scores(&noisy);
            mean_p += softmax(&scores)[ex.label];
            mean_ce -= crate::smoothing::log_softmax_at(&scores, ex.label);
        }
        let kk = S::of_count(k);
        soft -= (mean_p / kk).ln();
        ce += mean_ce / kk;
    }
    let n = S::of_count(data.len() as u64);
    Ok((soft / n, ce / n))
}
