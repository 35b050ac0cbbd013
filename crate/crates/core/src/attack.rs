//! Projected gradient ascent on the expected cross-entropy of the base
//! classifier under noise, `max_{||d|| <= r} E[loss(f(x + d + e), c)]`.
//!
//! Success is judged independently of the loss: a fresh `predict` call at
//! `x + d` must return a label other than `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};
use crate::smoothing::{BaseClassifier, Differentiable, Label, NoiseStream, Prediction, Sampler, SmoothingParams};

/// Samples used by the success check.
pub const CHECK_SAMPLES: u64 = 10_000;
/// Level of the success check.
pub const CHECK_ALPHA: f64 = 0.01;

/// Noise-stream example id of the success check; step `t` uses id `t`.
const CHECK_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackParams<S> {
    pub radius: S,
    pub sigma: S,
    pub k: u64,
    pub steps: usize,
    pub step_size: S,
    pub seed: u64,
}

impl<S: Scalar> AttackParams<S> {
    pub fn new(radius: S, sigma: S, k: u64, steps: usize, step_size: S, seed: u64) -> Result<Self> {
        let p = Self { radius, sigma, k, steps, step_size, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: S| v > S::zero() && v.is_finite();
        if !positive(self.radius) || !positive(self.sigma) || !positive(self.step_size) {
            return Err(Error::InvalidParams("radius, sigma and step_size must be positive".into()));
        }
        if self.k == 0 || self.steps == 0 {
            return Err(Error::InvalidParams("k and steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome<S> {
    pub delta: Vec<S>,
    pub success: bool,
    /// The success check's prediction at `x + delta`.
    pub prediction: Prediction,
    /// Steps left unchanged because the Monte Carlo gradient vanished.
    pub skipped_steps: usize,
}

/// `r z / max(r, ||z||)`.
pub fn project_to_ball<S: Scalar>(z: &[S], r: S) -> Vec<S> {
    let norm = norm2(z);
    if norm <= r {
        return z.to_vec();
    }
    z.iter().map(|&v| v * r / norm).collect()
}

/// Mean cross-entropy and its input gradient over `k` noisy copies of `x`,
/// using samples `0..k` of `example_id` in `noise`.
pub fn monte_carlo_gradient<S: Scalar>(
    model: &dyn Differentiable<S>,
    x: &[S],
    label: Label,
    sigma: S,
    k: u64,
    noise: &NoiseStream,
    example_id: u64,
) -> (S, Vec<S>) {
    let mut eps = vec![S::zero(); x.len()];
    let mut noisy = vec![S::zero(); x.len()];
    let mut grad = vec![S::zero(); x.len()];
    let mut loss = S::zero();
    for j in 0..k {
        noise.fill(example_id, j, &mut eps);
        for ((z, &xi), &e) in noisy.iter_mut().zip(x).zip(&eps) {
            *z = xi + sigma * e;
        }
        let (l, g) = model.loss_and_input_gradient(&noisy, label);
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let kk = S::of_count(k);
    grad.iter_mut().for_each(|g| *g /= kk);
    (loss / kk, grad)
}

/// [`pgd_attack_with`] using a sequential sampler for the success check.
pub fn pgd_attack<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    model: &F,
    x: &[S],
    label: Label,
    params: &AttackParams<S>,
) -> Result<AttackOutcome<S>> {
    pgd_attack_with(&Sampler::sequential(), model, x, label, params)
}

/// Runs `steps` iterations of `d <- proj_r(d + eta g / ||g||)` from `d = 0`
/// with fresh noise every step, then checks success with `predict`
/// (`n = 10^4`, `alpha = 0.01`).
pub fn pgd_attack_with<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    sampler: &Sampler,
    model: &F,
    x: &[S],
    label: Label,
    params: &AttackParams<S>,
) -> Result<AttackOutcome<S>> {
    params.validate()?;
    let diff = model
        .as_differentiable()
        .ok_or_else(|| Error::InvalidParams("attack needs a model with score gradients".into()))?;
    if let Some(d) = model.input_dim() {
        if d != x.len() {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
    }
    if label >= diff.num_labels() {
        return Err(Error::InvalidParams(format!("label {label} out of range")));
    }
    let noise = NoiseStream::new(params.seed);
    let mut delta = vec![S::zero(); x.len()];
    let mut skipped_steps = 0;
    let mut point = x.to_vec();
    for step in 0..params.steps {
        for ((p, &xi), &d) in point.iter_mut().zip(x).zip(&delta) {
            *p = xi + d;
        }
        let (_, g) = monte_carlo_gradient(diff, &point, label, params.sigma, params.k, &noise, step as u64);
        let norm = norm2(&g);
        if !(norm > S::zero() && norm.is_finite()) {
            skipped_steps += 1;
            continue;
        }
        let moved: Vec<S> = delta.iter().zip(&g).map(|(&d, &gi)| d + params.step_size * gi / norm).collect();
        delta = project_to_ball(&moved, params.radius);
    }
    for ((p, &xi), &d) in point.iter_mut().zip(x).zip(&delta) {
        *p = xi + d;
    }
    let check = SmoothingParams::new(params.sigma, 1, CHECK_SAMPLES, S::of(CHECK_ALPHA))?;
    let prediction = sampler.predict(model, &check, &point, &noise, CHECK_STREAM)?;
    let success = matches!(prediction, Prediction::Label(l) if l != label);
    Ok(AttackOutcome { delta, success, prediction, skipped_steps })
}
