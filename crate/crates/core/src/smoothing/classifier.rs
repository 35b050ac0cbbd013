use crate::error::Result;
use crate::scalar::Scalar;

pub type Label = usize;

/// Per-sample entropy handed to the base classifier.
///
/// Deterministic classifiers ignore it. Randomized ones must draw all of
/// their randomness from it so that sampling stays replayable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw(pub(crate) u64);

impl Draw {
    pub fn new(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn uniform(self) -> f64 {
        ((self.0 >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }
}

/// A (possibly randomized) base classifier `f: R^d -> labels`.
///
/// Implementations must be safe for concurrent read-only use; the sampler
/// evaluates one model from several worker threads.
pub trait BaseClassifier<S: Scalar>: Sync {
    /// Required input dimension, `None` when any dimension is accepted.
    fn input_dim(&self) -> Option<usize> {
        None
    }

    fn classify(&self, x: &[S], draw: Draw) -> Result<Label>;

    /// The score/gradient capability, when the model has one.
    fn as_differentiable(&self) -> Option<&dyn Differentiable<S>> {
        None
    }
}

/// A classifier with per-label scores; `classify` must equal the argmax of
/// `scores` with ties going to the lowest label.
pub trait Differentiable<S: Scalar>: BaseClassifier<S> {
    fn num_labels(&self) -> usize;

    fn scores(&self, x: &[S]) -> Vec<S>;

    /// Gradient of `scores(x)[label]` with respect to `x`.
    fn score_gradient(&self, x: &[S], label: Label) -> Vec<S>;

    /// Softmax cross-entropy `-log softmax(scores(x))[label]` and its input
    /// gradient.
    fn loss_and_input_gradient(&self, x: &[S], label: Label) -> (S, Vec<S>) {
        let scores = self.scores(x);
        let probs = softmax(&scores);
        let loss = -log_softmax_at(&scores, label);
        // p_label - 1 as minus the other mass, which survives saturation
        let others: S = probs.iter().enumerate().filter(|&(c, _)| c != label).map(|(_, &p)| p).sum();
        let mut grad = vec![S::zero(); x.len()];
        for (c, &p) in probs.iter().enumerate() {
            let weight = if c == label { -others } else { p };
            if weight == S::zero() {
                continue;
            }
            for (g, d) in grad.iter_mut().zip(self.score_gradient(x, c)) {
                *g += weight * d;
            }
        }
        (loss, grad)
    }
}

/// Index of the largest score, lowest index on ties.
pub fn argmax<S: Scalar>(scores: &[S]) -> Label {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn softmax<S: Scalar>(scores: &[S]) -> Vec<S> {
    let max = scores.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax_at<S: Scalar>(scores: &[S], label: Label) -> S {
    let max = scores.iter().copied().fold(S::neg_infinity(), S::max);
    let lse = max + scores.iter().map(|&s| (s - max).exp()).sum::<S>().ln();
    scores[label] - lse
}

impl<S: Scalar, T: BaseClassifier<S> + ?Sized> BaseClassifier<S> for &T {
    fn input_dim(&self) -> Option<usize> {
        (**self).input_dim()
    }

    fn classify(&self, x: &[S], draw: Draw) -> Result<Label> {
        (**self).classify(x, draw)
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable<S>> {
        (**self).as_differentiable()
    }
}
