use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{BernoulliClassifier, ConstantClassifier, IntervalClassifier, LinearModel};
use crate::scalar::Scalar;
use crate::smoothing::{argmax, softmax, BaseClassifier, Differentiable, Draw, Label};

/// A model trained by minibatch gradient descent on softmax cross-entropy.
pub(crate) trait ParamModel<S: Scalar>: Differentiable<S> {
    fn params(&self) -> &[S];

    fn params_mut(&mut self) -> &mut [S];

    /// Adds the gradient of the cross-entropy at `(x, label)` with respect
    /// to the parameters into `grad` and returns the loss.
    fn accumulate_loss_gradient(&self, x: &[S], label: Label, grad: &mut [S]) -> S;
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn cross_entropy<S: Scalar>(scores: &[S], label: Label) -> (S, Vec<S>) {
    let mut d = softmax(scores);
    let loss = -crate::smoothing::log_softmax_at(scores, label);
    d[label] = S::zero();
    d[label] = -d.iter().copied().sum::<S>();
    (loss, d)
}

/// Multinomial logistic regression, `scores = W x + b`.
///
/// Parameters are stored row-major as `W` (`labels x dim`) followed by `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<S> {
    dim: usize,
    labels: usize,
    params: Vec<S>,
}

impl<S: Scalar> LogisticModel<S> {
    pub fn zeros(dim: usize, labels: usize) -> Result<Self> {
        Self::from_params(dim, labels, vec![S::zero(); labels * dim + labels])
    }

    pub fn from_params(dim: usize, labels: usize, params: Vec<S>) -> Result<Self> {
        if dim == 0 || labels < 2 {
            return Err(Error::InvalidParams("logistic model needs dim >= 1 and >= 2 labels".into()));
        }
        check_dim(labels * dim + labels, params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams("model parameters must be finite".into()));
        }
        Ok(Self { dim, labels, params })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    fn row(&self, c: Label) -> &[S] {
        &self.params[c * self.dim..(c + 1) * self.dim]
    }

    fn bias(&self, c: Label) -> S {
        self.params[self.labels * self.dim + c]
    }
}

impl<S: Scalar> BaseClassifier<S> for LogisticModel<S> {
    fn input_dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn classify(&self, x: &[S], _: Draw) -> Result<Label> {
        check_dim(self.dim, x.len())?;
        Ok(argmax(&self.scores(x)))
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable<S>> {
        Some(self)
    }
}

impl<S: Scalar> Differentiable<S> for LogisticModel<S> {
    fn num_labels(&self) -> usize {
        self.labels
    }

    fn scores(&self, x: &[S]) -> Vec<S> {
        (0..self.labels).map(|c| crate::scalar::dot(self.row(c), x) + self.bias(c)).collect()
    }

    fn score_gradient(&self, _: &[S], label: Label) -> Vec<S> {
        self.row(label).to_vec()
    }
}

impl<S: Scalar> ParamModel<S> for LogisticModel<S> {
    fn params(&self) -> &[S] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    fn accumulate_loss_gradient(&self, x: &[S], label: Label, grad: &mut [S]) -> S {
        let (loss, d) = cross_entropy(&self.scores(x), label);
        let (gw, gb) = grad.split_at_mut(self.labels * self.dim);
        for (c, &dc) in d.iter().enumerate() {
            for (g, &xi) in gw[c * self.dim..(c + 1) * self.dim].iter_mut().zip(x) {
                *g += dc * xi;
            }
            gb[c] += dc;
        }
        loss
    }
}

/// One hidden `tanh` layer: `scores = W2 tanh(W1 x + b1) + b2`.
///
/// Parameters are stored as `W1` (`width x dim`), `b1`, `W2`
/// (`labels x width`), `b2`, matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel<S> {
    dim: usize,
    width: usize,
    labels: usize,
    params: Vec<S>,
}

impl<S: Scalar> MlpModel<S> {
    pub fn param_count(dim: usize, width: usize, labels: usize) -> usize {
        width * dim + width + labels * width + labels
    }

    pub fn from_params(dim: usize, width: usize, labels: usize, params: Vec<S>) -> Result<Self> {
        if dim == 0 || width == 0 || labels < 2 {
            return Err(Error::InvalidParams("mlp needs dim, width >= 1 and >= 2 labels".into()));
        }
        check_dim(Self::param_count(dim, width, labels), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams("model parameters must be finite".into()));
        }
        Ok(Self { dim, width, labels, params })
    }

    /// Weights drawn as `N(0, 1/fan_in)` from `draw(i)`, biases zero.
    pub(crate) fn initialized(
        dim: usize,
        width: usize,
        labels: usize,
        mut normal: impl FnMut(usize) -> f64,
    ) -> Result<Self> {
        let mut params = vec![S::zero(); Self::param_count(dim, width, labels)];
        let s1 = 1.0 / (dim as f64).sqrt();
        let s2 = 1.0 / (width as f64).sqrt();
        let w2_start = width * dim + width;
        for (i, p) in params.iter_mut().enumerate() {
            if i < width * dim {
                *p = S::of(s1 * normal(i));
            } else if i >= w2_start && i < w2_start + labels * width {
                *p = S::of(s2 * normal(i));
            }
        }
        Self::from_params(dim, width, labels, params)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    fn split(&self) -> (&[S], &[S], &[S], &[S]) {
        let (w1, rest) = self.params.split_at(self.width * self.dim);
        let (b1, rest) = rest.split_at(self.width);
        let (w2, b2) = rest.split_at(self.labels * self.width);
        (w1, b1, w2, b2)
    }

    fn hidden(&self, x: &[S]) -> Vec<S> {
        let (w1, b1, _, _) = self.split();
        w1.chunks_exact(self.dim)
            .zip(b1)
            .map(|(row, &b)| (crate::scalar::dot(row, x) + b).tanh())
            .collect()
    }

    fn output(&self, h: &[S]) -> Vec<S> {
        let (_, _, w2, b2) = self.split();
        w2.chunks_exact(self.width).zip(b2).map(|(row, &b)| crate::scalar::dot(row, h) + b).collect()
    }

    /// Backpropagates `d` (gradient w.r.t. scores) to the pre-activations.
    fn hidden_delta(&self, h: &[S], d: &[S]) -> Vec<S> {
        let (_, _, w2, _) = self.split();
        (0..self.width)
            .map(|j| {
                let back = d.iter().enumerate().fold(S::zero(), |acc, (c, &dc)| acc + dc * w2[c * self.width + j]);
                back * (S::one() - h[j] * h[j])
            })
            .collect()
    }

    fn input_grad(&self, dz: &[S]) -> Vec<S> {
        let (w1, _, _, _) = self.split();
        let mut g = vec![S::zero(); self.dim];
        for (row, &dzj) in w1.chunks_exact(self.dim).zip(dz) {
            for (gi, &w) in g.iter_mut().zip(row) {
                *gi += dzj * w;
            }
        }
        g
    }
}

impl<S: Scalar> BaseClassifier<S> for MlpModel<S> {
    fn input_dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn classify(&self, x: &[S], _: Draw) -> Result<Label> {
        check_dim(self.dim, x.len())?;
        Ok(argmax(&self.scores(x)))
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable<S>> {
        Some(self)
    }
}

impl<S: Scalar> Differentiable<S> for MlpModel<S> {
    fn num_labels(&self) -> usize {
        self.labels
    }

    fn scores(&self, x: &[S]) -> Vec<S> {
        self.output(&self.hidden(x))
    }

    fn score_gradient(&self, x: &[S], label: Label) -> Vec<S> {
        let h = self.hidden(x);
        let mut d = vec![S::zero(); self.labels];
        d[label] = S::one();
        self.input_grad(&self.hidden_delta(&h, &d))
    }

    fn loss_and_input_gradient(&self, x: &[S], label: Label) -> (S, Vec<S>) {
        let h = self.hidden(x);
        let (loss, d) = cross_entropy(&self.output(&h), label);
        (loss, self.input_grad(&self.hidden_delta(&h, &d)))
    }
}

impl<S: Scalar> ParamModel<S> for MlpModel<S> {
    fn params(&self) -> &[S] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    fn accumulate_loss_gradient(&self, x: &[S], label: Label, grad: &mut [S]) -> S {
        let h = self.hidden(x);
        let (loss, d) = cross_entropy(&self.output(&h), label);
        let dz = self.hidden_delta(&h, &d);
        let (gw1, rest) = grad.split_at_mut(self.width * self.dim);
        let (gb1, rest) = rest.split_at_mut(self.width);
        let (gw2, gb2) = rest.split_at_mut(self.labels * self.width);
        for (j, &dzj) in dz.iter().enumerate() {
            for (g, &xi) in gw1[j * self.dim..(j + 1) * self.dim].iter_mut().zip(x) {
                *g += dzj * xi;
            }
            gb1[j] += dzj;
        }
        for (c, &dc) in d.iter().enumerate() {
            for (g, &hj) in gw2[c * self.width..(c + 1) * self.width].iter_mut().zip(&h) {
                *g += dc * hj;
            }
            gb2[c] += dc;
        }
        loss
    }
}

/// Every model kind the model file format can hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnyModel<S> {
    Linear(LinearModel<S>),
    Logistic(LogisticModel<S>),
    Mlp(MlpModel<S>),
    Constant(ConstantClassifier),
    Interval(IntervalClassifier<S>),
    Bernoulli(BernoulliClassifier),
}

impl<S: Scalar> AnyModel<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Linear(_) => "linear",
            AnyModel::Logistic(_) => "logistic",
            AnyModel::Mlp(_) => "mlp",
            AnyModel::Constant(_) => "constant",
            AnyModel::Interval(_) => "interval",
            AnyModel::Bernoulli(_) => "bernoulli",
        }
    }

    fn inner(&self) -> &dyn BaseClassifier<S> {
        match self {
            AnyModel::Linear(m) => m,
            AnyModel::Logistic(m) => m,
            AnyModel::Mlp(m) => m,
            AnyModel::Constant(m) => m,
            AnyModel::Interval(m) => m,
            AnyModel::Bernoulli(m) => m,
        }
    }
}

impl<S: Scalar> BaseClassifier<S> for AnyModel<S> {
    fn input_dim(&self) -> Option<usize> {
        self.inner().input_dim()
    }

    fn classify(&self, x: &[S], draw: Draw) -> Result<Label> {
        self.inner().classify(x, draw)
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable<S>> {
        self.inner().as_differentiable()
    }
}

impl<S: Scalar> From<LinearModel<S>> for AnyModel<S> {
    fn from(m: LinearModel<S>) -> Self {
        AnyModel::Linear(m)
    }
}

impl<S: Scalar> From<LogisticModel<S>> for AnyModel<S> {
    fn from(m: LogisticModel<S>) -> Self {
        AnyModel::Logistic(m)
    }
}

impl<S: Scalar> From<MlpModel<S>> for AnyModel<S> {
    fn from(m: MlpModel<S>) -> Self {
        AnyModel::Mlp(m)
    }
}
