//! Base classifiers whose smoothed behaviour is known in closed form.
//!
//! These are the ground truth for the statistical tests: linear halfspaces
//! (smoothed vote equals the base vote, exact radius `|w.x + b| / ||w||`),
//! the interval counterexample on which the tight bound is not attained,
//! the Neyman-Pearson worst case that saturates it, and the average-pooling
//! lift that doubles the radius.

use serde::{Deserialize, Serialize};

use crate::bounds::{cohen_radius_binary, Radius};
use crate::error::{domain, Error, Result};
use crate::scalar::{dot, norm2, Scalar};
use crate::smoothing::{BaseClassifier, Differentiable, Draw, Label};
use crate::statfun::{std_normal_cdf, std_normal_quantile, Probability};

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn check_sigma<S: Scalar>(sigma: S) -> Result<()> {
    if sigma > S::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")))
    }
}

/// `f(x) = 1` if `w.x + b > 0`, else `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<S> {
    w: Vec<S>,
    b: S,
}

impl<S: Scalar> LinearModel<S> {
    pub fn new(w: Vec<S>, b: S) -> Result<Self> {
        if w.iter().chain([&b]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("linear model parameters must be finite".into()));
        }
        if w.iter().all(|&v| v == S::zero()) {
            return Err(Error::InvalidParams("weight vector must be nonzero".into()));
        }
        Ok(Self { w, b })
    }

    pub fn weights(&self) -> &[S] {
        &self.w
    }

    pub fn bias(&self) -> S {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `w.x + b`.
    pub fn score(&self, x: &[S]) -> S {
        dot(&self.w, x) + self.b
    }

    pub fn label_at(&self, x: &[S]) -> Label {
        usize::from(self.score(x) > S::zero())
    }
}

impl<S: Scalar> BaseClassifier<S> for LinearModel<S> {
    fn input_dim(&self) -> Option<usize> {
        Some(self.w.len())
    }

    fn classify(&self, x: &[S], _: Draw) -> Result<Label> {
        check_dim(self.w.len(), x.len())?;
        Ok(self.label_at(x))
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable<S>> {
        Some(self)
    }
}

impl<S: Scalar> Differentiable<S> for LinearModel<S> {
    fn num_labels(&self) -> usize {
        2
    }

    fn scores(&self, x: &[S]) -> Vec<S> {
        vec![S::zero(), self.score(x)]
    }

    fn score_gradient(&self, x: &[S], label: Label) -> Vec<S> {
        if label == 1 {
            self.w.clone()
        } else {
            vec![S::zero(); x.len()]
        }
    }
}

/// Exact smoothed vote of a linear model at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactVote<S> {
    /// The base (and smoothed) label at the point.
    pub label: Label,
    /// Probability that a noisy evaluation returns `label`.
    pub prob: Probability<S>,
    pub on_boundary: bool,
}

/// `Φ(|w.x + b| / (sigma ||w||))`, or 1/2 with the boundary flag set.
pub fn exact_smoothed_prob<S: Scalar>(model: &LinearModel<S>, x: &[S], sigma: S) -> Result<ExactVote<S>> {
    check_dim(model.dim(), x.len())?;
    check_sigma(sigma)?;
    let s = model.score(x);
    let on_boundary = s == S::zero();
    let prob = std_normal_cdf(s.abs() / (sigma * norm2(&model.w)));
    Ok(ExactVote { label: model.label_at(x), prob: Probability::new(prob)?, on_boundary })
}

/// Distance `|w.x + b| / ||w||` to the decision boundary.
pub fn true_robust_radius<S: Scalar>(model: &LinearModel<S>, x: &[S]) -> Result<S> {
    check_dim(model.dim(), x.len())?;
    Ok(model.score(x).abs() / norm2(&model.w))
}

/// A perturbation of norm `r` that flips the base label; exists exactly when
/// `r` exceeds the true radius.
pub fn breaking_perturbation<S: Scalar>(model: &LinearModel<S>, x: &[S], r: S) -> Result<Vec<S>> {
    let radius = true_robust_radius(model, x)?;
    if !(r > radius) {
        return domain(format!("no flipping perturbation of norm {r} <= radius {radius}"));
    }
    let norm = norm2(&model.w);
    let sign = if model.label_at(x) == 1 { -S::one() } else { S::one() };
    Ok(model.w.iter().map(|&wi| sign * r * wi / norm).collect())
}

/// One-dimensional classifier: `inner` on `[-t, t]`, `outer` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalClassifier<S> {
    t: S,
    outer: Label,
    inner: Label,
}

impl<S: Scalar> IntervalClassifier<S> {
    pub fn new(t: S, outer: Label, inner: Label) -> Result<Self> {
        if !(t > S::zero() && t.is_finite()) {
            return Err(Error::InvalidParams(format!("half-width must be positive, got {t}")));
        }
        if outer == inner {
            return Err(Error::InvalidParams("outer and inner labels must differ".into()));
        }
        Ok(Self { t, outer, inner })
    }

    pub fn half_width(&self) -> S {
        self.t
    }

    pub fn outer(&self) -> Label {
        self.outer
    }

    pub fn inner(&self) -> Label {
        self.inner
    }
}

impl<S: Scalar> BaseClassifier<S> for IntervalClassifier<S> {
    fn input_dim(&self) -> Option<usize> {
        Some(1)
    }

    fn classify(&self, x: &[S], _: Draw) -> Result<Label> {
        check_dim(1, x.len())?;
        Ok(if x[0].abs() <= self.t { self.inner } else { self.outer })
    }
}

/// The interval with `t = -Φ⁻¹(Φ(tau)/2)`: at the origin (`sigma = 1`) the
/// outer label has probability `Φ(tau)`, so the tight bound certifies only
/// `tau`, yet the smoothed prediction is the outer label everywhere.
/// Labels: outer 1, inner 0.
pub fn make_interval_counterexample<S: Scalar>(tau: S) -> Result<IntervalClassifier<S>> {
    if !(tau > S::zero() && tau.is_finite()) {
        return Err(Error::InvalidParams(format!("tau must be positive, got {tau}")));
    }
    let t = -std_normal_quantile(S::of(0.5) * std_normal_cdf(tau))?;
    IntervalClassifier::new(t, 1, 0)
}

/// Probability of the inner label, `Φ((t - x)/sigma) - Φ((-t - x)/sigma)`.
pub fn exact_interval_prob<S: Scalar>(c: &IntervalClassifier<S>, x: S, sigma: S) -> Result<Probability<S>> {
    check_sigma(sigma)?;
    let hi = (c.t - x) / sigma;
    let lo = (-c.t - x) / sigma;
    // difference of the smaller tails avoids cancellation
    let p = if lo > S::zero() {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    };
    Probability::new(p.max(S::zero()).min(S::one()))
}

/// Outer-label probability computed without cancellation.
pub fn exact_interval_outer_prob<S: Scalar>(c: &IntervalClassifier<S>, x: S, sigma: S) -> Result<Probability<S>> {
    check_sigma(sigma)?;
    let hi = (c.t - x) / sigma;
    let lo = (-c.t - x) / sigma;
    Probability::new((std_normal_cdf(-hi) + std_normal_cdf(lo)).min(S::one()))
}

/// Tight radius at `x` from exact interval probabilities (binary case).
pub fn interval_exact_radius<S: Scalar>(c: &IntervalClassifier<S>, x: S, sigma: S) -> Result<Radius<S>> {
    let outer = exact_interval_outer_prob(c, x, sigma)?.value();
    let inner = exact_interval_prob(c, x, sigma)?.value();
    let pa = outer.max(inner);
    if pa <= S::of(0.5) {
        return Ok(Radius::Finite(S::zero()));
    }
    cohen_radius_binary(pa, sigma)
}

/// The Neyman-Pearson worst case: `c_a` iff
/// `delta.(x' - x) <= sigma ||delta|| Φ⁻¹(pA)`, `c_b` elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseClassifier<S> {
    anchor: Vec<S>,
    direction: Vec<S>,
    threshold: S,
    sigma: S,
    pa_lower: S,
    c_a: Label,
    c_b: Label,
}

pub fn make_worst_case<S: Scalar>(
    x: &[S],
    delta: &[S],
    pa_lower: S,
    sigma: S,
) -> Result<WorstCaseClassifier<S>> {
    check_dim(x.len(), delta.len())?;
    check_sigma(sigma)?;
    let norm = norm2(delta);
    if !(norm > S::zero()) {
        return Err(Error::InvalidParams("perturbation must be nonzero".into()));
    }
    let threshold = sigma * norm * std_normal_quantile(pa_lower)?;
    Ok(WorstCaseClassifier {
        anchor: x.to_vec(),
        direction: delta.to_vec(),
        threshold,
        sigma,
        pa_lower,
        c_a: 0,
        c_b: 1,
    })
}

impl<S: Scalar> WorstCaseClassifier<S> {
    pub fn labels(&self) -> (Label, Label) {
        (self.c_a, self.c_b)
    }

    /// Standardized margin of `c_a` at `at`: `Φ⁻¹(pA) - u/sigma` where `u`
    /// is the offset along the unit direction.
    fn margin(&self, at: &[S]) -> Result<S> {
        check_dim(self.anchor.len(), at.len())?;
        let norm = norm2(&self.direction);
        let u = self
            .direction
            .iter()
            .zip(at.iter().zip(&self.anchor))
            .fold(S::zero(), |acc, (&d, (&a, &x))| acc + d * (a - x))
            / norm;
        Ok(self.threshold / (self.sigma * norm) - u / self.sigma)
    }

    /// Exact smoothed probability of `c_a` at `at`.
    pub fn exact_top_prob(&self, at: &[S]) -> Result<Probability<S>> {
        Probability::new(std_normal_cdf(self.margin(at)?))
    }

    /// Exact smoothed probability of `c_b` at `at`.
    pub fn exact_runner_prob(&self, at: &[S]) -> Result<Probability<S>> {
        Probability::new(std_normal_cdf(-self.margin(at)?))
    }

    /// The smoothed prediction at `at`, `c_a` on ties.
    pub fn exact_vote(&self, at: &[S]) -> Result<Label> {
        Ok(if self.margin(at)? >= S::zero() { self.c_a } else { self.c_b })
    }

    pub fn pa_lower(&self) -> S {
        self.pa_lower
    }
}

impl<S: Scalar> BaseClassifier<S> for WorstCaseClassifier<S> {
    fn input_dim(&self) -> Option<usize> {
        Some(self.anchor.len())
    }

    fn classify(&self, x: &[S], _: Draw) -> Result<Label> {
        check_dim(self.anchor.len(), x.len())?;
        let proj = self
            .direction
            .iter()
            .zip(x.iter().zip(&self.anchor))
            .fold(S::zero(), |acc, (&d, (&a, &x0))| acc + d * (a - x0));
        Ok(if proj <= self.threshold { self.c_a } else { self.c_b })
    }
}

/// Average over consecutive blocks of 4 coordinates.
pub fn avg_pool<S: Scalar>(x: &[S]) -> Result<Vec<S>> {
    if x.is_empty() || x.len() % 4 != 0 {
        return Err(Error::InvalidParams(format!(
            "pooling needs a positive multiple of 4 coordinates, got {}",
            x.len()
        )));
    }
    Ok(x.chunks_exact(4).map(|c| c.iter().copied().sum::<S>() / S::of(4.0)).collect())
}

/// A low-resolution linear model composed with [`avg_pool`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgPoolLift<S> {
    low: LinearModel<S>,
}

impl<S: Scalar> AvgPoolLift<S> {
    pub fn low_res(&self) -> &LinearModel<S> {
        &self.low
    }

    /// The lift as a linear model on the 4x larger input: `w_i = w'_{i/4} / 4`.
    pub fn induced_linear(&self) -> LinearModel<S> {
        let quarter = S::of(0.25);
        let w = self.low.w.iter().flat_map(|&v| [v * quarter; 4]).collect();
        LinearModel::new(w, self.low.b).expect("nonzero low-res weights stay nonzero")
    }
}

impl<S: Scalar> BaseClassifier<S> for AvgPoolLift<S> {
    fn input_dim(&self) -> Option<usize> {
        Some(4 * self.low.dim())
    }

    fn classify(&self, x: &[S], draw: Draw) -> Result<Label> {
        check_dim(4 * self.low.dim(), x.len())?;
        self.low.classify(&avg_pool(x)?, draw)
    }
}

/// Lifts a low-resolution model to 4x the input dimension and doubles the
/// noise level: pooling `N(0, (2 sigma)^2 I)` over 4 coordinates gives
/// `N(0, sigma^2 I)`, so the smoothed votes agree and the radius doubles.
pub fn avgpool_lift<S: Scalar>(model: &LinearModel<S>, sigma_low: S) -> Result<(AvgPoolLift<S>, S)> {
    check_sigma(sigma_low)?;
    Ok((AvgPoolLift { low: model.clone() }, S::of(2.0) * sigma_low))
}

/// Always returns the same label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantClassifier {
    pub label: Label,
}

impl<S: Scalar> BaseClassifier<S> for ConstantClassifier {
    fn classify(&self, _: &[S], _: Draw) -> Result<Label> {
        Ok(self.label)
    }
}

/// Ignores its input: `label_a` with probability `p`, else `label_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliClassifier {
    p: f64,
    label_a: Label,
    label_b: Label,
}

impl BernoulliClassifier {
    pub fn new(p: f64, label_a: Label, label_b: Label) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("probability must lie in [0, 1], got {p}")));
        }
        Ok(Self { p, label_a, label_b })
    }

    /// `(p, label_a, label_b)`.
    pub fn parts(&self) -> (f64, Label, Label) {
        (self.p, self.label_a, self.label_b)
    }
}

impl<S: Scalar> BaseClassifier<S> for BernoulliClassifier {
    fn classify(&self, _: &[S], draw: Draw) -> Result<Label> {
        Ok(if draw.uniform() < self.p { self.label_a } else { self.label_b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{cohen_radius, worst_case_runner_prob, worst_case_top_prob, BoundInputs};
    use crate::statfun::test_oracle::{bisect_quantile, series_cdf};
    use proptest::prelude::*;

    fn lin(w: &[f64], b: f64) -> LinearModel<f64> {
        LinearModel::new(w.to_vec(), b).unwrap()
    }

    #[test]
    fn linear_model_validation() {
        assert!(LinearModel::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(LinearModel::new(vec![f64::NAN], 1.0).is_err());
        let m = lin(&[1.0, 0.0], 0.0);
        assert_eq!(m.classify(&[0.0], Draw::new(0)), Err(Error::DimensionMismatch { expected: 2, got: 1 }));
        assert_eq!(m.classify(&[0.0, 0.0], Draw::new(0)), Ok(0));
    }

    #[test]
    fn exact_prob_examples() {
        let v = exact_smoothed_prob(&lin(&[1.0, 0.0], 0.0), &[0.6, 0.0], 1.0).unwrap();
        assert!((v.prob.value() - series_cdf(0.6)).abs() < 1e-12);
        assert!((v.prob.value() - 0.72575).abs() < 1e-5);
        assert_eq!((v.label, v.on_boundary), (1, false));
        let v = exact_smoothed_prob(&lin(&[3.0, 4.0], 0.0), &[1.0, 0.0], 0.5).unwrap();
        assert!((v.prob.value() - series_cdf(1.2)).abs() < 1e-12);
        assert!((v.prob.value() - 0.88493).abs() < 1e-5);
        let v = exact_smoothed_prob(&lin(&[1.0, 0.0], -0.6), &[0.6, 0.0], 1.0).unwrap();
        assert_eq!(v.prob.value(), 0.5);
        assert!(v.on_boundary);
    }

    #[test]
    fn radius_examples() {
        assert!((true_robust_radius(&lin(&[3.0, 4.0], 0.0), &[1.0, 0.0]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(true_robust_radius(&lin(&[1.0, 0.0], -0.6), &[0.6, 0.0]).unwrap(), 0.0);
        let r = true_robust_radius(&lin(&[1.0, 1.0], 1.0), &[0.0, 0.0]).unwrap();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn breaking_examples() {
        let m = lin(&[1.0, 0.0], 0.0);
        let d = breaking_perturbation(&m, &[0.6, 0.0], 0.7).unwrap();
        assert_eq!(d, vec![-0.7, 0.0]);
        assert_eq!(m.label_at(&[-0.1, 0.0]), 0);
        let m = lin(&[0.0, 2.0], 0.0);
        let d = breaking_perturbation(&m, &[0.0, -0.3], 0.4).unwrap();
        assert!((d[0]).abs() < 1e-15 && (d[1] - 0.4).abs() < 1e-15);
        assert_eq!(m.label_at(&[0.0, 0.1]), 1);
        let m = lin(&[3.0, 4.0], 0.0);
        let d = breaking_perturbation(&m, &[1.0, 0.0], 0.61).unwrap();
        assert!((d[0] + 0.61 * 0.6).abs() < 1e-15 && (d[1] + 0.61 * 0.8).abs() < 1e-15);
        assert!(breaking_perturbation(&m, &[1.0, 0.0], 0.6).is_err());
    }

    #[test]
    fn interval_counterexample_examples() {
        let c = make_interval_counterexample(0.5_f64).unwrap();
        let t = -bisect_quantile(0.5 * series_cdf(0.5));
        assert!((c.half_width() - t).abs() < 1e-10);
        assert!((c.half_width() - 0.396871).abs() < 1e-6);
        let outer = exact_interval_outer_prob(&c, 0.0, 1.0).unwrap().value();
        assert!((outer - series_cdf(0.5)).abs() < 1e-12);
        let inner = exact_interval_prob(&c, 0.0, 1.0).unwrap().value();
        assert!((inner - 0.30854).abs() < 1e-5);
        let r = interval_exact_radius(&c, 0.0, 1.0).unwrap().to_scalar();
        assert!((r - 0.5).abs() < 1e-9);
    }

    #[test]
    fn interval_prob_limits() {
        let c = IntervalClassifier::new(1.0_f64, 1, 0).unwrap();
        assert!(exact_interval_prob(&c, 50.0, 1.0).unwrap().value() < 1e-300);
        assert!(exact_interval_prob(&c, -50.0, 1.0).unwrap().value() < 1e-300);
        assert!((exact_interval_prob(&c, 0.0, 1e-6).unwrap().value() - 1.0).abs() < 1e-15);
        let far = exact_interval_prob(&c, 9.0, 1.0).unwrap().value();
        // P(-10 < Z < -8), high-precision reference value
        let oracle = 6.220_960_498_073_21e-16;
        assert!((far - oracle).abs() / oracle < 1e-9);
    }

    #[test]
    fn interval_outer_label_everywhere() {
        for tau in [0.1, 0.5, 1.0] {
            let c = make_interval_counterexample(tau).unwrap();
            for i in 0..100 {
                let x = -10.0 + 20.0 * i as f64 / 99.0;
                assert!(exact_interval_prob(&c, x, 1.0).unwrap().value() < 0.5);
            }
        }
    }

    #[test]
    fn worst_case_examples() {
        let wc = make_worst_case(&[0.0_f64, 0.0], &[0.6, 0.8], 0.841345, 1.0).unwrap();
        assert_eq!(wc.classify(&[0.0, 0.0], Draw::new(0)), Ok(0));
        assert!((wc.exact_top_prob(&[0.0, 0.0]).unwrap().value() - 0.841345).abs() < 1e-12);
        assert!((wc.exact_top_prob(&[0.6, 0.8]).unwrap().value() - 0.5).abs() < 1e-6);

        let r = cohen_radius_binary(0.9, 1.0).unwrap().to_scalar() + 0.01;
        let wc = make_worst_case(&[1.0], &[r], 0.9, 1.0).unwrap();
        assert_eq!(wc.exact_vote(&[1.0 + r]).unwrap(), 1);
        assert_eq!(wc.exact_vote(&[1.0 + r - 0.02]).unwrap(), 0);
    }

    #[test]
    fn lift_examples() {
        let low = lin(&[1.0], 0.0);
        let (lift, sigma) = avgpool_lift(&low, 1.0).unwrap();
        assert_eq!(sigma, 2.0);
        let x = [0.6; 4];
        assert_eq!(avg_pool(&x).unwrap(), vec![0.6]);
        let r = true_robust_radius(&lift.induced_linear(), &x).unwrap();
        assert!((r - 1.2).abs() < 1e-12);
        assert_eq!(avg_pool(&[3.0_f64; 8]).unwrap(), vec![3.0, 3.0]);
        assert!(avg_pool(&[1.0_f64; 3]).is_err());
        assert_eq!(lift.classify(&[1.0, -0.5, 0.2, 0.0], Draw::new(0)), Ok(1));
        assert_eq!(lift.classify(&[1.0, -0.5, 0.2, -1.0], Draw::new(0)), Ok(0));
    }

    #[test]
    fn bernoulli_uses_draw() {
        let b = BernoulliClassifier::new(0.52, 3, 7).unwrap();
        let n = 100_000u64;
        let hits = (0..n)
            .filter(|i| BaseClassifier::<f64>::classify(&b, &[0.0], Draw::new(i.wrapping_mul(0x9E37_79B9_7F4A_7C15))) == Ok(3))
            .count();
        assert!((hits as f64 / n as f64 - 0.52).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn linear_gradient_is_weight(w in prop::collection::vec(-3.0..3.0_f64, 1..6), x0 in -2.0..2.0_f64) {
            prop_assume!(w.iter().any(|v| v.abs() > 1e-3));
            let m = LinearModel::new(w.clone(), 0.1).unwrap();
            let x = vec![x0; w.len()];
            prop_assert_eq!(m.score_gradient(&x, 1), w);
        }

        #[test]
        fn breaking_always_flips(
            w in prop::collection::vec(-3.0..3.0_f64, 1..6),
            b in -2.0..2.0_f64,
            x in prop::collection::vec(-3.0..3.0_f64, 6),
        ) {
            prop_assume!(norm2(&w) > 1e-3);
            let m = LinearModel::new(w.clone(), b).unwrap();
            let x = &x[..w.len()];
            let r = true_robust_radius(&m, x).unwrap();
            prop_assume!(r > 1e-9);
            let d = breaking_perturbation(&m, x, 1.001 * r).unwrap();
            prop_assert!((norm2(&d) - 1.001 * r).abs() < 1e-12 * (1.0 + r));
            let moved: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            prop_assert_ne!(m.label_at(&moved), m.label_at(x));
        }

        #[test]
        fn worst_case_saturates(pa in 0.01..0.99_f64, sigma in 0.1..4.0_f64, r in 0.0..5.0_f64, dir in 0.0..6.28_f64) {
            let delta = [r.max(1e-6) * dir.cos(), r.max(1e-6) * dir.sin()];
            let x = [0.3, -1.2];
            let wc = make_worst_case(&x, &delta, pa, sigma).unwrap();
            let moved = [x[0] + delta[0], x[1] + delta[1]];
            let rn = norm2(&delta);
            let top = wc.exact_top_prob(&moved).unwrap().value();
            let runner = wc.exact_runner_prob(&moved).unwrap().value();
            prop_assert!((wc.exact_top_prob(&x).unwrap().value() - pa).abs() < 1e-9);
            prop_assert!((top - worst_case_top_prob(pa, sigma, rn).value()).abs() < 1e-9);
            prop_assert!((runner - worst_case_runner_prob(1.0 - pa, sigma, rn).value()).abs() < 1e-9);
        }

        #[test]
        fn lift_doubles_radius(w in prop::collection::vec(-3.0..3.0_f64, 1..5), b in -1.0..1.0_f64, xs in prop::collection::vec(-2.0..2.0_f64, 20)) {
            prop_assume!(norm2(&w) > 1e-3);
            let low = LinearModel::new(w.clone(), b).unwrap();
            let (lift, _) = avgpool_lift(&low, 0.5).unwrap();
            let hi = &xs[..4 * w.len()];
            let pooled = avg_pool(hi).unwrap();
            let r_low = true_robust_radius(&low, &pooled).unwrap();
            let r_hi = true_robust_radius(&lift.induced_linear(), hi).unwrap();
            prop_assert!((r_hi - 2.0 * r_low).abs() < 1e-12);
            prop_assert_eq!(lift.classify(hi, Draw::new(0)).unwrap(), low.label_at(&pooled));
        }

        #[test]
        fn interval_radius_is_tau(tau in 0.01..3.0_f64) {
            let c = make_interval_counterexample(tau).unwrap();
            let r = interval_exact_radius(&c, 0.0, 1.0).unwrap().to_scalar();
            prop_assert!((r - tau).abs() < 1e-9);
            let inputs = BoundInputs::new(std_normal_cdf(tau), 1.0 - std_normal_cdf(tau), 1.0).unwrap();
            prop_assert!((cohen_radius(&inputs).to_scalar() - tau).abs() < 1e-9);
        }
    }
}
