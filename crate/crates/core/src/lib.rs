//! Certified l2 robustness through Gaussian randomized smoothing.
//!
//! A base classifier `f` is turned into the smoothed classifier
//! `g(x) = argmax_c P(f(x + e) = c)`, `e ~ N(0, sigma^2 I)`. The crate provides
//!
//! * [`statfun`]: normal CDF/quantile, binomial tails, Clopper-Pearson limits;
//! * [`bounds`]: the tight radius `sigma/2 (Φ⁻¹(pA) - Φ⁻¹(pB))`, its binary
//!   special case, worst-case translated probabilities, the sample-count
//!   ceiling, and the two looser differential-privacy / Rényi radii;
//! * [`smoothing`]: replayable Monte Carlo sampling with `predict` and
//!   `certify`;
//! * [`oracles`]: classifiers whose smoothed behaviour is known in closed form;
//! * [`training`]: Gaussian-augmentation training of small models and the
//!   plain-text model format;
//! * [`attack`]: a PGD attack on the smoothed classifier;
//! * [`report`]: certified-accuracy curves, the Bernstein lower bound and
//!   sample-count projections over JSONL certification records.
//!
//! Everything numeric is generic over [`Scalar`] (`f32`/`f64`); the `*64`
//! aliases below fix the double-precision instances used by the CLI.

pub mod attack;
pub mod bounds;
pub mod error;
mod optimize;
pub mod oracles;
pub mod report;
mod scalar;
pub mod smoothing;
pub mod statfun;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Probability64 = statfun::Probability<f64>;
pub type BoundInputs64 = bounds::BoundInputs<f64>;
pub type Radius64 = bounds::Radius<f64>;
pub type SmoothingParams64 = smoothing::SmoothingParams<f64>;
pub type Certification64 = smoothing::Certification<f64>;
pub type LinearModel64 = oracles::LinearModel<f64>;
pub type IntervalClassifier64 = oracles::IntervalClassifier<f64>;
pub type WorstCaseClassifier64 = oracles::WorstCaseClassifier<f64>;
pub type LogisticModel64 = training::LogisticModel<f64>;
pub type MlpModel64 = training::MlpModel<f64>;
pub type AnyModel64 = training::AnyModel<f64>;
pub type TrainConfig64 = training::TrainConfig<f64>;
pub type LabeledExample64 = training::LabeledExample<f64>;
pub type AttackParams64 = attack::AttackParams<f64>;
