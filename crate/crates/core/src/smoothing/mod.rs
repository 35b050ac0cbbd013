//! The Monte Carlo engine: sampling a base classifier under Gaussian noise,
//! `predict` (hypothesis test between the two top labels) and `certify`
//! (Clopper-Pearson lower bound on the top-class probability).

mod classifier;
mod noise;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{cohen_radius_binary, Radius};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::statfun::{binom_two_sided_pvalue, clopper_pearson_lower};

pub use classifier::{argmax, log_softmax_at, softmax, BaseClassifier, Differentiable, Draw, Label};
pub use noise::NoiseStream;

/// Noise level and Monte Carlo protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams<S> {
    sigma: S,
    n0: u64,
    n: u64,
    alpha: S,
}

impl<S: Scalar> SmoothingParams<S> {
    pub fn new(sigma: S, n0: u64, n: u64, alpha: S) -> Result<Self> {
        if !(sigma > S::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        if n0 == 0 || n == 0 {
            return Err(Error::InvalidParams("n0 and n must be at least 1".into()));
        }
        if !(alpha > S::zero() && alpha < S::one()) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { sigma, n0, n, alpha })
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }
}

/// Per-label tallies of noisy base-classifier evaluations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<Label, u64>", into = "BTreeMap<Label, u64>")]
pub struct ClassCounts {
    counts: BTreeMap<Label, u64>,
    total: u64,
}

impl From<BTreeMap<Label, u64>> for ClassCounts {
    fn from(mut counts: BTreeMap<Label, u64>) -> Self {
        counts.retain(|_, c| *c > 0);
        let total = counts.values().sum();
        Self { counts, total }
    }
}

impl From<ClassCounts> for BTreeMap<Label, u64> {
    fn from(c: ClassCounts) -> Self {
        c.counts
    }
}

impl FromIterator<(Label, u64)> for ClassCounts {
    fn from_iter<I: IntoIterator<Item = (Label, u64)>>(iter: I) -> Self {
        let mut counts = BTreeMap::new();
        for (label, c) in iter {
            *counts.entry(label).or_insert(0) += c;
        }
        counts.into()
    }
}

impl ClassCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, label: Label, count: u64) {
        if count > 0 {
            *self.counts.entry(label).or_insert(0) += count;
            self.total += count;
        }
    }

    pub fn merge(&mut self, other: &ClassCounts) {
        for (&label, &c) in &other.counts {
            self.add(label, c);
        }
    }

    pub fn get(&self, label: Label) -> u64 {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Labels with a nonzero count, in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (Label, u64)> + '_ {
        self.counts.iter().map(|(&l, &c)| (l, c))
    }

    pub fn as_map(&self) -> &BTreeMap<Label, u64> {
        &self.counts
    }

    /// Largest count, lowest label on ties.
    pub fn top(&self) -> Option<(Label, u64)> {
        self.top_two().0
    }

    /// The two largest counts `nA >= nB`, lowest label first on ties.
    pub fn top_two(&self) -> (Option<(Label, u64)>, Option<(Label, u64)>) {
        let mut first: Option<(Label, u64)> = None;
        let mut second: Option<(Label, u64)> = None;
        for (label, c) in self.iter() {
            match first {
                Some((_, f)) if c <= f => {
                    if second.is_none_or(|(_, s)| c > s) {
                        second = Some((label, c));
                    }
                }
                _ => {
                    second = first;
                    first = Some((label, c));
                }
            }
        }
        (first, second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    Label(Label),
    Abstain,
}

impl Prediction {
    pub fn label(self) -> Option<Label> {
        match self {
            Prediction::Label(l) => Some(l),
            Prediction::Abstain => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub enum Certification<S> {
    Certified { label: Label, radius: Radius<S>, pa_lower: S },
    Abstain,
}

impl<S: Scalar> Certification<S> {
    pub fn label(&self) -> Option<Label> {
        match self {
            Certification::Certified { label, .. } => Some(*label),
            Certification::Abstain => None,
        }
    }

    pub fn radius(&self) -> Option<Radius<S>> {
        match self {
            Certification::Certified { radius, .. } => Some(*radius),
            Certification::Abstain => None,
        }
    }

    pub fn pa_lower(&self) -> Option<S> {
        match self {
            Certification::Certified { pa_lower, .. } => Some(*pa_lower),
            Certification::Abstain => None,
        }
    }
}

/// Everything `certify` observed, for callers that persist raw counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOutcome<S> {
    pub selection: ClassCounts,
    pub estimation: ClassCounts,
    pub certification: Certification<S>,
}

/// Test at level `alpha` whether the top label beats the runner-up.
pub fn prediction_from_counts<S: Scalar>(counts: &ClassCounts, alpha: S) -> Prediction {
    let (first, second) = counts.top_two();
    let Some((label, na)) = first else {
        return Prediction::Abstain;
    };
    let nb = second.map_or(0, |(_, c)| c);
    let p = binom_two_sided_pvalue(na, na + nb, S::of(0.5)).expect("p0 = 1/2 is supported");
    if p <= alpha {
        Prediction::Label(label)
    } else {
        Prediction::Abstain
    }
}

/// Certificate for `guess` from the estimation counts: abstain unless the
/// Clopper-Pearson lower bound on its probability exceeds 1/2.
pub fn certification_from_counts<S: Scalar>(
    guess: Label,
    estimation: &ClassCounts,
    sigma: S,
    alpha: S,
) -> Certification<S> {
    let n = estimation.total();
    if n == 0 {
        return Certification::Abstain;
    }
    let pa_lower = clopper_pearson_lower(estimation.get(guess), n, alpha);
    if pa_lower > S::of(0.5) {
        let radius = cohen_radius_binary(pa_lower, sigma).expect("pA > 1/2 and sigma > 0");
        Certification::Certified { label: guess, radius, pa_lower }
    } else {
        Certification::Abstain
    }
}

/// Rescale counts to total `n_new` keeping proportions; each count is
/// rounded half-up and the top class absorbs the residue.
pub fn project_counts(counts: &ClassCounts, n_new: u64) -> Result<ClassCounts> {
    let total = counts.total();
    if total == 0 || n_new == 0 {
        return Err(Error::InvalidParams("projection needs nonempty counts and n_new >= 1".into()));
    }
    let (top, top_count) = counts.top().expect("nonempty");
    let (n_new, total) = (n_new as u128, total as u128);
    let round = |c: u64| (2 * n_new * c as u128 + total) / (2 * total);
    let mut out = BTreeMap::new();
    let mut assigned: u128 = 0;
    for (label, c) in counts.iter() {
        if label == top {
            continue;
        }
        let scaled = round(c);
        assigned += scaled;
        out.insert(label, scaled);
    }
    // many half-up roundings can overshoot; undo the largest excesses
    while assigned + round(top_count) > n_new {
        let excess = |(&l, &s): (&Label, &u128)| (s * total) as i128 - (n_new * counts.get(l) as u128) as i128;
        let (&label, _) = out.iter().filter(|(_, &s)| s > 0).max_by_key(|e| excess(*e)).expect("some");
        *out.get_mut(&label).expect("present") -= 1;
        assigned -= 1;
    }
    out.insert(top, n_new - assigned);
    Ok(out.into_iter().map(|(l, c)| (l, c as u64)).collect())
}

/// Evaluates a base classifier on noisy copies of an input.
///
/// Sample `i` of example `e` always sees the deviates `(e, i, ·)` of the
/// noise stream, so counts do not depend on batch size or worker count.
#[derive(Debug)]
pub struct Sampler {
    batch_size: u64,
    pool: Option<rayon::ThreadPool>,
}

impl Default for Sampler {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Sampler {
    pub const DEFAULT_BATCH: u64 = 1000;

    pub fn sequential() -> Self {
        Self { batch_size: Self::DEFAULT_BATCH, pool: None }
    }

    /// A sampler fanning batches out over `workers` threads.
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidParams("worker count must be at least 1".into()));
        }
        if workers == 1 {
            return Ok(Self::sequential());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
        Ok(Self { batch_size: Self::DEFAULT_BATCH, pool: Some(pool) })
    }

    pub fn batch_size(mut self, batch_size: u64) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Counts for samples `first..first + num` of `example_id`.
    #[allow(clippy::too_many_arguments)]
    pub fn sample_range<S, F>(
        &self,
        f: &F,
        x: &[S],
        first: u64,
        num: u64,
        sigma: S,
        noise: &NoiseStream,
        example_id: u64,
    ) -> Result<ClassCounts>
    where
        S: Scalar,
        F: BaseClassifier<S> + ?Sized,
    {
        check_input(f, x)?;
        if !(sigma > S::zero()) {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        let batches = num.div_ceil(self.batch_size);
        let run = |b: u64| {
            let start = first + b * self.batch_size;
            let end = (start + self.batch_size).min(first + num);
            run_batch(f, x, start, end, sigma, noise, example_id)
        };
        let partials: Vec<Result<ClassCounts>> = match &self.pool {
            None => (0..batches).map(run).collect(),
            Some(pool) => pool.install(|| (0..batches).into_par_iter().map(run).collect()),
        };
        let mut counts = ClassCounts::new();
        for part in partials {
            counts.merge(&part?);
        }
        Ok(counts)
    }

    pub fn sample_under_noise<S, F>(
        &self,
        f: &F,
        x: &[S],
        num: u64,
        sigma: S,
        noise: &NoiseStream,
        example_id: u64,
    ) -> Result<ClassCounts>
    where
        S: Scalar,
        F: BaseClassifier<S> + ?Sized,
    {
        self.sample_range(f, x, 0, num, sigma, noise, example_id)
    }

    pub fn predict<S, F>(
        &self,
        f: &F,
        params: &SmoothingParams<S>,
        x: &[S],
        noise: &NoiseStream,
        example_id: u64,
    ) -> Result<Prediction>
    where
        S: Scalar,
        F: BaseClassifier<S> + ?Sized,
    {
        let counts = self.sample_under_noise(f, x, params.n, params.sigma, noise, example_id)?;
        Ok(prediction_from_counts(&counts, params.alpha))
    }

    /// `certify`, also returning both sets of raw counts. Selection uses
    /// samples `0..n0`, estimation the disjoint range `n0..n0 + n`.
    pub fn certify_detailed<S, F>(
        &self,
        f: &F,
        params: &SmoothingParams<S>,
        x: &[S],
        noise: &NoiseStream,
        example_id: u64,
    ) -> Result<CertifyOutcome<S>>
    where
        S: Scalar,
        F: BaseClassifier<S> + ?Sized,
    {
        let selection = self.sample_range(f, x, 0, params.n0, params.sigma, noise, example_id)?;
        let estimation =
            self.sample_range(f, x, params.n0, params.n, params.sigma, noise, example_id)?;
        let (guess, _) = selection.top().expect("n0 >= 1 samples");
        let certification =
            certification_from_counts(guess, &estimation, params.sigma, params.alpha);
        Ok(CertifyOutcome { selection, estimation, certification })
    }

    pub fn certify<S, F>(
        &self,
        f: &F,
        params: &SmoothingParams<S>,
        x: &[S],
        noise: &NoiseStream,
        example_id: u64,
    ) -> Result<Certification<S>>
    where
        S: Scalar,
        F: BaseClassifier<S> + ?Sized,
    {
        Ok(self.certify_detailed(f, params, x, noise, example_id)?.certification)
    }
}

fn check_input<S: Scalar, F: BaseClassifier<S> + ?Sized>(f: &F, x: &[S]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidParams("input vector is empty".into()));
    }
    match f.input_dim() {
        Some(d) if d != x.len() => Err(Error::DimensionMismatch { expected: d, got: x.len() }),
        _ => Ok(()),
    }
}

fn run_batch<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    f: &F,
    x: &[S],
    start: u64,
    end: u64,
    sigma: S,
    noise: &NoiseStream,
    example_id: u64,
) -> Result<ClassCounts> {
    let mut eps = vec![S::zero(); x.len()];
    let mut noisy = vec![S::zero(); x.len()];
    let mut counts = BTreeMap::<Label, u64>::new();
    for i in start..end {
        let draw = noise.fill(example_id, i, &mut eps);
        for ((z, &xi), &e) in noisy.iter_mut().zip(x).zip(&eps) {
            *z = xi + sigma * e;
        }
        *counts.entry(f.classify(&noisy, draw)?).or_insert(0) += 1;
    }
    Ok(counts.into())
}

/// [`Sampler::sample_under_noise`] on the calling thread.
pub fn sample_under_noise<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    f: &F,
    x: &[S],
    num: u64,
    sigma: S,
    noise: &NoiseStream,
    example_id: u64,
) -> Result<ClassCounts> {
    Sampler::sequential().sample_under_noise(f, x, num, sigma, noise, example_id)
}

/// [`Sampler::predict`] on the calling thread.
pub fn predict<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    f: &F,
    params: &SmoothingParams<S>,
    x: &[S],
    noise: &NoiseStream,
    example_id: u64,
) -> Result<Prediction> {
    Sampler::sequential().predict(f, params, x, noise, example_id)
}

/// [`Sampler::certify`] on the calling thread.
pub fn certify<S: Scalar, F: BaseClassifier<S> + ?Sized>(
    f: &F,
    params: &SmoothingParams<S>,
    x: &[S],
    noise: &NoiseStream,
    example_id: u64,
) -> Result<Certification<S>> {
    Sampler::sequential().certify(f, params, x, noise, example_id)
}
