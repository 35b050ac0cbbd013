//! Certified-radius formulas.
//!
//! All radii are in input units and scale linearly with `sigma`. The tight
//! bound is closed form; the two prior bounds carry an internal
//! one-dimensional maximization over their free parameter, solved by a
//! 1024-point logarithmic grid followed by golden-section refinement.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::optimize::{exp, grid_golden_max, ln};
use crate::scalar::Scalar;
use crate::statfun::{std_normal_cdf, std_normal_quantile, Probability};

const SEARCH_GRID: usize = 1024;
const SEARCH_TOL: f64 = 1e-9;
/// Keeps the Lecuyer parameter strictly inside `pA - exp(2 beta) pB > 0`.
const LECUYER_MARGIN: f64 = 1e-12;
/// Search range for `alpha - 1` in the Rényi bound.
const LI_SEARCH: (f64, f64) = (1e-6, 1e4);

/// A certified radius. `Unbounded` is the `pA -> 1` limit of the tight bound
/// and is kept distinct from any float so that it serializes explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius<S> {
    Finite(S),
    Unbounded,
}

impl<S: Scalar> Radius<S> {
    pub fn finite(self) -> Option<S> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Radius::Unbounded)
    }

    /// `true` when the certificate covers every perturbation of norm `< r`
    /// for a radius `r` at most this one.
    pub fn at_least(self, r: S) -> bool {
        match self {
            Radius::Finite(v) => v >= r,
            Radius::Unbounded => true,
        }
    }

    /// Value as a float, `+inf` for `Unbounded`.
    pub fn to_scalar(self) -> S {
        self.finite().unwrap_or_else(S::infinity)
    }
}

impl<S: Scalar> fmt::Display for Radius<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Finite(r) => write!(f, "{r}"),
            Radius::Unbounded => f.write_str("inf"),
        }
    }
}

impl<S: Scalar> Serialize for Radius<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        match self {
            Radius::Finite(r) => serializer.serialize_f64(r.as_f64()),
            Radius::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Radius<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RadiusVisitor<S>(std::marker::PhantomData<S>);

        impl<S: Scalar> Visitor<'_> for RadiusVisitor<S> {
            type Value = Radius<S>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                if v.is_finite() && v >= 0.0 {
                    Ok(Radius::Finite(S::of(v)))
                } else {
                    Err(E::custom(format!("invalid radius {v}")))
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                if v == "inf" {
                    Ok(Radius::Unbounded)
                } else {
                    Err(E::custom(format!("invalid radius string {v:?}")))
                }
            }
        }

        deserializer.deserialize_any(RadiusVisitor(std::marker::PhantomData))
    }
}

/// Probability bounds and noise level feeding a radius formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs<S> {
    pa_lower: Probability<S>,
    pb_upper: Probability<S>,
    sigma: S,
}

impl<S: Scalar> BoundInputs<S> {
    /// Requires `0 <= pb_upper <= pa_lower <= 1` and `sigma > 0`.
    pub fn new(pa_lower: S, pb_upper: S, sigma: S) -> Result<Self> {
        let pa = Probability::new(pa_lower)?;
        let pb = Probability::new(pb_upper)?;
        if pb_upper > pa_lower {
            return Err(Error::InvalidParams(format!(
                "need pb_upper <= pa_lower, got pA={pa_lower} pB={pb_upper}"
            )));
        }
        if !(sigma > S::zero() && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { pa_lower: pa, pb_upper: pb, sigma })
    }

    /// Binary shortcut `pB = 1 - pA`.
    pub fn binary(pa_lower: S, sigma: S) -> Result<Self> {
        Self::new(pa_lower, S::one() - pa_lower, sigma)
    }

    pub fn pa_lower(&self) -> S {
        self.pa_lower.value()
    }

    pub fn pb_upper(&self) -> S {
        self.pb_upper.value()
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Tight Gaussian bound.
    Cohen,
    /// Differential-privacy (Gaussian mechanism) bound.
    Lecuyer,
    /// Rényi-divergence bound.
    Li,
}

impl BoundKind {
    pub const ALL: [BoundKind; 3] = [BoundKind::Cohen, BoundKind::Lecuyer, BoundKind::Li];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Cohen => "cohen",
            BoundKind::Lecuyer => "lecuyer",
            BoundKind::Li => "li",
        }
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cohen" => Ok(BoundKind::Cohen),
            "lecuyer" => Ok(BoundKind::Lecuyer),
            "li" => Ok(BoundKind::Li),
            other => Err(Error::InvalidParams(format!("unknown bound kind {other:?}"))),
        }
    }
}

/// Radius under the chosen bound.
pub fn radius<S: Scalar>(kind: BoundKind, inputs: &BoundInputs<S>) -> Radius<S> {
    match kind {
        BoundKind::Cohen => cohen_radius(inputs),
        BoundKind::Lecuyer => Radius::Finite(lecuyer_radius(inputs)),
        BoundKind::Li => li_radius(inputs),
    }
}

/// `sigma/2 (Φ⁻¹(pA) - Φ⁻¹(pB))`, unbounded when `pA = 1` or `pB = 0`.
pub fn cohen_radius<S: Scalar>(inputs: &BoundInputs<S>) -> Radius<S> {
    let (pa, pb) = (inputs.pa_lower(), inputs.pb_upper());
    if pa == S::one() || pb == S::zero() {
        return Radius::Unbounded;
    }
    if pa == pb {
        return Radius::Finite(S::zero());
    }
    // both arguments are strictly inside (0, 1) here
    let za = std_normal_quantile(pa).expect("pA in (0, 1)");
    let zb = std_normal_quantile(pb).expect("pB in (0, 1)");
    Radius::Finite((inputs.sigma() / S::of(2.0) * (za - zb)).max(S::zero()))
}

/// `sigma Φ⁻¹(pA)`: the tight bound with `pB = 1 - pA`.
///
/// `pA <= 1/2` is a domain error; the caller should abstain instead.
pub fn cohen_radius_binary<S: Scalar>(pa_lower: S, sigma: S) -> Result<Radius<S>> {
    let pa = Probability::new(pa_lower)?;
    if !(sigma > S::zero()) {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    if pa.value() <= S::of(0.5) {
        return domain(format!("binary radius needs pA > 1/2, got {pa_lower}"));
    }
    if pa.value() == S::one() {
        return Ok(Radius::Unbounded);
    }
    Ok(Radius::Finite(sigma * std_normal_quantile(pa_lower)?))
}

fn shifted_prob<S: Scalar>(p: S, shift: S) -> Probability<S> {
    let v = if p <= S::zero() {
        S::zero()
    } else if p >= S::one() {
        S::one()
    } else {
        std_normal_cdf(std_normal_quantile(p).expect("p in (0, 1)") + shift)
    };
    Probability::new(v).expect("normal CDF lies in [0, 1]")
}

/// Smallest probability of the top class at offset `r` over all base
/// classifiers with `P(f(x + e) = cA) = pA`: `Φ(Φ⁻¹(pA) - r/sigma)`.
pub fn worst_case_top_prob<S: Scalar>(pa_lower: S, sigma: S, r: S) -> Probability<S> {
    shifted_prob(pa_lower, -r / sigma)
}

/// Largest probability of a runner-up class at offset `r`:
/// `Φ(Φ⁻¹(pB) + r/sigma)`.
pub fn worst_case_runner_prob<S: Scalar>(pb_upper: S, sigma: S, r: S) -> Probability<S> {
    shifted_prob(pb_upper, r / sigma)
}

/// Ceiling `sigma Φ⁻¹(alpha^(1/n))` on any radius certifiable from `n`
/// samples at confidence `1 - alpha` (all samples agreeing).
pub fn max_certifiable_radius<S: Scalar>(n: u64, alpha: S, sigma: S) -> Result<S> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let p = (alpha.ln() / S::of_count(n)).exp();
    if p <= S::of(0.5) {
        return domain(format!("alpha^(1/n) = {p} <= 1/2: no radius certifiable"));
    }
    Ok(sigma * std_normal_quantile(p)?)
}

/// The Gaussian-mechanism radius
/// `sup_beta sigma beta / sqrt(2 ln(1.25 (1 + e^beta) / (pA - e^(2 beta) pB)))`
/// over `0 < beta <= min(1, ln(pA/pB)/2)`. Zero when the interval is empty.
pub fn lecuyer_radius<S: Scalar>(inputs: &BoundInputs<S>) -> S {
    let (pa, pb, sigma) = (inputs.pa_lower(), inputs.pb_upper(), inputs.sigma());
    if pa <= pb {
        return S::zero();
    }
    let upper = if pb == S::zero() {
        S::one()
    } else {
        S::one().min((pa / pb).ln() / S::of(2.0) - S::of(LECUYER_MARGIN))
    };
    if upper <= S::zero() {
        return S::zero();
    }
    let objective = |beta: S| lecuyer_objective(pa, pb, sigma, beta);
    let lower = upper * S::of(1e-9);
    let best = grid_golden_max(objective, lower, upper, SEARCH_GRID, S::of(SEARCH_TOL), ln, exp);
    best.value.max(S::zero())
}

pub(crate) fn lecuyer_objective<S: Scalar>(pa: S, pb: S, sigma: S, beta: S) -> S {
    let num = pa - (S::of(2.0) * beta).exp() * pb;
    if num <= S::zero() {
        return S::zero();
    }
    let log_term = (S::of(1.25) * (S::one() + beta.exp()) / num).ln();
    sigma * beta / (S::of(2.0) * log_term).sqrt()
}

/// The Rényi-divergence radius
/// `sup_alpha sigma sqrt(-(2/alpha) ln(1 - pA - pB + 2 M_alpha))`, with
/// `M_alpha = (½(pA^(1-alpha) + pB^(1-alpha)))^(1/(1-alpha))`, searched over
/// `alpha > 1`.
pub fn li_radius<S: Scalar>(inputs: &BoundInputs<S>) -> Radius<S> {
    let (pa, pb, sigma) = (inputs.pa_lower(), inputs.pb_upper(), inputs.sigma());
    if pa <= pb {
        return Radius::Finite(S::zero());
    }
    if pa == S::one() && pb == S::zero() {
        return Radius::Unbounded;
    }
    let objective = |shift: S| li_objective(pa, pb, sigma, S::one() + shift);
    let best = grid_golden_max(
        objective,
        S::of(LI_SEARCH.0),
        S::of(LI_SEARCH.1),
        SEARCH_GRID,
        S::of(SEARCH_TOL),
        ln,
        exp,
    );
    Radius::Finite(best.value.max(S::zero()))
}

/// Objective of the Rényi bound at order `order > 1`.
pub(crate) fn li_objective<S: Scalar>(pa: S, pb: S, sigma: S, order: S) -> S {
    let e = S::one() - order;
    let la = e * pa.ln();
    let lb = if pb > S::zero() { e * pb.ln() } else { S::infinity() };
    let hi = la.max(lb);
    let lse = if hi.is_infinite() {
        hi
    } else {
        hi + (-(la - lb).abs()).exp().ln_1p()
    };
    let log_mean = (lse - S::LN_2()) / e;
    let mean = log_mean.exp();
    let deficit = (pa + pb - S::of(2.0) * mean).max(S::zero());
    if deficit >= S::one() {
        return S::infinity();
    }
    let neg_log = -(-deficit).ln_1p();
    sigma * (S::of(2.0) / order * neg_log).max(S::zero()).sqrt()
}
