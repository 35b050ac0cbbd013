//! Scalar statistical functions: the standard normal CDF and quantile,
//! binomial tails in log space, the two-sided binomial test at p0 = 1/2 and
//! the one-sided Clopper-Pearson lower confidence limit.

mod binomial;
mod normal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use binomial::{
    binom_two_sided_pvalue, clopper_pearson_lower, log_binomial_cdf, log_binomial_upper_tail,
};
pub use normal::{erfc, std_normal_cdf, std_normal_pdf, std_normal_quantile};

/// A value known to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability<S>(S);

impl<S: Scalar> Probability<S> {
    pub fn new(value: S) -> Result<Self> {
        if value >= S::zero() && value <= S::one() {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("probability must lie in [0, 1], got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> S {
        self.0
    }

    /// `1 - p`.
    pub fn complement(self) -> Self {
        Self(S::one() - self.0)
    }
}

impl<S: Scalar> TryFrom<f64> for Probability<S> {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(S::of(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_bounds() {
        assert!(Probability::new(0.0_f64).is_ok());
        assert!(Probability::new(1.0_f64).is_ok());
        assert!(Probability::new(1.0000001_f64).is_err());
        assert!(Probability::new(-0.0001_f32).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(0.25_f64).unwrap().complement().value(), 0.75);
    }
}
