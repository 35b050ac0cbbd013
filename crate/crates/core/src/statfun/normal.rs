//! Standard normal CDF and quantile.
//!
//! The CDF goes through a complementary error function built from Cody's
//! rational Chebyshev approximations (relative error near 1e-16 in `f64`
//! across the whole real line). The quantile starts from Acklam's rational
//! approximation (relative error 1.2e-9) and applies two Newton steps on the
//! CDF, which brings it to full double precision.

#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

use crate::error::{domain, Result};
use crate::scalar::Scalar;

const ERF_A: [f64; 5] = [
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e00,
    1.87295284992346725e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.6418958354775628695e-1;

const ACKLAM_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACKLAM_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACKLAM_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACKLAM_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const ACKLAM_P_LOW: f64 = 0.02425;

#[inline]
fn k<S: Scalar>(v: f64) -> S {
    S::of(v)
}

/// `exp(-y^2)` for `y >= 0` without the cancellation of squaring directly.
fn exp_neg_sq<S: Scalar>(y: S) -> S {
    let sixteen = k::<S>(16.0);
    let ysq = (y * sixteen).trunc() / sixteen;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Complementary error function for `y >= 0`.
fn erfc_nonneg<S: Scalar>(y: S) -> S {
    if y <= k(0.46875) {
        S::one() - erf_small(y)
    } else if y <= k(4.0) {
        let mut xnum = k::<S>(ERFC_C[8]) * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + k(ERFC_C[i])) * y;
            xden = (xden + k(ERFC_D[i])) * y;
        }
        let r = (xnum + k(ERFC_C[7])) / (xden + k(ERFC_D[7]));
        exp_neg_sq(y) * r
    } else if y >= k(26.7) {
        S::zero()
    } else {
        let ysq = S::one() / (y * y);
        let mut xnum = k::<S>(ERFC_P[5]) * ysq;
        let mut xden = ysq;
        for i in 0..4 {
            xnum = (xnum + k(ERFC_P[i])) * ysq;
            xden = (xden + k(ERFC_Q[i])) * ysq;
        }
        let r = ysq * (xnum + k(ERFC_P[4])) / (xden + k(ERFC_Q[4]));
        let r = (k::<S>(FRAC_1_SQRT_PI) - r) / y;
        exp_neg_sq(y) * r
    }
}

/// `erf(x)` for `|x| <= 0.46875`.
fn erf_small<S: Scalar>(x: S) -> S {
    let ysq = x * x;
    let mut xnum = k::<S>(ERF_A[4]) * ysq;
    let mut xden = ysq;
    for i in 0..3 {
        xnum = (xnum + k(ERF_A[i])) * ysq;
        xden = (xden + k(ERF_B[i])) * ysq;
    }
    x * (xnum + k(ERF_A[3])) / (xden + k(ERF_B[3]))
}

/// Complementary error function on the whole real line.
pub fn erfc<S: Scalar>(x: S) -> S {
    if x.abs() <= k(0.46875) {
        S::one() - erf_small(x)
    } else if x > S::zero() {
        erfc_nonneg(x)
    } else {
        k::<S>(2.0) - erfc_nonneg(-x)
    }
}

/// Standard normal density.
pub fn std_normal_pdf<S: Scalar>(z: S) -> S {
    (-(z * z) / k(2.0)).exp() / S::TAU().sqrt()
}

/// Standard normal CDF `Φ(z)`.
///
/// Both tails are evaluated through `erfc` of a nonnegative argument, so
/// `Φ(z)` for very negative `z` keeps full relative precision and saturates
/// to exactly 0 (resp. 1) far in the tails. `NaN` propagates.
pub fn std_normal_cdf<S: Scalar>(z: S) -> S {
    if z.is_nan() {
        return z;
    }
    let half = k::<S>(0.5);
    let y = z.abs() * S::FRAC_1_SQRT_2();
    if y <= k(0.46875) {
        return half + half * erf_small(z * S::FRAC_1_SQRT_2());
    }
    let tail = half * erfc_nonneg(y);
    if z < S::zero() {
        tail
    } else {
        S::one() - tail
    }
}

/// Lower-tail quantile for `0 < q <= 0.5`.
fn lower_quantile<S: Scalar>(q: S) -> S {
    let mut x = if q < k(ACKLAM_P_LOW) {
        let r = (k::<S>(-2.0) * q.ln()).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((k::<S>(c[0]) * r + k(c[1])) * r + k(c[2])) * r + k(c[3])) * r + k(c[4])) * r
            + k(c[5]))
            / ((((k::<S>(d[0]) * r + k(d[1])) * r + k(d[2])) * r + k(d[3])) * r + S::one())
    } else {
        let u = q - k(0.5);
        let r = u * u;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((k::<S>(a[0]) * r + k(a[1])) * r + k(a[2])) * r + k(a[3])) * r + k(a[4])) * r
            + k(a[5]))
            * u
            / (((((k::<S>(b[0]) * r + k(b[1])) * r + k(b[2])) * r + k(b[3])) * r + k(b[4])) * r
                + S::one())
    };
    for _ in 0..2 {
        let pdf = std_normal_pdf(x);
        if pdf <= S::zero() {
            break;
        }
        let step = (std_normal_cdf(x) - q) / pdf;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

/// Standard normal quantile `Φ⁻¹(p)` for `0 < p < 1`.
///
/// `p` of exactly 0 or 1 is a domain error: callers that can hit those
/// endpoints (infinite certified radius) must handle them before calling.
/// The result is exactly antisymmetric: `quantile(p) == -quantile(1 - p)`
/// whenever `1 - p` is exact.
pub fn std_normal_quantile<S: Scalar>(p: S) -> Result<S> {
    if !(p > S::zero() && p < S::one()) {
        return domain(format!("normal quantile needs 0 < p < 1, got {p}"));
    }
    let half = k::<S>(0.5);
    if p == half {
        Ok(S::zero())
    } else if p < half {
        Ok(lower_quantile(p))
    } else {
        Ok(-lower_quantile(S::one() - p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statfun::test_oracle::{bisect_quantile, series_cdf};

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0_f64), 0.5);
        let oracle = series_cdf(1.0);
        assert!((oracle - 0.841345).abs() < 1e-6);
        assert!((std_normal_cdf(1.0_f64) - oracle).abs() < 1e-14);
        assert!((std_normal_cdf(-1.0_f64) - (1.0 - oracle)).abs() < 1e-14);
        assert!((std_normal_cdf(-1.0_f64) - 0.158655).abs() < 1e-6);
    }

    #[test]
    fn cdf_matches_series_oracle_on_grid() {
        let mut z = -8.0;
        while z <= 8.0 {
            let err = (std_normal_cdf(z) - series_cdf(z)).abs();
            assert!(err <= 1e-12, "z={z} err={err}");
            z += 0.0625 + 1e-3;
        }
    }

    #[test]
    fn cdf_is_monotone_and_saturates() {
        let mut prev = 0.0;
        let mut z = -40.0;
        while z <= 40.0 {
            let c = std_normal_cdf(z);
            assert!(c >= prev, "z={z}");
            assert!((0.0..=1.0).contains(&c));
            prev = c;
            z += 0.01;
        }
        assert_eq!(std_normal_cdf(-60.0_f64), 0.0);
        assert_eq!(std_normal_cdf(60.0_f64), 1.0);
        // deep tail keeps relative precision
        let t = std_normal_cdf(-10.0_f64);
        assert!((t / 7.619853024160527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5_f64).unwrap(), 0.0);
        let q = std_normal_quantile(0.8_f64).unwrap();
        assert!((q - bisect_quantile(0.8)).abs() < 1e-12);
        assert!((q - 0.841621).abs() < 1e-6);
        // the n = 100, alpha = 0.001 all-successes point
        let q = std_normal_quantile(0.933254_f64).unwrap();
        let oracle = bisect_quantile(0.933254);
        assert!((q - oracle).abs() < 1e-11);
        assert!((q - 1.500_472_7).abs() < 1e-6);
    }

    #[test]
    fn quantile_rejects_endpoints() {
        assert!(std_normal_quantile(0.0_f64).is_err());
        assert!(std_normal_quantile(1.0_f64).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
        assert!(std_normal_quantile(-0.1_f64).is_err());
    }

    #[test]
    fn round_trip_and_symmetry_grid() {
        let mut grid = vec![0.001_f64];
        let mut p = 0.01;
        while p < 0.995 {
            grid.push(p);
            p += 0.01;
        }
        grid.push(0.999);
        for &p in &grid {
            let z = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(z) - p).abs() <= 1e-10, "p={p}");
            assert!((std_normal_cdf(z) - p).abs() <= 1e-12, "p={p}");
            let zc = std_normal_quantile(1.0 - p).unwrap();
            assert!((z + zc).abs() <= 1e-10, "p={p}");
        }
    }

    #[test]
    fn quantile_tails() {
        for &p in &[1e-300_f64, 1e-100, 1e-20, 1e-10, 1e-5] {
            let z = std_normal_quantile(p).unwrap();
            let rel = (std_normal_cdf(z) / p - 1.0).abs();
            assert!(rel < 1e-12, "p={p} rel={rel}");
        }
    }

    #[test]
    fn single_precision_instance() {
        let z: f32 = std_normal_quantile(0.8_f32).unwrap();
        assert!((z - 0.841_621_2).abs() < 1e-5);
        assert!((std_normal_cdf(1.0_f32) - 0.841_344_7).abs() < 1e-6);
    }
}
