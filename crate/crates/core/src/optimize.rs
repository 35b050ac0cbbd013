//! One-dimensional maximization: coarse grid scan, then golden-section
//! refinement on the bracket around the best grid point.

use crate::scalar::Scalar;

pub(crate) struct Maximum<S> {
    #[cfg_attr(not(test), allow(dead_code))]
    pub arg: S,
    pub value: S,
}

/// Maximizes `f` over `[lo, hi]`. `grid` points are placed uniformly in
/// `map`-space (pass the identity for a linear grid, `ln` for a logarithmic
/// one); `unmap` inverts `map`. Non-finite objective values count as
/// `-inf`.
pub(crate) fn grid_golden_max<S, F>(
    f: F,
    lo: S,
    hi: S,
    grid: usize,
    tol: S,
    map: fn(S) -> S,
    unmap: fn(S) -> S,
) -> Maximum<S>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    debug_assert!(grid >= 3 && lo < hi);
    let eval = |x: S| {
        let v = f(x);
        if v.is_nan() {
            S::neg_infinity()
        } else {
            v
        }
    };
    let (u_lo, u_hi) = (map(lo), map(hi));
    let step = (u_hi - u_lo) / S::of_count(grid as u64 - 1);
    let point = |i: usize| {
        if i == grid - 1 {
            hi
        } else if i == 0 {
            lo
        } else {
            unmap(u_lo + step * S::of_count(i as u64)).max(lo).min(hi)
        }
    };

    let mut best = Maximum { arg: lo, value: eval(lo) };
    let mut best_i = 0;
    for i in 1..grid {
        let x = point(i);
        let v = eval(x);
        if v > best.value {
            best = Maximum { arg: x, value: v };
            best_i = i;
        }
    }

    let mut a = point(best_i.saturating_sub(1));
    let mut b = point((best_i + 1).min(grid - 1));
    let inv_phi = S::of((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.value {
            best = Maximum { arg: x, value: v };
        }
    }
    best
}

#[cfg(test)]
pub(crate) fn identity<S>(x: S) -> S {
    x
}

pub(crate) fn ln<S: Scalar>(x: S) -> S {
    x.ln()
}

pub(crate) fn exp<S: Scalar>(x: S) -> S {
    x.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let m = grid_golden_max(|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 16, 1e-12, identity, identity);
        assert!((m.arg - 0.3).abs() < 1e-6);
    }

    #[test]
    fn finds_boundary_maximum() {
        let m = grid_golden_max(|x: f64| x, 0.5, 2.0, 16, 1e-12, identity, identity);
        assert_eq!(m.arg, 2.0);
    }

    #[test]
    fn log_grid_handles_wide_ranges() {
        let m = grid_golden_max(|x: f64| -(x.ln() - 3.0).powi(2), 1e-6, 1e4, 64, 1e-12, ln, exp);
        assert!((m.arg - 3f64.exp()).abs() < 1e-4);
    }
}
