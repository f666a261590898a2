//! Residuals of the convexity inequalities behind the ascent. Each residual
//! is `right side minus left side` arranged so that the inequality says
//! `residual >= 0`.

use crate::dyadic::{DyadicFunction, DyadicSet};
use crate::error::{invalid, Error, Result};

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `p(p-1) / 2^(3-p)`.
pub fn gentle_constant(p: f64) -> f64 {
    p * (p - 1.0) / (3.0 - p).exp2()
}

/// `(a+b)^p - p a^(p-1) b - a^p - p(p-1)/2^(3-p) b^2 / a^(2-p)` for `|b| <= a`.
///
/// Evaluated as `a^p` times the same expression in `t = b/a`, which keeps the
/// rounding error proportional to `a^p`.
pub fn two_point_residual(p: f64, a: f64, b: f64) -> Result<f64> {
    check_p(p)?;
    if !(a > 0.0) || !a.is_finite() || !(b.abs() <= a) {
        return Err(invalid(
            "b",
            format!("need a > 0 and |b| <= a, got a = {a}, b = {b}"),
        ));
    }
    let t = b / a;
    let r = (1.0 + t).powf(p) - p * t - 1.0 - gentle_constant(p) * t * t;
    Ok(a.powf(p) * r)
}

/// `‖a 1_A + y‖_p^p - |a|^p μ(A) - p(p-1)/2^(3-p) ‖y‖_2^2 / |a|^(2-p)` for `y`
/// supported on `A`, mean zero, with `|y| <= |a|`.
pub fn level_set_residual(p: f64, a: f64, set: &DyadicSet, y: &DyadicFunction) -> Result<f64> {
    check_p(p)?;
    if a == 0.0 || !a.is_finite() {
        return Err(invalid("a", format!("must be a nonzero number, got {a}")));
    }
    let depth = set.depth().max(y.depth());
    let set = set.refine(depth)?;
    let y = y.refine(depth)?;
    let w = y.atom_measure();
    let mut sum = 0.0;
    for (i, &v) in y.values().iter().enumerate() {
        if v != 0.0 && !set.contains(i) {
            return Err(invalid("y", "must be supported on the set"));
        }
        if v.abs() > a.abs() * (1.0 + 1e-12) {
            return Err(invalid("y", "must satisfy |y| <= |a|"));
        }
        sum += v;
    }
    if (sum * w).abs() > 1e-12 {
        return Err(invalid("y", "must have mean zero"));
    }
    let lhs = set.indicator().scaled(a).plus(&y).lp_norm_pow(p)?;
    let l2 = y.lp_norm_pow(2.0)?;
    Ok(lhs - a.abs().powf(p) * set.measure() - gentle_constant(p) * l2 / a.abs().powf(2.0 - p))
}

/// `‖u‖_p^p + ‖v‖_p^p - (‖u+v‖_p^p + ‖u-v‖_p^p) / 2`, nonnegative for `1 <= p <= 2`.
pub fn type_p_residual(p: f64, u: &DyadicFunction, v: &DyadicFunction) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidExponent(p));
    }
    let depth = u.depth().max(v.depth());
    let u = u.refine(depth)?;
    let v = v.refine(depth)?;
    let avg = 0.5 * (u.plus(&v).lp_norm_pow(p)? + u.minus(&v).lp_norm_pow(p)?);
    Ok(u.lp_norm_pow(p)? + v.lp_norm_pow(p)? - avg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_at_one_one() {
        let r = two_point_residual(1.5, 1.0, 1.0).unwrap();
        let expected = 2f64.powf(1.5) - 2.5 - 0.75 / 2f64.powf(1.5);
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.0632).abs() < 1e-4);
    }

    #[test]
    fn two_point_is_exact_at_two() {
        for (a, b) in [(1.0, 0.3), (5.0, -4.0), (0.2, 0.2)] {
            assert!(two_point_residual(2.0, a, b).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn two_point_rejects_large_b() {
        assert!(two_point_residual(1.5, 1.0, 1.5).is_err());
        assert!(two_point_residual(2.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn level_set_with_zero_perturbation() {
        let set = DyadicSet::interval(1, 1, 3).unwrap();
        let r = level_set_residual(1.5, 0.7, &set, &DyadicFunction::zeros(3)).unwrap();
        assert!(r.abs() < 1e-15);
    }

    #[test]
    fn parallelogram_at_two() {
        let u = DyadicFunction::new(2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let v = DyadicFunction::new(2, vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        assert!(type_p_residual(2.0, &u, &v).unwrap().abs() < 1e-14);
        assert!(type_p_residual(1.3, &u, &v).unwrap() >= 0.0);
    }
}
