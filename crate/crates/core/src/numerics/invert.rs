use crate::error::{Error, Result};

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_PRECISION: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

/// Left-continuous generalized inverse `inf{x in [lo, hi] : F(x) >= u}`.
///
/// `f` must be non-decreasing on the bracket. On a flat stretch of `f` at
/// level `u` the left end of the stretch is returned.
pub fn invert_monotone<F: Fn(f64) -> f64>(f: F, u: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0,1), got {u}")));
    }
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    if f(hi) < u {
        return Err(Error::Domain(format!(
            "level {u} not attained on [{lo}, {hi}] (F(hi) = {})",
            f(hi)
        )));
    }
    if f(lo) >= u {
        return Ok(lo);
    }
    for _ in 0..MAX_ITERATIONS {
        if hi - lo <= BISECTION_PRECISION {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Widens `(lo, hi)` geometrically until `f(lo) < u <= f(hi)`.
pub fn expand_bracket<F: Fn(f64) -> f64>(f: &F, u: f64, start: (f64, f64)) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = start;
    let mut step = (hi - lo).max(1.0);
    for _ in 0..200 {
        if f(hi) >= u {
            break;
        }
        hi += step;
        step *= 2.0;
    }
    step = (hi - lo).max(1.0);
    for _ in 0..200 {
        if f(lo) < u {
            break;
        }
        lo -= step;
        step *= 2.0;
    }
    if f(hi) < u {
        return Err(Error::Domain(format!("cannot bracket level {u}")));
    }
    Ok((lo, hi))
}

/// Central difference with step scaled to `x`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = f64::EPSILON.cbrt() * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// First differences `v[i+1] - v[i]`.
pub fn forward_differences(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_half(x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x < 1.0 {
            0.5
        } else {
            1.0
        }
    }

    #[test]
    fn identity() {
        let x = invert_monotone(|x| x, 0.3, (0.0, 1.0)).unwrap();
        assert!((x - 0.3).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_levels() {
        let x = invert_monotone(bernoulli_half, 0.4, (-2.0, 3.0)).unwrap();
        assert!(x.abs() < 1e-11);
        let x = invert_monotone(bernoulli_half, 0.5, (-2.0, 3.0)).unwrap();
        assert!(x.abs() < 1e-11);
        let x = invert_monotone(bernoulli_half, 0.7, (-2.0, 3.0)).unwrap();
        assert!((x - 1.0).abs() < 1e-11);
    }

    #[test]
    fn out_of_range_level() {
        assert!(invert_monotone(|x| x, 1.2, (0.0, 1.0)).is_err());
        assert!(invert_monotone(|x| 0.5 * x, 0.7, (0.0, 1.0)).is_err());
    }

    #[test]
    fn bracket_expansion() {
        let cdf = |x: f64| 1.0 - (-x.max(0.0)).exp();
        let (lo, hi) = expand_bracket(&cdf, 0.999_999, (0.0, 1.0)).unwrap();
        assert!(cdf(hi) >= 0.999_999 && cdf(lo) < 0.999_999);
    }

    #[test]
    fn differences() {
        assert!((central_difference(|x| x * x, 3.0) - 6.0).abs() < 1e-8);
        assert_eq!(forward_differences(&[1.0, 3.0, 6.0]), vec![2.0, 3.0]);
    }
}
