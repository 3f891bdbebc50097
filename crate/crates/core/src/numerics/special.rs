//! Special functions used across the crate.

use statrs::distribution::{ContinuousCDF, Normal};
pub use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `log(sum(exp(x_i)))` without overflow.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln` of `\sum_{j<n} t^j / j!`.
fn ln_exp_partial_sum(n: usize, t: f64) -> f64 {
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    if t == 0.0 {
        return 0.0;
    }
    let lt = t.ln();
    log_sum_exp((0..n).map(|j| j as f64 * lt - ln_factorial(j)))
}

/// Poisson cdf `Pr(N < n)` for `N ~ Poisson(t)`, equal to
/// `Pr(S_n > t)` for an Erlang(n) variable `S_n`.
pub fn poisson_cdf(n: usize, t: f64) -> f64 {
    ln_poisson_cdf(n, t).exp()
}

pub fn ln_poisson_cdf(n: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return if n == 0 { f64::NEG_INFINITY } else { 0.0 };
    }
    (-t + ln_exp_partial_sum(n, t)).min(0.0)
}

/// `\int_x^\infty y^k e^{-y} dy = k! e^{-x} \sum_{j<=k} x^j/j!` for `x >= 0`.
pub fn upper_gamma_int(k: u32, x: f64) -> f64 {
    ln_upper_gamma_int(k, x).exp()
}

pub fn ln_upper_gamma_int(k: u32, x: f64) -> f64 {
    let x = x.max(0.0);
    ln_factorial(k as usize) - x + ln_exp_partial_sum(k as usize + 1, x)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal quantile, polished with one Newton step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0,1), got {p}")));
    }
    let n = standard_normal();
    if p > 0.5 {
        return normal_upper_quantile(1.0 - p);
    }
    let mut z = n.inverse_cdf(p);
    let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if dens > 0.0 {
        z -= (normal_cdf(z) - p) / dens;
    }
    Ok(z)
}

/// `z` with `Pr(Z > z) = q`, accurate for small `q`.
pub fn normal_upper_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs q in (0,1), got {q}")));
    }
    if q > 0.5 {
        return normal_quantile(1.0 - q);
    }
    let n = standard_normal();
    let mut z = -n.inverse_cdf(q);
    let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if dens > 0.0 {
        z += (normal_sf(z) - q) / dens;
    }
    Ok(z)
}

/// `z` with `ln Pr(Z > z) = ln_q`; stays accurate when `q` underflows.
pub fn normal_upper_quantile_ln(ln_q: f64) -> Result<f64> {
    if !(ln_q < 0.0) {
        return Err(Error::Domain(format!("log-probability must be negative, got {ln_q}")));
    }
    if ln_q > -std::f64::consts::LN_2 {
        // Lower half: Pr(Z <= z) = 1 - q without cancellation.
        return normal_quantile(-ln_q.exp_m1());
    }
    if ln_q > -700.0 {
        return normal_upper_quantile(ln_q.exp());
    }
    // Mills-ratio asymptotics, refined by Newton on ln Pr(Z > z).
    let ln_sf = |z: f64| {
        let r = 1.0 / (z * z);
        -0.5 * z * z - (z * (2.0 * std::f64::consts::PI).sqrt()).ln()
            + (1.0 - r + 3.0 * r * r - 15.0 * r * r * r + 105.0 * r.powi(4)).ln()
    };
    let mut z = (-2.0 * ln_q).sqrt();
    for _ in 0..50 {
        let step = (ln_sf(z) - ln_q) / (z + 1.0 / z);
        z += step;
        if step.abs() < 1e-15 * z {
            break;
        }
    }
    Ok(z)
}

// libm's erfc is within an ulp; statrs' is good to about 1e-11 relative.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `ln(e^t / t)` for `t > 0`.
pub fn ln_exp_over_t(t: f64) -> f64 {
    t - t.ln()
}

/// `(e^t - 1)/t`, continuous at 0.
pub fn expm1_over_t(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 + t / 2.0 + t * t / 6.0 + t * t * t / 24.0
    } else {
        t.exp_m1() / t
    }
}

/// Weight `(1 + e t - e^t)/t` on `(0, 1]`, with limit `e - 1` at 0.
pub fn centering_weight(t: f64) -> f64 {
    std::f64::consts::E - expm1_over_t(t)
}

/// Derivative of [`centering_weight`]: `(e^t (1 - t) - 1)/t^2`.
pub fn centering_weight_deriv(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        // -sum_{n>=2} (n-1) t^{n-2} / n!
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 1.0;
        for n in 2..12 {
            fact *= n as f64;
            sum += (n - 1) as f64 * pow / fact;
            pow *= t;
        }
        -sum
    } else {
        (t.exp() * (1.0 - t) - 1.0) / (t * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_gamma_small_cases() {
        for &x in &[0.0f64, 0.3, 1.0, 7.5] {
            assert!((upper_gamma_int(0, x) - (-x).exp()).abs() < 1e-15);
            let a1 = (1.0 + x) * (-x).exp();
            assert!((upper_gamma_int(1, x) - a1).abs() < 1e-14);
        }
        assert!((upper_gamma_int(5, 0.0) - 120.0).abs() < 1e-10);
    }

    #[test]
    fn poisson_cdf_matches_direct_sum() {
        let t: f64 = 2.5;
        let direct: f64 = (0..4).map(|j| t.powi(j) / (1..=j).product::<i32>().max(1) as f64).sum::<f64>() * (-t).exp();
        assert!((poisson_cdf(4, t) - direct).abs() < 1e-15);
        assert_eq!(poisson_cdf(3, 0.0), 1.0);
        assert!(poisson_cdf(2, 600.0) > 0.0);
    }

    #[test]
    fn normal_quantiles() {
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-15);
        let z = normal_quantile(0.975).unwrap();
        assert!((z - 1.959_963_984_540_054).abs() < 1e-13, "{z}");
        let z = normal_upper_quantile(1e-20).unwrap();
        assert!((normal_sf(z) / 1e-20 - 1.0).abs() < 1e-10);
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn normal_quantile_from_log() {
        let z = normal_upper_quantile_ln((1e-10f64).ln()).unwrap();
        assert!((normal_sf(z) / 1e-10 - 1.0).abs() < 1e-12);
        // Continuity across the switch to the asymptotic branch.
        let a = normal_upper_quantile_ln(-699.999).unwrap();
        let b = normal_upper_quantile_ln(-700.001).unwrap();
        assert!((a - b).abs() < 1e-4 && b > a);
    }

    #[test]
    fn centering_weight_is_smooth_at_zero() {
        let e = std::f64::consts::E;
        assert!((centering_weight(0.0) - (e - 1.0)).abs() < 1e-15);
        assert!((centering_weight(1.0) - 1.0).abs() < 1e-15);
        for &t in &[1e-5, 9e-4, 1.1e-3, 0.5] {
            let h = 1e-6;
            let fd = (centering_weight(t + h) - centering_weight(t - h)) / (2.0 * h);
            assert!((fd - centering_weight_deriv(t)).abs() < 1e-6, "t={t}");
        }
        assert!((centering_weight_deriv(0.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - 1000.0 - 2f64.ln()).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }
}
