use serde::{Deserialize, Serialize};

use super::HRep;
use crate::ers::ers_entry;
use crate::numerics::special::{ln_factorial, upper_gamma_int};
use crate::numerics::{integrate_halfline_with, HalfLineOptions, Tolerance};

/// Tolerance on the normalization `rho1 = 0, rho2 = 1`.
pub const ZERO_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentIntegral {
    pub m: usize,
    pub value: f64,
    pub converged: bool,
}

/// Outcome of checking `\int_0^\infty y^m e^{-y} |H(y)| dy < \infty`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub max_order_checked: usize,
    pub moment_integrals: Vec<MomentIntegral>,
    pub in_h_star: bool,
    pub in_h_zero: bool,
    pub rho1: f64,
    pub rho2: f64,
    pub failing_order: Option<usize>,
    pub reason: Option<String>,
}

fn is_non_constant(h: &HRep) -> bool {
    if let Some(steps) = h.steps() {
        return steps.windows(2).any(|w| w[0].1 != w[1].1);
    }
    let mut grid: Vec<f64> = (0..60).map(|i| 1e-3 * 1.2f64.powi(i)).collect();
    for &j in h.jumps() {
        grid.push(j);
        grid.push(j * (1.0 + 1e-6) + 1e-9);
    }
    let vals: Vec<f64> = grid.iter().map(|&y| h.eval(y)).filter(|v| v.is_finite()).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(1.0)
}

fn abs_moment(h: &HRep, m: usize, tol: &Tolerance) -> (f64, bool, Option<String>) {
    if let Some(steps) = h.steps() {
        let mut lower = 0.0;
        let mut total = 0.0;
        for &(upper, v) in steps {
            let mass = upper_gamma_int(m as u32, lower) - upper_gamma_int(m as u32, upper.min(1e300));
            total += v.abs() * mass;
            lower = upper;
        }
        return (total, true, None);
    }
    let lf = ln_factorial(m);
    let f = |y: f64| {
        let d = h.damped(y).abs();
        if d == 0.0 {
            0.0
        } else {
            (m as f64 * y.ln() - lf + d.ln()).exp()
        }
    };
    let opts = HalfLineOptions {
        breakpoints: h.jumps().to_vec(),
        tail: None,
    };
    // Scaled by 1/m! so the requested tolerance is meaningful at every order.
    let r = integrate_halfline_with(f, tol, &opts);
    (r.value * lf.exp(), r.converged, r.diagnostic)
}

/// Checks `\int y^m e^{-y} |H(y)| dy < \infty` for `m = 0..=max_order`,
/// that `H` is non-constant, and computes `rho1, rho2`.
pub fn membership_check(h: &HRep, max_order: usize, tol: &Tolerance) -> MembershipReport {
    let max_order = max_order.max(2);
    let mut report = MembershipReport {
        max_order_checked: max_order,
        moment_integrals: Vec::with_capacity(max_order + 1),
        in_h_star: false,
        in_h_zero: false,
        rho1: f64::NAN,
        rho2: f64::NAN,
        failing_order: None,
        reason: None,
    };
    for m in 0..=max_order {
        let (value, converged, diag) = abs_moment(h, m, tol);
        report.moment_integrals.push(MomentIntegral { m, value, converged });
        if !converged || !value.is_finite() {
            report.failing_order = Some(m);
            report.reason = Some(format!(
                "integral of y^{m} e^(-y) |H(y)| diverges or fails to converge{}",
                diag.map(|d| format!(" ({d})")).unwrap_or_default()
            ));
            return report;
        }
    }
    if !is_non_constant(h) {
        report.reason = Some("non-constant required".into());
        return report;
    }
    let r1 = ers_entry(h, 1, tol);
    let r2 = ers_entry(h, 2, tol);
    match (r1, r2) {
        (Ok(a), Ok(b)) => {
            report.rho1 = a.value;
            report.rho2 = b.value;
            report.in_h_star = true;
            report.in_h_zero = a.value.abs() <= ZERO_TOL && (b.value - 1.0).abs() <= ZERO_TOL;
        }
        (Err(e), _) | (_, Err(e)) => {
            report.reason = Some(e.to_string());
        }
    }
    report
}
