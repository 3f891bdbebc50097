use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::special::ln_upper_gamma_int;
use crate::error::{Error, Result};

/// Requested accuracy for quadrature and series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(Error::Config(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(Error::Config(format!("rel_tol must be positive, got {rel_tol}")));
        }
        if max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be positive".into()));
        }
        Ok(Tolerance {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    /// Same limits with a different absolute tolerance.
    pub fn with_abs(self, abs_tol: f64) -> Self {
        Tolerance { abs_tol, ..self }
    }

    pub fn with_rel(self, rel_tol: f64) -> Self {
        Tolerance { rel_tol, ..self }
    }

    /// Purely relative accuracy; used where the integrand is tiny but
    /// later multiplied by a large factor.
    pub fn relative_only(self, rel_tol: f64) -> Self {
        Tolerance {
            abs_tol: f64::MIN_POSITIVE,
            rel_tol,
            ..self
        }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Outcome of a quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl QuadResult {
    /// Turns a non-converged result into an error.
    pub fn into_result(self, what: &str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::non_convergence(
                what,
                self.diagnostic.unwrap_or_else(|| {
                    format!(
                        "estimate {} with error {:e}",
                        self.value, self.abs_error_estimate
                    )
                }),
            ))
        }
    }
}

// Gauss-Kronrod 7/15 pair.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One GK15 panel: (integral, error estimate), or `None` if `f` produced a
/// non-finite value.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Option<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return None;
    }
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !(f1.is_finite() && f2.is_finite()) {
            return None;
        }
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Some((result, err))
}

/// Globally adaptive GK15 over `[a, b]` split first at `breaks`.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: &Tolerance) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
            converged: true,
            diagnostic: None,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut evaluations = 0;
    let fail = |evaluations: usize, x: f64| QuadResult {
        value: f64::NAN,
        abs_error_estimate: f64::INFINITY,
        evaluations,
        converged: false,
        diagnostic: Some(format!("integrand not finite near x = {x:e}")),
    };
    for w in cuts.windows(2) {
        evaluations += 15;
        match gk15(f, w[0], w[1]) {
            Some((value, error)) => heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            }),
            None => return fail(evaluations, 0.5 * (w[0] + w[1])),
        }
    }
    let mut subdivisions = heap.len();
    loop {
        let total: f64 = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
        let error: f64 = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
        if error <= tol.target(total) {
            return QuadResult {
                value: sign * total,
                abs_error_estimate: error,
                evaluations,
                converged: true,
                diagnostic: None,
            };
        }
        let exhausted = subdivisions >= tol.max_subdivisions;
        let Some(worst) = heap.pop().filter(|_| !exhausted) else {
            return QuadResult {
                value: sign * total,
                abs_error_estimate: error,
                evaluations,
                converged: false,
                diagnostic: Some(format!(
                    "error estimate {error:e} above target after {subdivisions} subdivisions"
                )),
            };
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel at machine resolution; keep its contribution as is.
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        evaluations += 30;
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        match (left, right) {
            (Some((lv, le)), Some((rv, re))) => {
                heap.push(Panel {
                    a: worst.a,
                    b: mid,
                    value: lv,
                    error: le,
                });
                heap.push(Panel {
                    a: mid,
                    b: worst.b,
                    value: rv,
                    error: re,
                });
                subdivisions += 1;
            }
            _ => return fail(evaluations, mid),
        }
    }
}

/// Adaptive quadrature of `f` over a finite interval `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> QuadResult {
    adaptive(&f, a, b, &[], tol)
}

/// Like [`integrate_interval`], with the interval pre-split at `breakpoints`
/// (discontinuities, kinks, peaks).
pub fn integrate_interval_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: &Tolerance,
) -> QuadResult {
    adaptive(&f, a, b, breakpoints, tol)
}

/// A point of (0,1) carried together with its complement, so that
/// integrands singular at u = 1 can be evaluated without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub u: f64,
    pub one_minus_u: f64,
}

impl UnitPoint {
    /// `L(u) = -log(1 - u)`.
    pub fn log_survival(&self) -> f64 {
        -self.one_minus_u.ln()
    }
}

/// Endpoint behaviour of an integrand on (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnitEndpoint {
    /// Integrate directly on (0,1).
    #[default]
    Regular,
    /// Logarithmic singularity at u = 1: integrate on the half-line after
    /// the substitution u = 1 - exp(-y).
    LogAtOne,
}

/// Integral of `f` over (0,1).
pub fn integrate_unit<F: Fn(UnitPoint) -> f64>(f: F, tol: &Tolerance, endpoint: UnitEndpoint) -> QuadResult {
    match endpoint {
        UnitEndpoint::Regular => integrate_interval(
            |u| {
                f(UnitPoint {
                    u,
                    one_minus_u: 1.0 - u,
                })
            },
            0.0,
            1.0,
            tol,
        ),
        UnitEndpoint::LogAtOne => integrate_halfline(
            |y| {
                let one_minus_u = (-y).exp();
                if one_minus_u == 0.0 {
                    return 0.0;
                }
                f(UnitPoint {
                    u: -(-y).exp_m1(),
                    one_minus_u,
                }) * one_minus_u
            },
            tol,
        ),
    }
}

/// Growth model `|f(y)| <= scale * y^power * exp(-(1 - theta) y)` beyond
/// the truncation point, used to place the cut of the half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub scale: f64,
    pub power: u32,
    pub theta: f64,
}

impl TailBound {
    /// Bound on `\int_Y^\infty scale * y^power * exp(-(1-theta) y) dy`.
    pub fn tail_mass(&self, cut: f64) -> f64 {
        if self.scale <= 0.0 {
            return 0.0;
        }
        let rate = 1.0 - self.theta;
        let ln = self.scale.ln() - (self.power as f64 + 1.0) * rate.ln()
            + ln_upper_gamma_int(self.power, rate * cut);
        ln.exp()
    }

    /// Fits the model to three probes of `f` far out on the half-line.
    fn probe<F: Fn(f64) -> f64>(f: &F) -> Option<TailBound> {
        let pts = [16.0_f64, 32.0, 64.0];
        let mut logs = Vec::with_capacity(3);
        for &y in &pts {
            let v = f(y).abs();
            if !v.is_finite() {
                return None;
            }
            logs.push((y, if v > 0.0 { v.ln() + y } else { f64::NEG_INFINITY }));
        }
        let finite: Vec<(f64, f64)> = logs.iter().copied().filter(|p| p.1.is_finite()).collect();
        if finite.is_empty() {
            return Some(TailBound {
                scale: 0.0,
                power: 0,
                theta: 0.0,
            });
        }
        let mut power = 0.0_f64;
        for w in finite.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0.ln() - w[0].0.ln());
            power = power.max(slope);
        }
        let power = power.ceil().clamp(0.0, 400.0) as u32;
        let scale = finite
            .iter()
            .map(|(y, lg)| (lg - power as f64 * y.ln()).exp())
            .fold(0.0, f64::max)
            * 2.0;
        Some(TailBound {
            scale,
            power,
            theta: 0.0,
        })
    }

    fn cut_point(&self, target: f64) -> Option<f64> {
        const START: f64 = 8.0;
        const LIMIT: f64 = 1e6;
        if self.tail_mass(START) < target {
            return Some(START);
        }
        let mut hi = START;
        while self.tail_mass(hi) >= target {
            hi *= 2.0;
            if hi > LIMIT {
                return None;
            }
        }
        let mut lo = hi / 2.0;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid) < target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Options for [`integrate_halfline_with`].
#[derive(Debug, Clone, Default)]
pub struct HalfLineOptions {
    /// Known discontinuities or kinks of the integrand.
    pub breakpoints: Vec<f64>,
    /// Caller-supplied growth model; probed from `f` when absent.
    pub tail: Option<TailBound>,
}

/// Integral of `f` over (0, ∞).
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, tol: &Tolerance) -> QuadResult {
    integrate_halfline_with(f, tol, &HalfLineOptions::default())
}

/// Integral of `f` over (0, ∞), truncated where the growth model bounds
/// the neglected mass by `abs_tol / 2`, then checked by integrating the
/// doubling panels `[Y, 2Y], [2Y, 4Y], ...` until their contribution is
/// negligible. Three consecutive non-shrinking panels mean divergence.
pub fn integrate_halfline_with<F: Fn(f64) -> f64>(f: F, tol: &Tolerance, opts: &HalfLineOptions) -> QuadResult {
    const MAX_CUT: f64 = 1e8;
    let model = opts.tail.or_else(|| TailBound::probe(&f));
    let cut = match model.map(|m| m.cut_point(tol.abs_tol / 2.0)) {
        Some(Some(c)) => c,
        Some(None) => 1e6,
        None => 64.0,
    };

    let mut breaks: Vec<f64> = vec![1.0 / 64.0, 1.0 / 8.0, 0.5];
    let mut b = 1.0;
    while b < cut {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.extend(opts.breakpoints.iter().copied());
    // Half the budget for the body, a quarter for the neglected tail.
    let body_tol = tol.with_abs(tol.abs_tol / 2.0).with_rel(tol.rel_tol / 2.0);
    let body = adaptive(&f, 0.0, cut, &breaks, &body_tol);
    if !body.value.is_finite() {
        return body;
    }
    let mut value = body.value;
    let mut error = body.abs_error_estimate;
    let mut evaluations = body.evaluations;
    let mut converged = body.converged;
    let mut diagnostic = body.diagnostic;

    let mut lo = cut;
    let mut history: Vec<f64> = Vec::new();
    loop {
        let hi = 2.0 * lo;
        let panel_breaks: Vec<f64> = opts
            .breakpoints
            .iter()
            .copied()
            .chain((1..8).map(|k| lo + (hi - lo) * k as f64 / 8.0))
            .collect();
        let panel = adaptive(&f, lo, hi, &panel_breaks, &tol.with_abs(tol.abs_tol / 4.0));
        evaluations += panel.evaluations;
        if !panel.value.is_finite() {
            return QuadResult {
                value: f64::NAN,
                abs_error_estimate: f64::INFINITY,
                evaluations,
                converged: false,
                diagnostic: panel.diagnostic,
            };
        }
        value += panel.value;
        error += panel.abs_error_estimate;
        converged &= panel.converged;
        let mass = panel.value.abs();
        if mass <= (tol.abs_tol / 4.0).max(0.25 * tol.rel_tol * value.abs()) {
            // Beyond 2Y the integrand is assumed to shrink at least as fast.
            error += mass;
            break;
        }
        history.push(mass);
        let n = history.len();
        if n >= 3 && history[n - 1] >= history[n - 2] && history[n - 2] >= history[n - 3] {
            return QuadResult {
                value,
                abs_error_estimate: f64::INFINITY,
                evaluations,
                converged: false,
                diagnostic: Some(format!(
                    "tail bound cannot be established: mass on [{lo:e}, {hi:e}] is {mass:e} and not shrinking (divergent)"
                )),
            };
        }
        lo = hi;
        if lo > MAX_CUT {
            return QuadResult {
                value,
                abs_error_estimate: error + mass,
                evaluations,
                converged: false,
                diagnostic: Some(format!(
                    "tail bound cannot be established before y = {MAX_CUT:e}"
                )),
            };
        }
    }
    if converged && error > tol.target(value) {
        converged = false;
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("error estimate {error:e} above target"));
    }
    QuadResult {
        value,
        abs_error_estimate: error,
        evaluations,
        converged,
        diagnostic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn constant_on_unit_interval() {
        let r = integrate_unit(|_| 1.0, &tol(), UnitEndpoint::Regular);
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_singularity_at_one() {
        let r = integrate_unit(|p| p.log_survival(), &tol(), UnitEndpoint::LogAtOne);
        assert!(r.converged, "{r:?}");
        assert!((r.value - 1.0).abs() < 1e-10);
        let direct = integrate_unit(|p| p.log_survival(), &tol(), UnitEndpoint::Regular);
        assert!((direct.value - 1.0).abs() < 1e-8, "{direct:?}");
    }

    #[test]
    fn log_on_half_interval() {
        // 1/2 - log(2)/2 from the antiderivative (1-u)log(1-u) - (1-u).
        let r = integrate_interval(|u: f64| -(-u).ln_1p(), 0.0, 0.5, &tol());
        assert!((r.value - 0.153_426_409_720_027_3).abs() < 1e-12);
    }

    #[test]
    fn gamma_integrals() {
        let r = integrate_halfline(|y: f64| y * (-y).exp(), &tol());
        assert!(r.converged && (r.value - 1.0).abs() < 1e-10, "{r:?}");
        let r = integrate_halfline(|y: f64| y * y * (-y).exp(), &tol());
        assert!(r.converged && (r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn euler_gamma() {
        let r = integrate_halfline(|y: f64| (-y).exp() * y.ln(), &tol());
        assert!(r.converged, "{r:?}");
        assert!((r.value + 0.577_215_664_901_532_9).abs() < 1e-9);
    }

    #[test]
    fn divergent_constant_is_reported() {
        let r = integrate_halfline(|_| 1.0, &tol());
        assert!(!r.converged);
        assert!(r.diagnostic.unwrap().contains("tail bound"));
    }

    #[test]
    fn explicit_tail_bound_is_used() {
        let opts = HalfLineOptions {
            breakpoints: vec![],
            tail: Some(TailBound {
                scale: 1.0,
                power: 3,
                theta: 0.0,
            }),
        };
        let r = integrate_halfline_with(|y: f64| y.powi(3) * (-y).exp(), &tol(), &opts);
        assert!(r.converged && (r.value - 6.0).abs() < 1e-9);
    }

    #[test]
    fn jump_with_breakpoint_is_exact() {
        let step = |x: f64| if x <= 0.3 { 0.0 } else { 1.0 };
        let r = integrate_interval_with(step, 0.0, 1.0, &[0.3], &tol());
        assert!((r.value - 0.7).abs() < 1e-15);
        let r = integrate_interval(step, 0.0, 1.0, &tol());
        assert!(r.converged && (r.value - 0.7).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_fails_loudly() {
        let r = integrate_interval(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, &tol());
        assert!(!r.converged);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate_interval(|x: f64| x, 1.0, 0.0, &tol());
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(0.0, 1e-9, 10).is_err());
        assert!(Tolerance::new(1e-9, -1.0, 10).is_err());
        assert!(Tolerance::new(1e-9, 1e-9, 0).is_err());
        assert!(Tolerance::new(1e-9, 1e-9, 10).is_ok());
    }
}
