//! Expected record sequences `rho_n = E R_n`, their generating function,
//! and the link `(rho_{n+2} - rho_{n+1})/(rho_2 - rho_1) = E T^n/(n+1)!`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{membership_check, HRep, QuantileRep};
use crate::error::{Error, Result};
use crate::moments::MomentSeq;
use crate::numerics::special::{ln_factorial, ln_gamma, poisson_cdf};
use crate::numerics::{integrate_halfline_with, integrate_interval_with, HalfLineOptions, QuadResult, Tolerance};
use crate::records::{record_cdf, record_cdf_left};
use crate::transform::TDist;

/// Largest sequence length accepted by the library.
pub const ERS_MAX_N: usize = 150;

/// Prefix `rho_1..rho_N` of an expected record sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErsSeq {
    pub rho: Vec<f64>,
    pub error: Vec<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_label: String,
}

impl ErsSeq {
    pub fn new(rho: Vec<f64>, source_label: impl Into<String>) -> Self {
        let error = vec![0.0; rho.len()];
        ErsSeq {
            rho,
            error,
            source_label: source_label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// `rho_n`, one-based.
    pub fn get(&self, n: usize) -> f64 {
        self.rho[n - 1]
    }
}

/// `rho_n = \int_0^\infty y^{n-1}/(n-1)! e^{-y} H(y) dy` for a single `n`.
pub fn ers_entry(h: &HRep, n: usize, tol: &Tolerance) -> Result<QuadResult> {
    if n == 0 {
        return Err(Error::Domain("record index starts at 1".into()));
    }
    if let Some(steps) = h.steps() {
        // Pr(S_n > t) is the Poisson cdf; H is constant between jumps.
        let mut lower = 0.0;
        let mut value = 0.0;
        let mut scale = 0.0;
        for &(upper, v) in steps {
            let mass = poisson_cdf(n, lower) - if upper.is_finite() { poisson_cdf(n, upper) } else { 0.0 };
            value += v * mass;
            scale += (v * mass).abs();
            lower = upper;
        }
        return Ok(QuadResult {
            value,
            abs_error_estimate: 8.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE),
            evaluations: steps.len(),
            converged: true,
            diagnostic: None,
        });
    }
    let k = (n - 1) as f64;
    let lw = ln_gamma(n as f64);
    let f = |y: f64| {
        let d = h.damped(y);
        if d == 0.0 {
            0.0
        } else {
            d.signum() * (k * y.ln() - lw + d.abs().ln()).exp()
        }
    };
    let mut breakpoints = h.jumps().to_vec();
    let sd = (n as f64).sqrt();
    for j in -3..=3 {
        let p = k + j as f64 * sd;
        if p > 0.0 {
            breakpoints.push(p);
        }
    }
    let r = integrate_halfline_with(f, tol, &HalfLineOptions { breakpoints, tail: None });
    if r.converged {
        Ok(r)
    } else {
        Err(Error::non_convergence(
            format!("expected record integral n = {n}"),
            r.diagnostic.unwrap_or_default(),
        ))
    }
}

/// `rho_1..rho_{n_max}` of `H`, after checking membership up to the
/// needed order.
pub fn ers_compute(h: &HRep, n_max: usize, tol: &Tolerance) -> Result<ErsSeq> {
    if n_max == 0 || n_max > ERS_MAX_N {
        return Err(Error::Config(format!("n_max must lie in 1..={ERS_MAX_N}, got {n_max}")));
    }
    let report = membership_check(h, n_max.saturating_sub(1).max(2), tol);
    if !report.in_h_star {
        return Err(Error::NotInHStar {
            reason: report.reason.unwrap_or_else(|| "membership check failed".into()),
            failing_order: report.failing_order,
        });
    }
    let entries: Vec<Result<QuadResult>> = (1..=n_max).into_par_iter().map(|n| ers_entry(h, n, tol)).collect();
    let mut rho = Vec::with_capacity(n_max);
    let mut error = Vec::with_capacity(n_max);
    for e in entries {
        let r = e?;
        rho.push(r.value);
        error.push(r.abs_error_estimate);
    }
    Ok(ErsSeq {
        rho,
        error,
        source_label: h.label().to_string(),
    })
}

/// `rho_n` for `n = 1, 2` from the record cdf,
/// `\int (1{x > 0} - F_n(x)) dx`; an independent check on [`ers_entry`].
pub fn ers_via_record_cdf(d: &QuantileRep, n: usize, tol: &Tolerance) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(Error::Usage("the record-cdf route is provided for n = 1, 2 only".into()));
    }
    if !d.has_cdf() {
        return Err(Error::Usage(format!("{} has no cdf view", d.label())));
    }
    let breaks: Vec<f64> = d.atoms().iter().map(|a| a.0).collect();
    let (lo, hi) = d.support_hint();
    let upper = |x: f64| 1.0 - record_cdf(d, n, x).unwrap_or(f64::NAN);
    let lower = |x: f64| record_cdf_left(d, n, x).unwrap_or(f64::NAN);

    // \int_0^\infty (1 - F_n): the stretch (0, lo) below the support counts fully.
    let base = lo.max(0.0);
    let pos = if hi <= 0.0 {
        None
    } else if hi.is_finite() {
        Some(integrate_interval_with(upper, base, hi, &breaks, tol))
    } else {
        let shifted = breaks.iter().map(|b| b - base).collect();
        Some(integrate_halfline_with(
            |x| upper(base + x),
            tol,
            &HalfLineOptions {
                breakpoints: shifted,
                tail: None,
            },
        ))
    };
    // \int_{-\infty}^0 F_n: the stretch (hi, 0) above the support counts fully.
    let top = hi.min(0.0);
    let neg = if lo >= 0.0 {
        None
    } else if lo.is_finite() {
        Some(integrate_interval_with(lower, lo, top, &breaks, tol))
    } else {
        let mirrored = breaks.iter().map(|b| top - b).collect();
        Some(integrate_halfline_with(
            |x| lower(top - x),
            tol,
            &HalfLineOptions {
                breakpoints: mirrored,
                tail: None,
            },
        ))
    };
    let mut total = base + top;
    for part in [pos.map(|r| (r, 1.0)), neg.map(|r| (r, -1.0))].into_iter().flatten() {
        let (r, sign) = part;
        if !r.converged {
            return Err(Error::non_convergence(
                "record-cdf expectation",
                r.diagnostic.unwrap_or_default(),
            ));
        }
        total += sign * r.value;
    }
    Ok(total)
}

/// `m_n = (n+1)! (rho_{n+2} - rho_{n+1})/(rho_2 - rho_1)` for
/// `n = 0..=N-2`.
pub fn ers_to_t_moments(rho: &ErsSeq) -> Result<MomentSeq> {
    if rho.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least three expected records, got {}",
            rho.len()
        )));
    }
    let r = &rho.rho;
    let spread = r[1] - r[0];
    if !(spread > 0.0) {
        return Err(Error::Degenerate(format!(
            "rho2 - rho1 = {spread} is not positive; the source is degenerate"
        )));
    }
    let mut m = Vec::with_capacity(r.len() - 1);
    m.push(1.0);
    // (n+1)! stays finite for every admissible length.
    let mut fact = 1.0;
    for n in 1..=r.len() - 2 {
        fact *= (n + 1) as f64;
        let diff = r[n + 1] - r[n];
        m.push(fact * diff / spread);
    }
    Ok(MomentSeq::new(m))
}

/// Inverse of [`ers_to_t_moments`]: `rho_1, rho_2` and moments `m_0..m_K`
/// give `rho_1..rho_{K+2}`.
pub fn ers_from_t_moments(rho1: f64, rho2: f64, m: &[f64]) -> Result<Vec<f64>> {
    if !(rho2 > rho1) {
        return Err(Error::Degenerate("rho2 must exceed rho1".into()));
    }
    let mut rho = vec![rho1, rho2];
    for (n, &mn) in m.iter().enumerate().skip(1) {
        let prev = rho[rho.len() - 1];
        rho.push(prev + (rho2 - rho1) * mn * (-ln_factorial(n + 1)).exp());
    }
    Ok(rho)
}

/// Closed-form ERS shared by the equal-moment lognormal family:
/// `rho_n = \sum_{k=0}^{n-2} e^{k^2/2}/(k+1)!`.
pub fn stieltjes_example_ers(n_max: usize) -> Result<Vec<f64>> {
    if n_max > 42 {
        return Err(Error::Domain(format!(
            "closed-form sequence overflows double precision beyond n = 42, got {n_max}"
        )));
    }
    let mut rho = Vec::with_capacity(n_max);
    let mut acc = 0.0;
    for n in 1..=n_max {
        if n >= 2 {
            let k = (n - 2) as f64;
            acc += (0.5 * k * k - ln_factorial(n - 1)).exp();
        }
        rho.push(acc);
    }
    Ok(rho)
}

/// Value of a truncated power series with its convergence assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenFunEval {
    pub t: f64,
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub radius_estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Sums `\sum_n c_n t^n`, judging convergence by the largest ratio of
/// consecutive terms among the last five.
pub(crate) fn power_series(coef: &[f64], t: f64, tol: &Tolerance) -> GenFunEval {
    let mut radius = f64::INFINITY;
    let nz: Vec<(usize, f64)> = coef.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
    let window = nz.len().saturating_sub(6);
    for w in nz[window..].windows(2) {
        let gap = (w[1].0 - w[0].0) as f64;
        let r = (w[0].1 / w[1].1).abs().powf(1.0 / gap);
        radius = radius.min(r);
    }
    if t == 0.0 {
        return GenFunEval {
            t,
            value: coef.first().copied().unwrap_or(0.0),
            terms_used: 1,
            converged: true,
            radius_estimate: radius,
            diagnostic: None,
        };
    }
    let terms: Vec<f64> = coef
        .iter()
        .enumerate()
        .map(|(n, c)| if *c == 0.0 { 0.0 } else { c * t.powi(n as i32) })
        .collect();
    let value: f64 = terms.iter().sum();
    let used = terms.len();
    let mut eval = GenFunEval {
        t,
        value,
        terms_used: used,
        converged: false,
        radius_estimate: radius,
        diagnostic: None,
    };
    if !value.is_finite() {
        eval.diagnostic = Some("partial sums overflow".into());
        return eval;
    }
    let tail: Vec<f64> = terms.iter().copied().filter(|x| *x != 0.0).collect();
    if tail.len() < 6 {
        eval.diagnostic = Some("too few non-zero terms for a ratio test".into());
        return eval;
    }
    let last = &tail[tail.len() - 6..];
    let q = last.windows(2).map(|w| (w[1] / w[0]).abs()).fold(0.0, f64::max);
    if q >= 1.0 {
        eval.diagnostic = Some(format!(
            "terms are not shrinking (ratio {q:.3}); t = {t} is outside the radius or needs more terms"
        ));
        return eval;
    }
    let bound = last[5].abs() * q / (1.0 - q);
    if bound <= tol.target(value) {
        eval.converged = true;
    } else {
        eval.diagnostic = Some(format!("remainder bound {bound:e} exceeds tolerance; more terms needed"));
    }
    eval
}

/// `G(t) = \sum_{n>=1} rho_n t^{n-1}`.
pub fn gen_fun_rho(rho: &ErsSeq, t: f64, tol: &Tolerance) -> Result<GenFunEval> {
    if !(t.abs() < 1.0) {
        return Err(Error::Domain(format!("generating function needs |t| < 1, got {t}")));
    }
    if rho.is_empty() {
        return Err(Error::InsufficientData("empty sequence".into()));
    }
    Ok(power_series(&rho.rho, t, tol))
}

/// Entry-wise comparison of both sides of the ERS/moment relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq6Report {
    /// `(rho_{n+2} - rho_{n+1})/(rho_2 - rho_1)`, `n = 0..=n_max`.
    pub from_records: Vec<f64>,
    /// `E T^n/(n+1)!`.
    pub from_moments: Vec<f64>,
    pub max_rel_discrepancy: f64,
}

pub fn validate_eq6(h: &HRep, t: &TDist, n_max: usize, tol: &Tolerance) -> Result<Eq6Report> {
    let seq = ers_compute(h, n_max + 2, tol)?;
    let r = &seq.rho;
    let spread = r[1] - r[0];
    let mut from_records = Vec::with_capacity(n_max + 1);
    let mut from_moments = Vec::with_capacity(n_max + 1);
    let mut worst: f64 = 0.0;
    for n in 0..=n_max {
        let lhs = (r[n + 1] - r[n]) / spread;
        let rhs = t.moment(n, tol)? * (-ln_factorial(n + 1)).exp();
        worst = worst.max(((lhs - rhs) / rhs).abs());
        from_records.push(lhs);
        from_moments.push(rhs);
    }
    Ok(Eq6Report {
        from_records,
        from_moments,
        max_rel_discrepancy: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_family, real_fn, to_h_rep};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn ers_of(name: &str, params: &[f64], n: usize) -> ErsSeq {
        let d = make_family(name, params).unwrap().build().unwrap();
        ers_compute(&to_h_rep(&d), n, &tol()).unwrap()
    }

    #[test]
    fn exponential_is_identity_sequence() {
        let s = ers_of("exponential", &[1.0], 12);
        for (i, r) in s.rho.iter().enumerate() {
            assert!((r - (i + 1) as f64).abs() < 1e-9, "n={} {r}", i + 1);
        }
    }

    #[test]
    fn two_point_fixture_sequence() {
        let e = std::f64::consts::E;
        let s = ers_of("two_point", &[-1.0, 1.0 - (-1f64).exp(), e - 1.0], 4);
        assert!(s.rho[0].abs() < 1e-14);
        assert!((s.rho[1] - 1.0).abs() < 1e-14);
        assert!((s.rho[2] - 1.5).abs() < 1e-14);
        assert!((s.rho[3] - (1.5 + 1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn constant_is_refused() {
        let d = make_family("constant", &[1.0]).unwrap().build().unwrap();
        let err = ers_compute(&to_h_rep(&d), 3, &tol()).unwrap_err();
        assert_eq!(err.to_string(), "not in H*: non-constant required");
    }

    #[test]
    fn moments_from_sequences() {
        let m = ers_to_t_moments(&ErsSeq::new((1..=8).map(|n| n as f64).collect(), "")).unwrap();
        let mut f = 1.0;
        for (n, v) in m.m.iter().enumerate() {
            f *= (n + 1) as f64;
            assert!((v / f - 1.0).abs() < 1e-14);
        }
        let deg = ErsSeq::new(vec![0.0, 1.0, 1.5, 1.5 + 1.0 / 6.0], "");
        let m = ers_to_t_moments(&deg).unwrap();
        assert!(m.m.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(matches!(
            ers_to_t_moments(&ErsSeq::new(vec![1.0, 1.0, 2.0], "")),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(ers_to_t_moments(&ErsSeq::new(vec![1.0, 2.0], "")), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn moments_and_back() {
        let m: Vec<f64> = (0..8).map(|n| (ln_factorial(n)).exp()).collect();
        let rho = ers_from_t_moments(-0.5, 0.5, &m).unwrap();
        let back = ers_to_t_moments(&ErsSeq::new(rho, "")).unwrap();
        for (a, b) in back.m.iter().zip(&m) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_example_sequence() {
        let r = stieltjes_example_ers(4).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 1.0);
        assert!((r[2] - (1.0 + 0.5f64.exp() / 2.0)).abs() < 1e-14);
        assert!((r[2] - 1.824_360_635_350_064).abs() < 1e-12);
        assert!(stieltjes_example_ers(43).is_err());
    }

    #[test]
    fn generating_function() {
        let s = ErsSeq::new((1..=80).map(|n| n as f64).collect(), "");
        let g = gen_fun_rho(&s, 0.5, &tol()).unwrap();
        assert!(g.converged && (g.value - 4.0).abs() < 1e-9, "{g:?}");
        assert!((g.radius_estimate - 1.0).abs() < 0.05);
        let g0 = gen_fun_rho(&s, 0.0, &tol()).unwrap();
        assert_eq!(g0.value, 1.0);
        let ex = ErsSeq::new(stieltjes_example_ers(30).unwrap(), "");
        for &t in &[0.01, 0.1, 0.5] {
            assert!(!gen_fun_rho(&ex, t, &tol()).unwrap().converged);
        }
        assert!(gen_fun_rho(&s, 1.0, &tol()).is_err());
    }

    #[test]
    fn record_cdf_route_agrees() {
        for (name, params) in [
            ("exponential", vec![1.0]),
            ("uniform", vec![-1.0, 2.0]),
            ("bernoulli", vec![0.5]),
            ("log_record", vec![]),
        ] {
            let d = make_family(name, &params).unwrap().build().unwrap();
            let h = to_h_rep(&d);
            for n in 1..=2 {
                let a = ers_entry(&h, n, &tol()).unwrap().value;
                let b = ers_via_record_cdf(&d, n, &tol()).unwrap();
                assert!((a - b).abs() < 1e-7, "{name} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn log_record_digamma() {
        let h = HRep::new("log", real_fn(|y: f64| y.ln()));
        let s = ers_compute(&h, 10, &tol()).unwrap();
        for (i, r) in s.rho.iter().enumerate() {
            let psi = crate::numerics::special::digamma((i + 1) as f64);
            assert!((r - psi).abs() < 1e-8, "n={}", i + 1);
        }
    }
}
