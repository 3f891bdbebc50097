//! Stieltjes moment-sequence screening: Hankel positivity, a Carleman
//! determinacy diagnostic, the equal-moment lognormal family, and the
//! passage between expected records and the moment generating function.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ers::{power_series, ErsSeq};
use crate::error::{Error, Result};
use crate::numerics::special::ln_factorial;
use crate::numerics::{integrate_interval, Tolerance};
use crate::transform::DensityLaw;

/// Relative eigenvalue tolerance of the Hankel positivity test.
pub const HANKEL_REL_TOL: f64 = 1e-10;

/// What the Carleman partial sums suggest. Only a sufficient condition
/// is used, so indeterminacy is never inferred from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterminacyHint {
    LikelyDeterminate,
    Inconclusive,
    /// The sequence is that of the lognormal family with equal moments.
    KnownIndeterminateExample,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentHints {
    /// Smallest eigenvalues of the equilibrated Hankel and shifted Hankel
    /// matrices, relative to their spectral norms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hankel_min_eig: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carleman_partial_sum: Option<f64>,
    /// Fitted decay exponent of the Carleman terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carleman_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub determinacy_hint: Option<DeterminacyHint>,
}

/// Moments `m_0..m_K` of a candidate law on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeq {
    pub m: Vec<f64>,
    #[serde(default)]
    pub feasible: bool,
    #[serde(default)]
    pub hints: MomentHints,
}

impl MomentSeq {
    pub fn new(m: Vec<f64>) -> Self {
        MomentSeq {
            m,
            feasible: false,
            hints: MomentHints::default(),
        }
    }

    /// Order of the last moment.
    pub fn order(&self) -> usize {
        self.m.len().saturating_sub(1)
    }

    /// Hankel screening followed by the Carleman diagnostic. A sequence
    /// that fails the screening gets no determinacy hint.
    pub fn diagnose(self) -> Result<MomentSeq> {
        let mut s = stieltjes_feasibility(self)?;
        if !s.feasible {
            return Ok(s);
        }
        let c = carleman_diagnostic(&s);
        s.hints.carleman_partial_sum = Some(c.partial_sum);
        s.hints.carleman_decay = Some(c.decay);
        s.hints.determinacy_hint = Some(c.hint);
        Ok(s)
    }
}

/// Smallest eigenvalue of `[m_{i+j+shift}]_{i,j<=size}` after symmetric
/// diagonal scaling, divided by the spectral norm.
fn hankel_min_eig(m: &[f64], size: usize, shift: usize) -> f64 {
    let mut a = DMatrix::from_fn(size, size, |i, j| m[i + j + shift]);
    let d: Vec<f64> = (0..size)
        .map(|i| {
            let v = a[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for i in 0..size {
        for j in 0..size {
            a[(i, j)] *= d[i] * d[j];
        }
    }
    let eig = SymmetricEigen::new(a).eigenvalues;
    let norm = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if norm > 0.0 {
        min / norm
    } else {
        0.0
    }
}

/// Positive semidefiniteness of `[m_{i+j}]` and `[m_{i+j+1}]`. Both are
/// scaled to unit diagonal first; congruence preserves the sign pattern
/// while the factorial growth of the entries is removed.
pub fn stieltjes_feasibility(mut m: MomentSeq) -> Result<MomentSeq> {
    let k = m.order();
    if m.m.len() < 3 {
        return Err(Error::InsufficientData(format!("need moments up to order 2, got order {k}")));
    }
    if m.m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("moments must be finite".into()));
    }
    let plain = hankel_min_eig(&m.m, k / 2 + 1, 0);
    let shifted = hankel_min_eig(&m.m, (k - 1) / 2 + 1, 1);
    m.feasible = plain >= -HANKEL_REL_TOL && shifted >= -HANKEL_REL_TOL && m.m[0] > 0.0;
    m.hints.hankel_min_eig = Some((plain, shifted));
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanDiagnostic {
    /// `sum_{n=1}^K m_n^{-1/(2n)}`.
    pub partial_sum: f64,
    pub terms: Vec<f64>,
    /// Exponent `p` of a fit `c n^{-p}` to the later terms; the series
    /// diverges like a p-series when `p <= 1`.
    pub decay: f64,
    pub hint: DeterminacyHint,
}

/// `e^{n^2/2}` matches to this relative accuracy tag the known example.
const KNOWN_EXAMPLE_TOL: f64 = 1e-5;

fn is_lognormal_example(m: &[f64]) -> bool {
    m.len() >= 3
        && m.iter()
            .enumerate()
            .all(|(n, &v)| ((v / (0.5 * (n * n) as f64).exp()) - 1.0).abs() < KNOWN_EXAMPLE_TOL)
}

/// Carleman's sum for a law on `[0, ∞)`. Divergence is sufficient for
/// determinacy; the hint says whether the visible terms decay slowly
/// enough to suggest it.
pub fn carleman_diagnostic(m: &MomentSeq) -> CarlemanDiagnostic {
    let terms: Vec<f64> = m
        .m
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &v)| if v > 0.0 { (-v.ln() / (2 * n) as f64).exp() } else { f64::NAN })
        .collect();
    let partial_sum = terms.iter().sum();
    // Least squares slope of log term against log n over the later half.
    let start = terms.len() / 2;
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, c)| **c > 0.0)
        .map(|(i, c)| (((i + 1) as f64).ln(), c.ln()))
        .collect();
    let decay = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    } else {
        f64::NAN
    };
    let hint = if is_lognormal_example(&m.m) {
        DeterminacyHint::KnownIndeterminateExample
    } else if decay <= 1.0 {
        DeterminacyHint::LikelyDeterminate
    } else {
        DeterminacyHint::Inconclusive
    };
    CarlemanDiagnostic {
        partial_sum,
        terms,
        decay,
        hint,
    }
}

/// `(1 + lambda sin(pi log t))` times the standard lognormal density.
pub fn stieltjes_family_density(lambda: f64, t: f64) -> Result<f64> {
    let law = DensityLaw::Stieltjes { lambda };
    law.validate()?;
    if t.is_nan() {
        return Err(Error::Domain("t is NaN".into()));
    }
    Ok(law.pdf(t))
}

/// Moment generating function of `T` at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfEval {
    pub a: f64,
    pub value: f64,
    pub converged: bool,
    pub terms_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// `M_T(a) = (1/(rho_2 - rho_1)) d/da ((1 - a) G(a))`, differentiating the
/// series `(1 - a) G(a) = rho_1 + sum_n (rho_{n+1} - rho_n) a^n` term by term.
pub fn mgf_from_ers(rho: &ErsSeq, a: f64, tol: &Tolerance) -> Result<MgfEval> {
    if rho.len() < 3 {
        return Err(Error::InsufficientData("need at least three expected records".into()));
    }
    if !(a.abs() < 1.0) {
        return Err(Error::Domain(format!("series argument must satisfy |a| < 1, got {a}")));
    }
    let r = &rho.rho;
    let spread = r[1] - r[0];
    if !(spread > 0.0) {
        return Err(Error::Degenerate(format!("rho2 - rho1 = {spread}")));
    }
    let coef: Vec<f64> = (1..r.len()).map(|n| n as f64 * (r[n] - r[n - 1]) / spread).collect();
    let g = power_series(&coef, a, tol);
    Ok(MgfEval {
        a,
        value: g.value,
        converged: g.converged,
        terms_used: g.terms_used,
        diagnostic: g.diagnostic,
    })
}

/// `G(t) = (rho_1 + (rho_2 - rho_1) \int_0^t M_T(s) ds)/(1 - t)`.
pub fn ers_from_mgf<F: Fn(f64) -> f64>(m_t: F, rho1: f64, rho2: f64, t: f64, tol: &Tolerance) -> Result<f64> {
    if !(t.abs() < 1.0) {
        return Err(Error::Domain(format!("need |t| < 1, got {t}")));
    }
    if t == 0.0 {
        return Ok(rho1);
    }
    let r = integrate_interval(&m_t, 0.0, t, tol);
    if !r.value.is_finite() {
        return Err(Error::non_convergence("integral of the generating function", format!("diverges on [0, {t}]")));
    }
    let integral = r.into_result("integral of the generating function")?;
    Ok((rho1 + (rho2 - rho1) * integral) / (1.0 - t))
}

/// `m_n/n!` coefficients of the moment generating function, for callers
/// that hold moments rather than records.
pub fn mgf_from_moments(m: &[f64], a: f64, tol: &Tolerance) -> MgfEval {
    let coef: Vec<f64> = m.iter().enumerate().map(|(n, v)| v * (-ln_factorial(n)).exp()).collect();
    let g = power_series(&coef, a, tol);
    MgfEval {
        a,
        value: g.value,
        converged: g.converged,
        terms_used: g.terms_used,
        diagnostic: g.diagnostic,
    }
}
