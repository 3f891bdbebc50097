//! Distributions as left-continuous quantile functions and as the
//! equivalent function `H(y) = G(1 - e^{-y})` of a standard exponential.

mod families;
mod membership;

use std::fmt;
use std::sync::Arc;

pub use families::{make_family, Family};
pub use membership::{membership_check, MembershipReport, MomentIntegral, ZERO_TOL};

use crate::error::{Error, Result};
use crate::numerics::{expand_bracket, invert_monotone};

/// Shared real function.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub(crate) fn real_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> RealFn {
    Arc::new(f)
}

/// `L(u) = -log(1 - u)`.
pub fn log_survival(u: f64) -> f64 {
    -(-u).ln_1p()
}

/// `u = 1 - e^{-y}`, the inverse of [`log_survival`].
pub fn unit_from_y(y: f64) -> f64 {
    -(-y).exp_m1()
}

/// A distribution given by its left-continuous quantile function, with
/// optional cdf, density and atom views.
#[derive(Clone)]
pub struct QuantileRep {
    quantile: RealFn,
    h: RealFn,
    cdf: Option<RealFn>,
    pdf: Option<RealFn>,
    atoms: Vec<(f64, f64)>,
    h_jumps: Vec<f64>,
    support: (f64, f64),
    label: String,
}

impl fmt::Debug for QuantileRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileRep")
            .field("label", &self.label)
            .field("atoms", &self.atoms)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl QuantileRep {
    /// Distribution with quantile `q` only. The H view is derived as
    /// `q(1 - e^{-y})`.
    pub fn from_quantile(label: impl Into<String>, q: RealFn) -> Self {
        let qq = q.clone();
        QuantileRep {
            quantile: q,
            h: real_fn(move |y| qq(unit_from_y(y))),
            cdf: None,
            pdf: None,
            atoms: Vec::new(),
            h_jumps: Vec::new(),
            support: (f64::NEG_INFINITY, f64::INFINITY),
            label: label.into(),
        }
    }

    /// Distribution given natively by `H`; the quantile is `H(L(u))`.
    pub fn from_h(label: impl Into<String>, h: RealFn) -> Self {
        let hh = h.clone();
        QuantileRep {
            quantile: real_fn(move |u| hh(log_survival(u))),
            h,
            cdf: None,
            pdf: None,
            atoms: Vec::new(),
            h_jumps: Vec::new(),
            support: (f64::NEG_INFINITY, f64::INFINITY),
            label: label.into(),
        }
    }

    /// Finitely supported distribution. Locations must be strictly
    /// increasing and masses positive with unit total.
    pub fn discrete(label: impl Into<String>, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Config("discrete distribution needs at least one atom".into()));
        }
        for w in atoms.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Config("atom locations must be strictly increasing".into()));
            }
        }
        if atoms.iter().any(|&(x, p)| !(x.is_finite() && p > 0.0 && p <= 1.0)) {
            return Err(Error::Config("atoms need finite locations and masses in (0,1]".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("atom masses sum to {total}, not 1")));
        }
        // Upper ends u_i of the quantile plateaus, kept together with the
        // tail masses 1 - u_i so the y-coordinates are exact.
        // Summed from the top to avoid cancellation.
        let mut tails = vec![0.0; atoms.len()];
        let mut acc = 0.0;
        for i in (0..atoms.len()).rev() {
            tails[i] = acc;
            acc += atoms[i].1;
        }
        let ys: Vec<f64> = tails
            .iter()
            .map(|&t| if t > 0.0 { -t.ln() } else { f64::INFINITY })
            .collect();
        let xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();

        let (qx, qt) = (xs.clone(), tails.clone());
        let quantile = real_fn(move |u: f64| {
            let s = 1.0 - u;
            for (i, &t) in qt.iter().enumerate() {
                if s >= t {
                    return qx[i];
                }
            }
            qx[qx.len() - 1]
        });
        let (hx, hy) = (xs.clone(), ys.clone());
        let h = real_fn(move |y: f64| {
            for (i, &b) in hy.iter().enumerate() {
                if y <= b {
                    return hx[i];
                }
            }
            hx[hx.len() - 1]
        });
        let ca = atoms.clone();
        let cdf = real_fn(move |x: f64| {
            let s: f64 = ca.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
            s.min(1.0)
        });
        let h_jumps = ys[..ys.len() - 1].to_vec();
        let support = (xs[0], xs[xs.len() - 1]);
        Ok(QuantileRep {
            quantile,
            h,
            cdf: Some(cdf),
            pdf: None,
            atoms,
            h_jumps,
            support,
            label: label.into(),
        })
    }

    pub fn with_h(mut self, h: RealFn) -> Self {
        self.h = h;
        self
    }

    pub fn with_cdf(mut self, cdf: RealFn) -> Self {
        self.cdf = Some(cdf);
        self
    }

    pub fn with_pdf(mut self, pdf: RealFn) -> Self {
        self.pdf = Some(pdf);
        self
    }

    pub fn with_atoms(mut self, atoms: Vec<(f64, f64)>) -> Self {
        self.atoms = atoms;
        self
    }

    pub fn with_h_jumps(mut self, jumps: Vec<f64>) -> Self {
        self.h_jumps = jumps;
        self
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = (lo, hi);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn quantile(&self, u: f64) -> f64 {
        (self.quantile)(u)
    }

    /// `H(y) = G(1 - e^{-y})`, evaluated natively where the family allows.
    pub fn h(&self, y: f64) -> f64 {
        (self.h)(y)
    }

    pub fn cdf(&self, x: f64) -> Option<f64> {
        self.cdf.as_ref().map(|f| f(x))
    }

    /// `F(x-)`: the cdf minus any atom at `x`.
    pub fn cdf_left(&self, x: f64) -> Option<f64> {
        let f = self.cdf(x)?;
        let mass: f64 = self.atoms.iter().filter(|a| a.0 == x).map(|a| a.1).sum();
        Some((f - mass).max(0.0))
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        self.pdf.as_ref().map(|f| f(x))
    }

    pub fn has_cdf(&self) -> bool {
        self.cdf.is_some()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// True when the atoms carry all the mass.
    pub fn is_discrete(&self) -> bool {
        let total: f64 = self.atoms.iter().map(|a| a.1).sum();
        !self.atoms.is_empty() && (total - 1.0).abs() <= 1e-12
    }

    /// Points `y` where `H` jumps (gaps in the support).
    pub fn h_jumps(&self) -> &[f64] {
        &self.h_jumps
    }

    pub fn support_hint(&self) -> (f64, f64) {
        self.support
    }

    /// Generalized inverse of the cdf view, for checking the quantile.
    pub fn quantile_via_cdf(&self, u: f64) -> Result<f64> {
        let cdf = self
            .cdf
            .clone()
            .ok_or_else(|| Error::Usage(format!("{} has no cdf view", self.label)))?;
        let (lo, hi) = self.support;
        let start = (
            if lo.is_finite() { lo } else { -1.0 },
            if hi.is_finite() { hi } else { 1.0 },
        );
        let f = |x: f64| cdf(x);
        let bracket = if lo.is_finite() && hi.is_finite() {
            (lo - 1e-9 * lo.abs().max(1.0), hi)
        } else {
            expand_bracket(&f, u, start)?
        };
        let x = invert_monotone(f, u, bracket)?;
        // Bisection lands within the precision of an atom; snap to it.
        for &(a, _) in &self.atoms {
            if (x - a).abs() <= 1e-10 * a.abs().max(1.0) {
                return Ok(a);
            }
        }
        Ok(x)
    }

    /// Law of `c + lambda X` for `lambda > 0`.
    pub fn affine(&self, c: f64, lambda: f64) -> Result<QuantileRep> {
        if !(lambda > 0.0 && lambda.is_finite() && c.is_finite()) {
            return Err(Error::Domain(format!("affine map needs lambda > 0, got {lambda}")));
        }
        let map = move |x: f64| c + lambda * x;
        let q = self.quantile.clone();
        let h = self.h.clone();
        let cdf = self.cdf.clone().map(|f| real_fn(move |x| f((x - c) / lambda)));
        let pdf = self.pdf.clone().map(|f| real_fn(move |x| f((x - c) / lambda) / lambda));
        Ok(QuantileRep {
            quantile: real_fn(move |u| map(q(u))),
            h: real_fn(move |y| map(h(y))),
            cdf,
            pdf,
            atoms: self.atoms.iter().map(|&(x, p)| (map(x), p)).collect(),
            h_jumps: self.h_jumps.clone(),
            support: (map(self.support.0), map(self.support.1)),
            label: format!("{c} + {lambda} * ({})", self.label),
        })
    }

    /// Exact step data of `H` for finitely discrete laws: pairs
    /// `(upper, value)` with `H = value` on `(previous upper, upper]`.
    fn h_steps(&self) -> Option<Vec<(f64, f64)>> {
        if !self.is_discrete() {
            return None;
        }
        let mut ups = self.h_jumps.clone();
        ups.push(f64::INFINITY);
        if ups.len() != self.atoms.len() {
            return None;
        }
        Some(ups.into_iter().zip(self.atoms.iter().map(|a| a.0)).collect())
    }
}

/// Pairs `(upper, value)`: a left-continuous step function equal to
/// `value` on `(previous upper, upper]`, the last upper being infinite.
pub type Steps = Vec<(f64, f64)>;

fn step_value(steps: &[(f64, f64)], y: f64) -> f64 {
    for &(upper, v) in steps {
        if y <= upper {
            return v;
        }
    }
    steps.last().map(|s| s.1).unwrap_or(f64::NAN)
}

fn step_value_right(steps: &[(f64, f64)], y: f64) -> f64 {
    for &(upper, v) in steps {
        if y < upper {
            return v;
        }
    }
    steps.last().map(|s| s.1).unwrap_or(f64::NAN)
}

/// The function `H` on (0, ∞) with `X = H(E)` for a standard exponential `E`.
#[derive(Clone)]
pub struct HRep {
    h: RealFn,
    damped: Option<RealFn>,
    steps: Option<Steps>,
    jumps: Vec<f64>,
    source: Option<Arc<QuantileRep>>,
    label: String,
}

impl fmt::Debug for HRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HRep")
            .field("label", &self.label)
            .field("steps", &self.steps)
            .field("jumps", &self.jumps)
            .finish_non_exhaustive()
    }
}

impl HRep {
    pub fn new(label: impl Into<String>, h: RealFn) -> Self {
        HRep {
            h,
            damped: None,
            steps: None,
            jumps: Vec::new(),
            source: None,
            label: label.into(),
        }
    }

    /// Left-continuous step function.
    pub fn from_steps(label: impl Into<String>, steps: Steps) -> Result<Self> {
        if steps.is_empty() || steps.last().map(|s| s.0) != Some(f64::INFINITY) {
            return Err(Error::Config("step table must end at +infinity".into()));
        }
        for w in steps.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Config("step uppers must increase".into()));
            }
        }
        let s = steps.clone();
        let jumps = steps[..steps.len() - 1].iter().map(|s| s.0).collect();
        Ok(HRep {
            h: real_fn(move |y| step_value(&s, y)),
            damped: None,
            steps: Some(steps),
            jumps,
            source: None,
            label: label.into(),
        })
    }

    /// Supplies `y -> e^{-y} H(y)` for use where `H` itself overflows.
    pub fn with_damped(mut self, damped: RealFn) -> Self {
        self.damped = Some(damped);
        self
    }

    pub fn with_jumps(mut self, jumps: Vec<f64>) -> Self {
        self.jumps = jumps;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.h)(y)
    }

    /// `H(y+)`.
    pub fn eval_right(&self, y: f64) -> f64 {
        if let Some(s) = &self.steps {
            return step_value_right(s, y);
        }
        if self.jumps.iter().any(|&j| (j - y).abs() <= 1e-12 * y.abs().max(1.0)) {
            return (self.h)(y + 1e-9 * y.abs().max(1.0));
        }
        (self.h)(y)
    }

    /// `e^{-y} H(y)`.
    pub fn damped(&self, y: f64) -> f64 {
        match &self.damped {
            Some(d) => d(y),
            None => {
                let v = (self.h)(y);
                if v == 0.0 {
                    0.0
                } else {
                    (-y).exp() * v
                }
            }
        }
    }

    pub fn has_damped(&self) -> bool {
        self.damped.is_some()
    }

    pub fn steps(&self) -> Option<&[(f64, f64)]> {
        self.steps.as_deref()
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn source(&self) -> Option<&QuantileRep> {
        self.source.as_deref()
    }

    /// Quantile view `u -> H(L(u))`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.eval(log_survival(u))
    }

    /// Distribution of `H(E)`.
    pub fn to_quantile_rep(&self) -> QuantileRep {
        if let Some(src) = &self.source {
            return (**src).clone();
        }
        let h = self.h.clone();
        let mut d = QuantileRep::from_h(self.label.clone(), h).with_h_jumps(self.jumps.clone());
        if let Some(steps) = &self.steps {
            // Collapse equal consecutive values into single atoms.
            let mut atoms: Vec<(f64, f64)> = Vec::new();
            let mut lower = 0.0_f64;
            for &(upper, v) in steps {
                let mass = (-lower).exp() - if upper.is_finite() { (-upper).exp() } else { 0.0 };
                match atoms.last_mut() {
                    Some(last) if last.0 == v => last.1 += mass,
                    _ => atoms.push((v, mass)),
                }
                lower = upper;
            }
            if let Ok(disc) = QuantileRep::discrete(self.label.clone(), atoms) {
                d = disc;
            }
        }
        d
    }
}

/// `H` of a distribution: `h(y) = quantile(1 - e^{-y})`, exact step data
/// for finitely discrete laws.
pub fn to_h_rep(d: &QuantileRep) -> HRep {
    let mut rep = match d.h_steps() {
        Some(steps) => HRep::from_steps(d.label.clone(), steps).expect("valid atom steps"),
        None => HRep::new(d.label.clone(), d.h.clone()).with_jumps(d.h_jumps.clone()),
    };
    rep.source = Some(Arc::new(d.clone()));
    rep
}

/// Law of `(X - rho1)/(rho2 - rho1)`.
pub fn standardize(d: &QuantileRep, rho1: f64, rho2: f64) -> Result<QuantileRep> {
    if !(rho2 > rho1) {
        return Err(Error::Degenerate(format!(
            "standardization needs rho2 > rho1, got rho1 = {rho1}, rho2 = {rho2}"
        )));
    }
    if rho1 == 0.0 && rho2 == 1.0 {
        return Ok(d.clone());
    }
    let scale = rho2 - rho1;
    let mut out = d.affine(-rho1 / scale, 1.0 / scale)?;
    let (q, h) = (d.quantile.clone(), d.h.clone());
    out.quantile = real_fn(move |u| (q(u) - rho1) / scale);
    out.h = real_fn(move |y| (h(y) - rho1) / scale);
    out.label = format!("standardized {}", d.label);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> QuantileRep {
        make_family("exponential", &[1.0]).unwrap().build().unwrap()
    }

    #[test]
    fn exponential_h_is_identity() {
        let h = to_h_rep(&exp1());
        for &y in &[0.01, 0.5, 3.0, 40.0] {
            assert!((h.eval(y) - y).abs() < 1e-14 * y.max(1.0));
        }
    }

    #[test]
    fn bernoulli_half_quantile_and_h() {
        let d = make_family("bernoulli", &[0.5]).unwrap().build().unwrap();
        assert_eq!(d.quantile(0.3), 0.0);
        assert_eq!(d.quantile(0.5), 0.0);
        assert_eq!(d.quantile(0.7), 1.0);
        let h = to_h_rep(&d);
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(h.eval(ln2), 0.0);
        assert_eq!(h.eval(ln2 + 1e-12), 1.0);
        assert_eq!(h.eval_right(ln2), 1.0);
        assert_eq!(h.steps().unwrap().len(), 2);
    }

    #[test]
    fn affine_and_standardize() {
        let d = exp1();
        let s = standardize(&d, 1.0, 2.0).unwrap();
        for &u in &[0.1f64, 0.5, 0.9] {
            assert!((s.quantile(u) - (-(-u).ln_1p() - 1.0)).abs() < 1e-14);
        }
        let same = standardize(&d, 0.0, 1.0).unwrap();
        assert_eq!(same.quantile(0.37), d.quantile(0.37));
        assert!(matches!(standardize(&d, 1.0, 1.0), Err(Error::Degenerate(_))));
        let a = d.affine(5.0, 3.0).unwrap();
        assert!((a.quantile(0.5) - (5.0 + 3.0 * 2f64.ln())).abs() < 1e-14);
        assert!((a.cdf(5.0 + 3.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!(d.affine(0.0, -1.0).is_err());
    }

    #[test]
    fn log_record_standardized() {
        let d = make_family("log_record", &[]).unwrap().build().unwrap();
        let g = 0.577_215_664_901_532_9;
        let s = standardize(&d, -g, 1.0 - g).unwrap();
        let u: f64 = 0.42;
        let expect = (-(-u).ln_1p()).ln() + g;
        assert!((s.quantile(u) - expect).abs() < 1e-14);
    }

    #[test]
    fn discrete_cdf_left_limits() {
        let d = make_family("two_point", &[-1.0, 0.25, 2.0]).unwrap().build().unwrap();
        assert_eq!(d.cdf(-1.0), Some(0.25));
        assert_eq!(d.cdf_left(-1.0), Some(0.0));
        assert_eq!(d.cdf_left(2.0), Some(0.25));
        assert_eq!(d.quantile_via_cdf(0.25).unwrap(), -1.0);
        assert_eq!(d.quantile_via_cdf(0.26).unwrap(), 2.0);
    }

    #[test]
    fn steps_round_trip_to_atoms() {
        let d = make_family("bernoulli", &[0.3]).unwrap().build().unwrap();
        let back = to_h_rep(&d).to_quantile_rep();
        assert_eq!(back.atoms().len(), 2);
        let h = HRep::from_steps("s", vec![(1.0, -1.0), (f64::INFINITY, 2.0)]).unwrap();
        let q = HRep { source: None, ..h }.to_quantile_rep();
        assert!((q.atoms()[0].1 - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }
}
