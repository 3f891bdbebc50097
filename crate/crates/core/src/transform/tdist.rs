use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::distributions::RealFn;
use crate::error::{Error, Result};
use crate::numerics::special::{ln_gamma, normal_cdf, normal_sf};
use crate::numerics::{integrate_halfline, integrate_interval_with, Tolerance};

/// Families of densities on (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityLaw {
    Gamma {
        shape: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    Lognormal {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `(1 + lambda sin(pi log t))` times the standard lognormal density;
    /// every member has moments `e^{n^2/2}`.
    Stieltjes { lambda: f64 },
}

fn one() -> f64 {
    1.0
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `\int_z^\infty sin(pi s) phi(s) ds` for the standard normal density `phi`.
fn sine_tail(z: f64) -> f64 {
    let tol = Tolerance::new(1e-16, 1e-13, 4000).expect("static tolerance");
    integrate_halfline(|x| (std::f64::consts::PI * (z + x)).sin() * std_normal_pdf(z + x), &tol).value
}

impl DensityLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DensityLaw::Gamma { shape, rate } => {
                if shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("gamma needs positive shape and rate, got {shape}, {rate}")))
                }
            }
            DensityLaw::Lognormal { mu, sigma } => {
                if mu.is_finite() && sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("lognormal needs finite mu and sigma > 0, got {mu}, {sigma}")))
                }
            }
            DensityLaw::Stieltjes { lambda } => {
                if lambda.abs() <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "lambda must lie in [-1, 1] or the density turns negative, got {lambda}"
                    )))
                }
            }
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        match *self {
            DensityLaw::Gamma { shape, rate } => {
                (shape * rate.ln() + (shape - 1.0) * t.ln() - rate * t - ln_gamma(shape)).exp()
            }
            DensityLaw::Lognormal { mu, sigma } => {
                let z = (t.ln() - mu) / sigma;
                std_normal_pdf(z) / (t * sigma)
            }
            DensityLaw::Stieltjes { lambda } => {
                let z = t.ln();
                (1.0 + lambda * (std::f64::consts::PI * z).sin()) * std_normal_pdf(z) / t
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        match *self {
            DensityLaw::Gamma { shape, rate } => gamma_lr(shape, rate * t),
            DensityLaw::Lognormal { mu, sigma } => normal_cdf((t.ln() - mu) / sigma),
            DensityLaw::Stieltjes { lambda } => {
                let z = t.ln();
                // \int_{-inf}^z sin(pi s) phi(s) ds = -\int_z^inf, by oddness.
                normal_cdf(z) - lambda * sine_tail(z)
            }
        }
    }

    pub fn sf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 1.0;
        }
        match *self {
            DensityLaw::Gamma { shape, rate } => gamma_ur(shape, rate * t),
            DensityLaw::Lognormal { mu, sigma } => normal_sf((t.ln() - mu) / sigma),
            DensityLaw::Stieltjes { lambda } => {
                let z = t.ln();
                normal_sf(z) + lambda * sine_tail(z)
            }
        }
    }

    /// `E T^n`; the equal-moment family goes through quadrature so the
    /// shared value is checked rather than assumed.
    pub fn moment(&self, n: usize, tol: &Tolerance) -> Result<f64> {
        let nf = n as f64;
        match *self {
            DensityLaw::Gamma { shape, rate } => Ok((ln_gamma(shape + nf) - ln_gamma(shape) - nf * rate.ln()).exp()),
            DensityLaw::Lognormal { mu, sigma } => Ok((nf * mu + 0.5 * nf * nf * sigma * sigma).exp()),
            DensityLaw::Stieltjes { lambda } => {
                // t = e^{n + w}: E T^n = e^{n^2/2} \int phi(w) (1 + lambda sin(pi (n + w))) dw.
                let f = |w: f64| std_normal_pdf(w) * (1.0 + lambda * (std::f64::consts::PI * (nf + w)).sin());
                let breaks: Vec<f64> = (-40..=40).map(|k| k as f64).collect();
                let r = integrate_interval_with(f, -40.0, 40.0, &breaks, &tol.with_abs(tol.abs_tol.min(1e-14)));
                let v = r.into_result("lognormal-family moment")?;
                Ok(v * (0.5 * nf * nf).exp())
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DensityLaw::Gamma { shape, rate } => format!("gamma({shape}, {rate})"),
            DensityLaw::Lognormal { mu, sigma } => format!("lognormal({mu}, {sigma})"),
            DensityLaw::Stieltjes { lambda } => format!("stieltjes_lambda({lambda})"),
        }
    }
}

/// Law of `T` through its distribution function and both one-sided
/// limits; declared atoms make left limits exact.
#[derive(Clone)]
pub struct CdfLaw {
    pub cdf: RealFn,
    pub cdf_left: RealFn,
    pub sf: RealFn,
    pub sf_left: RealFn,
    pub atoms: Vec<(f64, f64)>,
    pub label: String,
}

impl CdfLaw {
    /// From a right-continuous cdf alone; left limits are taken at
    /// `t - eps` away from the declared atoms.
    pub fn from_cdf(label: impl Into<String>, cdf: RealFn, atoms: Vec<(f64, f64)>, eps: f64) -> Self {
        let c1 = cdf.clone();
        let at = atoms.clone();
        let cdf_left = Arc::new(move |t: f64| {
            let mass: f64 = at.iter().filter(|a| a.0 == t).map(|a| a.1).sum();
            if mass > 0.0 {
                c1(t) - mass
            } else if at.is_empty() {
                c1(t - eps)
            } else {
                c1(t)
            }
        }) as RealFn;
        let (c2, c3) = (cdf.clone(), cdf_left.clone());
        CdfLaw {
            cdf,
            cdf_left,
            sf: Arc::new(move |t| 1.0 - c2(t)),
            sf_left: Arc::new(move |t| 1.0 - c3(t)),
            atoms,
            label: label.into(),
        }
    }
}

/// Forms a law of `T` may take.
#[derive(Clone)]
pub enum TForm {
    Atoms(Vec<(f64, f64)>),
    Density(DensityLaw),
    Cdf(CdfLaw),
    /// Weights summing to one.
    Mixture(Vec<(f64, TDist)>),
}

/// A positive random variable with finite moments of every order.
#[derive(Clone)]
pub struct TDist {
    form: TForm,
    moments_cache: Arc<OnceLock<Vec<f64>>>,
    cached: Option<Vec<f64>>,
}

impl fmt::Debug for TDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            TForm::Atoms(a) => f.debug_tuple("TDist::Atoms").field(a).finish(),
            TForm::Density(d) => f.debug_tuple("TDist::Density").field(d).finish(),
            TForm::Cdf(c) => f.debug_tuple("TDist::Cdf").field(&c.label).finish(),
            TForm::Mixture(m) => f.debug_tuple("TDist::Mixture").field(m).finish(),
        }
    }
}

/// JSON description of a law of `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TDistSpec {
    Atoms { atoms: Vec<[f64; 2]> },
    Density(DensityLaw),
    StieltjesLambda { lambda: f64 },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dist: TDistSpec,
}

impl TDistSpec {
    pub fn build(&self) -> Result<TDist> {
        match self {
            TDistSpec::Atoms { atoms } => TDist::atoms(atoms.iter().map(|a| (a[0], a[1])).collect()),
            TDistSpec::Density(law) => TDist::density(*law),
            TDistSpec::StieltjesLambda { lambda } => TDist::density(DensityLaw::Stieltjes { lambda: *lambda }),
            TDistSpec::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.dist.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                TDist::mixture(parts)
            }
        }
    }
}

const MASS_TOL: f64 = 1e-12;

impl TDist {
    fn from_form(form: TForm) -> Self {
        TDist {
            form,
            moments_cache: Arc::new(OnceLock::new()),
            cached: None,
        }
    }

    /// Finite atom list `(t_i, p_i)`; sorted and merged here.
    pub fn atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Config("atom list is empty".into()));
        }
        if atoms.iter().any(|&(t, p)| !(t > 0.0 && t.is_finite() && p > 0.0)) {
            return Err(Error::Config("atoms need locations t > 0 and positive masses".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Config(format!("atom masses sum to {total}, not 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (t, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += p,
                _ => merged.push((t, p)),
            }
        }
        Ok(Self::from_form(TForm::Atoms(merged)))
    }

    /// `T = t` almost surely.
    pub fn degenerate(t: f64) -> Result<Self> {
        Self::atoms(vec![(t, 1.0)])
    }

    pub fn density(law: DensityLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self::from_form(TForm::Density(law)))
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::density(DensityLaw::Gamma { shape, rate })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::density(DensityLaw::Lognormal { mu, sigma })
    }

    pub fn stieltjes(lambda: f64) -> Result<Self> {
        Self::density(DensityLaw::Stieltjes { lambda })
    }

    pub fn from_cdf_law(law: CdfLaw) -> Self {
        Self::from_form(TForm::Cdf(law))
    }

    /// Convex combination; nested atom-only parts are flattened.
    pub fn mixture(parts: Vec<(f64, TDist)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        if parts.iter().any(|(w, _)| !(*w > 0.0)) {
            return Err(Error::Config("mixture weights must be positive".into()));
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Config(format!("mixture weights sum to {total}, not 1")));
        }
        if parts.iter().all(|(_, d)| matches!(d.form, TForm::Atoms(_))) {
            let mut atoms = Vec::new();
            for (w, d) in &parts {
                if let TForm::Atoms(a) = &d.form {
                    atoms.extend(a.iter().map(|&(t, p)| (t, w * p)));
                }
            }
            let s: f64 = atoms.iter().map(|a| a.1).sum();
            for a in &mut atoms {
                a.1 /= s;
            }
            return Self::atoms(atoms);
        }
        Ok(Self::from_form(TForm::Mixture(parts)))
    }

    /// Truncation of `T1 + T2`, `T1` Poisson(1) and `Pr(T2 = r_n) = 2^{-n}`
    /// over an enumeration `r_n` of the rationals in (0, 1]: a discrete law
    /// whose support becomes dense as the truncation grows.
    pub fn poisson_plus_rationals(poisson_terms: usize, rationals: usize) -> Result<Self> {
        if poisson_terms == 0 || rationals == 0 {
            return Err(Error::Config("truncation sizes must be positive".into()));
        }
        let mut rs: Vec<f64> = Vec::with_capacity(rationals);
        let mut q = 1u64;
        'outer: loop {
            for p in 1..=q {
                if gcd(p, q) == 1 {
                    rs.push(p as f64 / q as f64);
                    if rs.len() == rationals {
                        break 'outer;
                    }
                }
            }
            q += 1;
        }
        let mut atoms = Vec::with_capacity(poisson_terms * rationals);
        let mut pk = (-1f64).exp();
        for k in 0..poisson_terms {
            if k > 0 {
                pk /= k as f64;
            }
            let mut w = 1.0;
            for &r in &rs {
                w *= 0.5;
                atoms.push((k as f64 + r, pk * w));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        Self::atoms(atoms)
    }

    pub fn form(&self) -> &TForm {
        &self.form
    }

    /// Attaches moments `m_0..m_K` computed elsewhere.
    pub fn with_moments(mut self, m: Vec<f64>) -> Self {
        self.cached = Some(m);
        self
    }

    pub fn moments_cache(&self) -> Option<&[f64]> {
        self.cached.as_deref().or_else(|| self.moments_cache.get().map(Vec::as_slice))
    }

    pub fn label(&self) -> String {
        match &self.form {
            TForm::Atoms(a) if a.len() == 1 => format!("degenerate({})", a[0].0),
            TForm::Atoms(a) => format!("atoms({})", a.len()),
            TForm::Density(d) => d.label(),
            TForm::Cdf(c) => c.label.clone(),
            TForm::Mixture(m) => format!("mixture({})", m.len()),
        }
    }

    /// `Pr(T <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match &self.form {
            TForm::Atoms(a) => a.iter().filter(|x| x.0 <= t).fold(0.0, |s, x| s + x.1).min(1.0),
            TForm::Density(d) => d.cdf(t),
            TForm::Cdf(c) => (c.cdf)(t),
            TForm::Mixture(m) => m.iter().map(|(w, d)| w * d.cdf(t)).sum(),
        }
    }

    /// `Pr(T < t)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match &self.form {
            TForm::Atoms(a) => a.iter().filter(|x| x.0 < t).fold(0.0, |s, x| s + x.1).min(1.0),
            TForm::Density(d) => d.cdf(t),
            TForm::Cdf(c) => (c.cdf_left)(t),
            TForm::Mixture(m) => m.iter().map(|(w, d)| w * d.cdf_left(t)).sum(),
        }
    }

    /// `Pr(T > t)`.
    pub fn sf(&self, t: f64) -> f64 {
        match &self.form {
            TForm::Atoms(a) => a.iter().filter(|x| x.0 > t).fold(0.0, |s, x| s + x.1).min(1.0),
            TForm::Density(d) => d.sf(t),
            TForm::Cdf(c) => (c.sf)(t),
            TForm::Mixture(m) => m.iter().map(|(w, d)| w * d.sf(t)).sum(),
        }
    }

    /// `Pr(T >= t)`.
    pub fn sf_left(&self, t: f64) -> f64 {
        match &self.form {
            TForm::Atoms(a) => a.iter().filter(|x| x.0 >= t).fold(0.0, |s, x| s + x.1).min(1.0),
            TForm::Density(d) => d.sf(t),
            TForm::Cdf(c) => (c.sf_left)(t),
            TForm::Mixture(m) => m.iter().map(|(w, d)| w * d.sf_left(t)).sum(),
        }
    }

    /// Density of the absolutely continuous forms.
    pub fn pdf(&self, t: f64) -> Option<f64> {
        match &self.form {
            TForm::Density(d) => Some(d.pdf(t)),
            _ => None,
        }
    }

    /// Atom locations and masses known exactly.
    pub fn declared_atoms(&self) -> Vec<(f64, f64)> {
        match &self.form {
            TForm::Atoms(a) => a.clone(),
            TForm::Density(_) => Vec::new(),
            TForm::Cdf(c) => c.atoms.clone(),
            TForm::Mixture(m) => {
                let mut out: Vec<(f64, f64)> = m
                    .iter()
                    .flat_map(|(w, d)| d.declared_atoms().into_iter().map(move |(t, p)| (t, w * p)))
                    .collect();
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                out
            }
        }
    }

    /// `E T^n`.
    pub fn moment(&self, n: usize, tol: &Tolerance) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        if let Some(c) = self.moments_cache() {
            if let Some(v) = c.get(n) {
                return Ok(*v);
            }
        }
        match &self.form {
            TForm::Atoms(a) => Ok(a.iter().map(|&(t, p)| p * t.powi(n as i32)).sum()),
            TForm::Density(d) => d.moment(n, tol),
            TForm::Cdf(c) => {
                // E T^n = n \int_0^\infty t^{n-1} Pr(T > t) dt.
                let sf = c.sf.clone();
                let nf = n as f64;
                let r = integrate_halfline(move |t: f64| nf * t.powi(n as i32 - 1) * sf(t), tol);
                r.into_result(&format!("moment {n} of {}", c.label))
            }
            TForm::Mixture(m) => {
                let mut s = 0.0;
                for (w, d) in m {
                    s += w * d.moment(n, tol)?;
                }
                Ok(s)
            }
        }
    }

    /// `m_0..=m_k`, cached after the first call.
    pub fn moments(&self, k: usize, tol: &Tolerance) -> Result<Vec<f64>> {
        if let Some(c) = self.moments_cache() {
            if c.len() > k {
                return Ok(c[..=k].to_vec());
            }
        }
        let m = (0..=k).map(|n| self.moment(n, tol)).collect::<Result<Vec<_>>>()?;
        if self.cached.is_none() {
            let _ = self.moments_cache.set(m.clone());
        }
        Ok(m)
    }

    /// Checks unit mass on (0, ∞) and finite moments up to order 8.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        match &self.form {
            TForm::Atoms(a) => {
                let s: f64 = a.iter().map(|x| x.1).sum();
                if (s - 1.0).abs() > MASS_TOL || a.iter().any(|x| !(x.0 > 0.0)) {
                    return Err(Error::Domain("atoms must carry unit mass on (0, inf)".into()));
                }
            }
            TForm::Density(d) => {
                d.validate()?;
                // On the log scale, where lognormal-type densities are smooth.
                let g = |s: f64| s.exp() * d.pdf(s.exp());
                let r = integrate_halfline(|x| g(x) + g(-x), tol);
                if !r.converged || (r.value - 1.0).abs() > 1e-8 {
                    return Err(Error::Domain(format!("density integrates to {}, not 1", r.value)));
                }
            }
            TForm::Cdf(c) => {
                let at0 = (c.cdf)(0.0);
                if at0 > 1e-12 {
                    return Err(Error::Domain(format!("Pr(T <= 0) = {at0} must vanish")));
                }
            }
            TForm::Mixture(m) => {
                for (_, d) in m {
                    d.validate(tol)?;
                }
            }
        }
        for n in 1..=8 {
            let v = self.moment(n, tol)?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("moment {n} of T is not finite and positive ({v})")));
            }
        }
        Ok(())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}
