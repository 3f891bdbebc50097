use serde::{Deserialize, Serialize};

use super::{log_survival, real_fn, unit_from_y, QuantileRep};
use crate::error::{Error, Result};
use crate::numerics::special::{ln_poisson_cdf, normal_cdf, normal_quantile, normal_upper_quantile_ln};

/// Built-in distribution families, in the JSON shape
/// `{"kind": "exponential", "rate": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Exponential {
        #[serde(default = "one")]
        rate: f64,
    },
    Uniform {
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// `H(y) = log y`: the law of `log E`.
    LogRecord,
    /// Largest-value Gumbel, `F(x) = exp(-exp(-(x - mu)/beta))`.
    Gumbel {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        beta: f64,
    },
    Lognormal {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    Bernoulli {
        p: f64,
    },
    /// `Pr(X = x1) = p`, `Pr(X = x2) = 1 - p`.
    TwoPoint {
        x1: f64,
        p: f64,
        x2: f64,
    },
    /// Linear interpolation of `(u, x)` knots from `u = 0` to `u = 1`.
    /// A repeated `u` is a jump of the quantile, a repeated `x` an atom.
    PiecewiseQuantile {
        knots: Vec<[f64; 2]>,
    },
    Erlang {
        k: u32,
        #[serde(default = "one")]
        rate: f64,
    },
    Constant {
        value: f64,
    },
    /// `H(y) = exp(sqrt(y)) - shift`: every record has a finite mean but
    /// `E X^p` is infinite for all `p > 1`.
    ExpSqrt {
        #[serde(default)]
        shift: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Family from a name and positional parameters; missing trailing
/// parameters take their defaults.
pub fn make_family(name: &str, params: &[f64]) -> Result<Family> {
    let p = |i: usize, default: Option<f64>| -> Result<f64> {
        params
            .get(i)
            .copied()
            .or(default)
            .ok_or_else(|| Error::Config(format!("{name}: missing parameter {}", i + 1)))
    };
    let want = |n: usize| -> Result<()> {
        if params.len() > n {
            Err(Error::Config(format!("{name} takes at most {n} parameters, got {}", params.len())))
        } else {
            Ok(())
        }
    };
    let fam = match name {
        "exponential" => {
            want(1)?;
            Family::Exponential { rate: p(0, Some(1.0))? }
        }
        "uniform" => {
            want(2)?;
            Family::Uniform {
                a: p(0, Some(0.0))?,
                b: p(1, Some(1.0))?,
            }
        }
        "log_record" => {
            want(0)?;
            Family::LogRecord
        }
        "gumbel" => {
            want(2)?;
            Family::Gumbel {
                mu: p(0, Some(0.0))?,
                beta: p(1, Some(1.0))?,
            }
        }
        "lognormal" => {
            want(2)?;
            Family::Lognormal {
                mu: p(0, Some(0.0))?,
                sigma: p(1, Some(1.0))?,
            }
        }
        "bernoulli" => {
            want(1)?;
            Family::Bernoulli { p: p(0, Some(0.5))? }
        }
        "two_point" => {
            want(3)?;
            Family::TwoPoint {
                x1: p(0, None)?,
                p: p(1, None)?,
                x2: p(2, None)?,
            }
        }
        "piecewise_quantile" => {
            if params.len() < 4 || params.len() % 2 != 0 {
                return Err(Error::Config(
                    "piecewise_quantile takes a flat list u0, x0, u1, x1, ...".into(),
                ));
            }
            Family::PiecewiseQuantile {
                knots: params.chunks(2).map(|c| [c[0], c[1]]).collect(),
            }
        }
        "erlang" => {
            want(2)?;
            let k = p(0, Some(2.0))?;
            if k.fract() != 0.0 || k < 1.0 {
                return Err(Error::Config(format!("erlang shape must be a positive integer, got {k}")));
            }
            Family::Erlang {
                k: k as u32,
                rate: p(1, Some(1.0))?,
            }
        }
        "constant" => {
            want(1)?;
            Family::Constant { value: p(0, Some(0.0))? }
        }
        "exp_sqrt" => {
            want(1)?;
            Family::ExpSqrt { shift: p(0, Some(0.0))? }
        }
        other => return Err(Error::Config(format!("unknown distribution family '{other}'"))),
    };
    fam.validate()?;
    Ok(fam)
}

fn positive(name: &str, what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: {what} must be positive, got {v}")))
    }
}

fn finite(name: &str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: {what} must be finite")))
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Exponential { .. } => "exponential",
            Family::Uniform { .. } => "uniform",
            Family::LogRecord => "log_record",
            Family::Gumbel { .. } => "gumbel",
            Family::Lognormal { .. } => "lognormal",
            Family::Bernoulli { .. } => "bernoulli",
            Family::TwoPoint { .. } => "two_point",
            Family::PiecewiseQuantile { .. } => "piecewise_quantile",
            Family::Erlang { .. } => "erlang",
            Family::Constant { .. } => "constant",
            Family::ExpSqrt { .. } => "exp_sqrt",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.name();
        match *self {
            Family::Exponential { rate } => positive(n, "rate", rate),
            Family::Uniform { a, b } => {
                finite(n, "a", a)?;
                finite(n, "b", b)?;
                if a < b {
                    Ok(())
                } else {
                    Err(Error::Config(format!("uniform needs a < b, got a = {a}, b = {b}")))
                }
            }
            Family::LogRecord => Ok(()),
            Family::Gumbel { mu, beta } => {
                finite(n, "mu", mu)?;
                positive(n, "beta", beta)
            }
            Family::Lognormal { mu, sigma } => {
                finite(n, "mu", mu)?;
                positive(n, "sigma", sigma)
            }
            Family::Bernoulli { p } => {
                if p > 0.0 && p < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("bernoulli needs p in (0,1), got {p}")))
                }
            }
            Family::TwoPoint { x1, p, x2 } => {
                finite(n, "x1", x1)?;
                finite(n, "x2", x2)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Config(format!("two_point needs p in (0,1), got {p}")));
                }
                if x1 < x2 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("two_point needs x1 < x2, got {x1}, {x2}")))
                }
            }
            Family::PiecewiseQuantile { ref knots } => validate_knots(knots),
            Family::Erlang { k, rate } => {
                if k == 0 {
                    return Err(Error::Config("erlang shape must be at least 1".into()));
                }
                positive(n, "rate", rate)
            }
            Family::Constant { value } => finite(n, "value", value),
            Family::ExpSqrt { shift } => finite(n, "shift", shift),
        }
    }

    /// The distribution itself.
    pub fn build(&self) -> Result<QuantileRep> {
        self.validate()?;
        let d = match *self {
            Family::Exponential { rate } => QuantileRep::from_h("exponential", real_fn(move |y| y / rate))
                .with_cdf(real_fn(move |x: f64| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() }))
                .with_pdf(real_fn(move |x: f64| if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }))
                .with_support(0.0, f64::INFINITY),
            Family::Uniform { a, b } => QuantileRep::from_quantile("uniform", real_fn(move |u| a + (b - a) * u))
                .with_h(real_fn(move |y| a + (b - a) * unit_from_y(y)))
                .with_cdf(real_fn(move |x| ((x - a) / (b - a)).clamp(0.0, 1.0)))
                .with_pdf(real_fn(move |x| if x >= a && x <= b { 1.0 / (b - a) } else { 0.0 }))
                .with_support(a, b),
            Family::LogRecord => QuantileRep::from_h("log_record", real_fn(|y: f64| y.ln()))
                .with_cdf(real_fn(|x: f64| -(-x.exp()).exp_m1()))
                .with_pdf(real_fn(|x: f64| (x - x.exp()).exp())),
            Family::Gumbel { mu, beta } => {
                // -log(1 - e^{-y}) keeps the upper tail accurate.
                QuantileRep::from_quantile("gumbel", real_fn(move |u: f64| mu - beta * (-u.ln()).ln()))
                    .with_h(real_fn(move |y: f64| mu - beta * (-(-(-y).exp()).ln_1p()).ln()))
                    .with_cdf(real_fn(move |x: f64| (-(-(x - mu) / beta).exp()).exp()))
                    .with_pdf(real_fn(move |x: f64| {
                        let z = (x - mu) / beta;
                        (-z - (-z).exp()).exp() / beta
                    }))
            }
            Family::Lognormal { mu, sigma } => QuantileRep::from_quantile(
                "lognormal",
                real_fn(move |u| match normal_quantile(u) {
                    Ok(z) => (mu + sigma * z).exp(),
                    Err(_) => f64::NAN,
                }),
            )
            .with_h(real_fn(move |y: f64| match normal_upper_quantile_ln(-y) {
                Ok(z) => (mu + sigma * z).exp(),
                Err(_) => f64::NAN,
            }))
            .with_cdf(real_fn(move |x: f64| if x <= 0.0 { 0.0 } else { normal_cdf((x.ln() - mu) / sigma) }))
            .with_pdf(real_fn(move |x: f64| {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
                }
            }))
            .with_support(0.0, f64::INFINITY),
            Family::Bernoulli { p } => QuantileRep::discrete("bernoulli", vec![(0.0, 1.0 - p), (1.0, p)])?,
            Family::TwoPoint { x1, p, x2 } => QuantileRep::discrete("two_point", vec![(x1, p), (x2, 1.0 - p)])?,
            Family::PiecewiseQuantile { ref knots } => piecewise(knots)?,
            Family::Erlang { k, rate } => {
                let h = real_fn(move |y| erlang_h(k, rate, y));
                let cdf = real_fn(move |x: f64| {
                    if x <= 0.0 {
                        0.0
                    } else {
                        -ln_poisson_cdf(k as usize, rate * x).exp_m1()
                    }
                });
                QuantileRep::from_h("erlang", h)
                    .with_cdf(cdf)
                    .with_pdf(real_fn(move |x: f64| {
                        if x <= 0.0 {
                            0.0
                        } else {
                            let lk = crate::numerics::special::ln_factorial(k as usize - 1);
                            (k as f64 * rate.ln() + (k as f64 - 1.0) * x.ln() - rate * x - lk).exp()
                        }
                    }))
                    .with_support(0.0, f64::INFINITY)
            }
            Family::Constant { value } => QuantileRep::discrete("constant", vec![(value, 1.0)])?,
            Family::ExpSqrt { shift } => QuantileRep::from_h("exp_sqrt", real_fn(move |y: f64| y.sqrt().exp() - shift))
                .with_cdf(real_fn(move |x: f64| {
                    let v = x + shift;
                    if v <= 1.0 {
                        0.0
                    } else {
                        -(-v.ln().powi(2)).exp_m1()
                    }
                }))
                .with_support(1.0 - shift, f64::INFINITY),
        };
        Ok(d)
    }
}

/// Solves `Pr(Erlang(k, rate) > x) = e^{-y}` for `x` in log space.
fn erlang_h(k: u32, rate: f64, y: f64) -> f64 {
    if !(y > 0.0) {
        return 0.0;
    }
    let target = -y;
    let f = |x: f64| ln_poisson_cdf(k as usize, x);
    let mut hi = (k as f64).max(1.0);
    while f(hi) > target {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi / rate
}

fn validate_knots(knots: &[[f64; 2]]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::Config("piecewise_quantile needs at least two knots".into()));
    }
    if knots.iter().any(|k| !(k[0].is_finite() && k[1].is_finite())) {
        return Err(Error::Config("piecewise_quantile knots must be finite".into()));
    }
    if knots[0][0] != 0.0 || knots[knots.len() - 1][0] != 1.0 {
        return Err(Error::Config("piecewise_quantile knots must run from u = 0 to u = 1".into()));
    }
    for w in knots.windows(2) {
        if w[1][0] < w[0][0] || w[1][1] < w[0][1] {
            return Err(Error::Config(format!(
                "piecewise_quantile knots must be non-decreasing in u and x, got {:?} then {:?}",
                w[0], w[1]
            )));
        }
    }
    for w in knots.windows(3) {
        if w[0][0] == w[1][0] && w[1][0] == w[2][0] {
            return Err(Error::Config("at most two knots may share a level u".into()));
        }
    }
    if knots[0][1] == knots[knots.len() - 1][1] {
        return Err(Error::Config("piecewise_quantile must not be constant".into()));
    }
    Ok(())
}

fn piecewise(knots: &[[f64; 2]]) -> Result<QuantileRep> {
    validate_knots(knots)?;
    let segs: Vec<[f64; 4]> = knots
        .windows(2)
        .filter(|w| w[1][0] > w[0][0])
        .map(|w| [w[0][0], w[0][1], w[1][0], w[1][1]])
        .collect();
    let qs = segs.clone();
    // Left-continuous: at a shared level the lower segment wins.
    let quantile = move |u: f64| -> f64 {
        for s in &qs {
            if u <= s[2] {
                let t = (u - s[0]) / (s[2] - s[0]);
                return s[1] + t.clamp(0.0, 1.0) * (s[3] - s[1]);
            }
        }
        qs[qs.len() - 1][3]
    };
    let cs = segs.clone();
    let cdf = move |x: f64| -> f64 {
        let mut f = 0.0;
        for s in &cs {
            if x >= s[3] {
                f = s[2];
            } else if x >= s[1] {
                // s[1] < s[3] here, so the segment is not flat.
                return s[0] + (x - s[1]) / (s[3] - s[1]) * (s[2] - s[0]);
            } else {
                break;
            }
        }
        f
    };
    let ps = segs.clone();
    let pdf = move |x: f64| -> f64 {
        ps.iter()
            .filter(|s| s[3] > s[1] && x > s[1] && x < s[3])
            .map(|s| (s[2] - s[0]) / (s[3] - s[1]))
            .sum()
    };
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for s in &segs {
        if s[1] == s[3] {
            match atoms.last_mut() {
                Some(a) if a.0 == s[1] => a.1 += s[2] - s[0],
                _ => atoms.push((s[1], s[2] - s[0])),
            }
        }
    }
    let mut jumps = Vec::new();
    for w in segs.windows(2) {
        if w[1][1] > w[0][3] {
            jumps.push(log_survival(w[0][2]));
        }
    }
    let lo = knots[0][1];
    let hi = knots[knots.len() - 1][1];
    let qh = quantile.clone();
    Ok(QuantileRep::from_quantile("piecewise_quantile", real_fn(quantile))
        .with_h(real_fn(move |y| qh(unit_from_y(y))))
        .with_cdf(real_fn(cdf))
        .with_pdf(real_fn(pdf))
        .with_atoms(atoms)
        .with_h_jumps(jumps)
        .with_support(lo, hi))
}
