use std::f64::consts::E;
use std::sync::Arc;

use super::tdist::{DensityLaw, TDist, TForm};
use crate::distributions::{HRep, RealFn};
use crate::error::{Error, Result};
use crate::numerics::special::{centering_weight, centering_weight_deriv, ln_exp_over_t};
use crate::numerics::{integrate_halfline, integrate_halfline_with, integrate_interval_with, HalfLineOptions, Tolerance};

fn inner_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-11, 4000).expect("static tolerance")
}

/// Weight of `T = t` in the centering constant: `1/t` above 1 and
/// `(1 + e t - e^t)/t` up to and including 1.
fn centering_at(t: f64) -> f64 {
    if t > 1.0 {
        1.0 / t
    } else {
        centering_weight(t)
    }
}

/// `c_T = E[1/T; T > 1] + E[(1 + eT - e^T)/T; T <= 1]`.
pub fn c_t(t: &TDist, tol: &Tolerance) -> Result<f64> {
    match t.form() {
        TForm::Atoms(a) => Ok(a.iter().map(|&(x, p)| p * centering_at(x)).sum()),
        TForm::Density(law) => {
            let lo = integrate_interval_with(|s| centering_weight(s) * law.pdf(s), 0.0, 1.0, &[0.25, 0.5], tol)
                .into_result("centering constant on (0,1]")?;
            let hi = integrate_halfline(|x| law.pdf(1.0 + x) / (1.0 + x), tol).into_result("centering constant on (1,inf)")?;
            Ok(lo + hi)
        }
        TForm::Cdf(_) => {
            // Integration by parts against the distribution function.
            let breaks: Vec<f64> = t.declared_atoms().iter().map(|a| a.0).collect();
            let lo = integrate_interval_with(|s| centering_weight_deriv(s) * t.cdf(s), 0.0, 1.0, &breaks, tol)
                .into_result("centering constant on (0,1]")?;
            let shifted: Vec<f64> = breaks.iter().filter(|&&b| b > 1.0).map(|b| b - 1.0).collect();
            let hi = integrate_halfline_with(
                |x| t.sf(1.0 + x) / ((1.0 + x) * (1.0 + x)),
                tol,
                &HalfLineOptions {
                    breakpoints: shifted,
                    tail: None,
                },
            )
            .into_result("centering constant on (1,inf)")?;
            Ok(1.0 - lo - hi)
        }
        TForm::Mixture(m) => {
            let mut s = 0.0;
            for (w, d) in m {
                s += w * c_t(d, tol)?;
            }
            Ok(s)
        }
    }
}

/// Reconstruction together with its pieces: `h` is the uncentered
/// function, `h0 = h - c_T + e F_T(1-)`.
#[derive(Debug, Clone)]
pub struct InverseParts {
    pub h: HRep,
    pub h0: HRep,
    pub c_t: f64,
    pub cdf_left_one: f64,
}

/// `e^t/t`.
fn exp_over_t(t: f64) -> f64 {
    ln_exp_over_t(t).exp()
}

/// Geometric breakpoints clustered at both ends of `[a, b]`.
fn two_sided_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut step = 0.25;
    while a + step < b {
        out.push(a + step);
        out.push(b - step);
        step *= 2.0;
    }
    out
}

/// Uncentered `H` of a density: `\int_1^y e^t/t f(t) dt`, negative below 1.
fn density_h(law: DensityLaw, y: f64) -> f64 {
    if y >= 1.0 {
        // Evaluated through the damped form, scaled back.
        density_damped(law, y) * y.exp()
    } else {
        let breaks = two_sided_breaks(y, 1.0);
        let r = integrate_interval_with(|t| exp_over_t(t) * law.pdf(t), y, 1.0, &breaks, &inner_tol());
        if r.converged {
            -r.value
        } else {
            f64::NAN
        }
    }
}

/// `e^{-y} H(y) = \int_1^y e^{t - y} f(t)/t dt` for `y >= 1`.
fn density_damped(law: DensityLaw, y: f64) -> f64 {
    if y < 1.0 {
        return (-y).exp() * density_h(law, y);
    }
    if y == 1.0 {
        return 0.0;
    }
    let breaks = two_sided_breaks(1.0, y);
    let r = integrate_interval_with(|t| (t - y).exp() * law.pdf(t) / t, 1.0, y, &breaks, &inner_tol());
    if r.converged {
        r.value
    } else {
        f64::NAN
    }
}

/// Uncentered `H` of a general law from its distribution function:
/// `e Pr(1 <= T < y) + \int_1^y (x-1)/x^2 e^x Pr(x < T < y) dx` above 1
/// and `-e Pr(y <= T < 1) - \int_y^1 (1-x)/x^2 e^x Pr(y <= T <= x) dx`
/// below. With `damped`, the result is multiplied by `e^{-y}` inside the
/// integral.
fn cdf_h(t: &TDist, y: f64, damped: bool) -> f64 {
    let atoms: Vec<f64> = t.declared_atoms().iter().map(|a| a.0).collect();
    if y >= 1.0 {
        if y == 1.0 {
            return 0.0;
        }
        let shift = if damped { y } else { 0.0 };
        let tail_y = t.sf_left(y);
        let head = E * (t.sf_left(1.0) - tail_y) * (-shift).exp();
        let mut breaks = two_sided_breaks(1.0, y);
        breaks.extend(atoms.iter().copied().filter(|&a| a > 1.0 && a < y));
        let f = |x: f64| {
            let p = t.sf(x) - tail_y;
            if p <= 0.0 {
                0.0
            } else {
                (x - 1.0) / (x * x) * (x - shift).exp() * p
            }
        };
        let r = integrate_interval_with(f, 1.0, y, &breaks, &inner_tol());
        if r.converged {
            head + r.value
        } else {
            f64::NAN
        }
    } else {
        let low_y = t.cdf_left(y);
        let head = -E * (t.cdf_left(1.0) - low_y);
        let mut breaks = two_sided_breaks(y, 1.0);
        breaks.extend(atoms.iter().copied().filter(|&a| a > y && a < 1.0));
        let f = |x: f64| {
            let p = t.cdf(x) - low_y;
            if p <= 0.0 {
                0.0
            } else {
                (1.0 - x) / (x * x) * x.exp() * p
            }
        };
        let r = integrate_interval_with(f, y, 1.0, &breaks, &inner_tol());
        let v = if r.converged { head - r.value } else { f64::NAN };
        if damped {
            v * (-y).exp()
        } else {
            v
        }
    }
}

/// Uncentered `H` for atoms: `sum_{1 <= t_i < y} p_i e^{t_i}/t_i` above 1
/// and `-sum_{y <= t_i < 1} p_i e^{t_i}/t_i` below, as exact steps.
fn atom_steps(atoms: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut steps = Vec::with_capacity(atoms.len() + 1);
    for (j, &(tj, _)) in atoms.iter().enumerate() {
        // Value on (t_{j-1}, t_j].
        let v = if tj <= 1.0 {
            -atoms[j..].iter().filter(|a| a.0 < 1.0).map(|&(t, p)| p * exp_over_t(t)).sum::<f64>()
        } else if j > 0 && atoms[j - 1].0 >= 1.0 {
            atoms[..j].iter().filter(|a| a.0 >= 1.0).map(|&(t, p)| p * exp_over_t(t)).sum()
        } else {
            0.0
        };
        steps.push((tj, v));
    }
    let last: f64 = atoms.iter().filter(|a| a.0 >= 1.0).map(|&(t, p)| p * exp_over_t(t)).sum();
    steps.push((f64::INFINITY, last));
    steps
}

fn uncentered(t: &TDist) -> Result<HRep> {
    let label = format!("inverse({})", t.label());
    Ok(match t.form() {
        TForm::Atoms(a) => HRep::from_steps(label, atom_steps(a))?,
        TForm::Density(law) => {
            let law = *law;
            HRep::new(label, Arc::new(move |y| density_h(law, y)) as RealFn)
                .with_damped(Arc::new(move |y| density_damped(law, y)))
        }
        TForm::Cdf(_) => {
            let (t1, t2) = (t.clone(), t.clone());
            let jumps = t.declared_atoms().iter().map(|a| a.0).collect();
            HRep::new(label, Arc::new(move |y| cdf_h(&t1, y, false)) as RealFn)
                .with_damped(Arc::new(move |y| cdf_h(&t2, y, true)))
                .with_jumps(jumps)
        }
        TForm::Mixture(m) => {
            let parts: Vec<(f64, HRep)> = m.iter().map(|(w, d)| Ok((*w, uncentered(d)?))).collect::<Result<_>>()?;
            let parts = Arc::new(parts);
            let (p1, p2) = (parts.clone(), parts.clone());
            let mut jumps: Vec<f64> = parts.iter().flat_map(|(_, h)| h.jumps().to_vec()).collect();
            jumps.sort_by(f64::total_cmp);
            jumps.dedup();
            HRep::new(label, Arc::new(move |y| p1.iter().map(|(w, h)| w * h.eval(y)).sum()) as RealFn)
                .with_damped(Arc::new(move |y| p2.iter().map(|(w, h)| w * h.damped(y)).sum()))
                .with_jumps(jumps)
        }
    })
}

fn shifted(h: &HRep, shift: f64) -> Result<HRep> {
    let label = format!("{} centered", h.label());
    if let Some(steps) = h.steps() {
        return HRep::from_steps(label, steps.iter().map(|&(u, v)| (u, v + shift)).collect());
    }
    let (a, b) = (h.clone(), h.clone());
    Ok(HRep::new(label, Arc::new(move |y| a.eval(y) + shift) as RealFn)
        .with_damped(Arc::new(move |y| b.damped(y) + shift * (-y).exp()))
        .with_jumps(h.jumps().to_vec()))
}

/// Reconstruction `H_0` of the standardized law with the given `T`, and
/// the pieces it is assembled from.
pub fn phi_inverse_parts(t: &TDist, tol: &Tolerance) -> Result<InverseParts> {
    for n in 1..=4 {
        let m = t.moment(n, tol)?;
        if !m.is_finite() {
            return Err(Error::Domain(format!("moment {n} of T diverges")));
        }
    }
    let c = c_t(t, tol)?;
    let f1 = t.cdf_left(1.0);
    let h = uncentered(t)?;
    let h0 = shifted(&h, E * f1 - c)?;
    Ok(InverseParts {
        h,
        h0,
        c_t: c,
        cdf_left_one: f1,
    })
}

/// `H_0` with `rho_1 = 0, rho_2 = 1` whose image under the forward map is `T`.
pub fn phi_inverse(t: &TDist, tol: &Tolerance) -> Result<HRep> {
    Ok(phi_inverse_parts(t, tol)?.h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::digamma;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn centering_constants() {
        assert!((c_t(&TDist::degenerate(1.0).unwrap(), &tol()).unwrap() - 1.0).abs() < 1e-15);
        assert!((c_t(&TDist::degenerate(2.0).unwrap(), &tol()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_one_is_a_step() {
        let h = phi_inverse(&TDist::degenerate(1.0).unwrap(), &tol()).unwrap();
        assert_eq!(h.eval(0.3), -1.0);
        assert_eq!(h.eval(1.0), -1.0);
        assert!((h.eval(1.0 + 1e-12) - (E - 1.0)).abs() < 1e-15);
        assert!((h.eval(7.0) - (E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn gamma_two_gives_identity_minus_one() {
        let t = TDist::gamma(2.0, 1.0).unwrap();
        let h = phi_inverse(&t, &tol()).unwrap();
        for &y in &[0.05, 0.5, 1.0, 2.0, 7.0, 30.0] {
            assert!((h.eval(y) - (y - 1.0)).abs() < 1e-8, "y={y}: {}", h.eval(y));
        }
        assert!((h.damped(900.0) - 899.0 * (-900f64).exp()).abs() < 1e-300_f64.max(1e-9 * 899.0 * (-900f64).exp()));
    }

    #[test]
    fn exponential_gives_log_plus_euler() {
        let g = -digamma(1.0);
        let t = TDist::gamma(1.0, 1.0).unwrap();
        let h = phi_inverse(&t, &tol()).unwrap();
        for &y in &[0.05, 0.5, 1.0, 3.0, 12.0] {
            assert!((h.eval(y) - (y.ln() + g)).abs() < 1e-8, "y={y}");
        }
    }

    #[test]
    fn cdf_path_matches_density_path() {
        let law = DensityLaw::Gamma { shape: 2.0, rate: 1.0 };
        let dens = TDist::density(law).unwrap();
        let via_cdf = TDist::from_cdf_law(crate::transform::CdfLaw::from_cdf(
            "gamma cdf",
            Arc::new(move |x| law.cdf(x)),
            vec![],
            1e-9,
        ));
        let a = c_t(&dens, &tol()).unwrap();
        let b = c_t(&via_cdf, &tol()).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        for &y in &[0.2, 0.9, 2.5, 6.0] {
            let ha = density_h(law, y);
            let hb = cdf_h(&via_cdf, y, false);
            assert!((ha - hb).abs() < 1e-7, "y={y}: {ha} vs {hb}");
        }
    }

    #[test]
    fn atom_steps_values() {
        let t = TDist::atoms(vec![(0.5, 0.25), (2.0, 0.75)]).unwrap();
        let parts = phi_inverse_parts(&t, &tol()).unwrap();
        let h = &parts.h;
        let e05 = 0.5f64.exp() / 0.5;
        let e2 = 2f64.exp() / 2.0;
        assert!((h.eval(0.2) + 0.25 * e05).abs() < 1e-14);
        assert_eq!(h.eval(0.7), 0.0);
        assert_eq!(h.eval(2.0), 0.0);
        assert!((h.eval(2.5) - 0.75 * e2).abs() < 1e-14);
        assert_eq!(parts.cdf_left_one, 0.25);
    }
}
