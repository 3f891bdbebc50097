use std::sync::Arc;

use super::tdist::{CdfLaw, TDist};
use crate::distributions::{standardize, to_h_rep, HRep, QuantileRep, RealFn};
use crate::ers::{ers_compute, ers_to_t_moments};
use crate::error::{Error, Result};
use crate::numerics::{integrate_halfline_with, integrate_interval_with, HalfLineOptions, Tolerance};

/// Number of moments of `T` attached to the result of [`phi`].
pub const PHI_MOMENTS: usize = 8;

/// Tolerance of the probability integrals; tight because the inverse map
/// multiplies tail probabilities by `e^t`.
fn inner_tol() -> Tolerance {
    Tolerance::new(1e-14, 1e-12, 4000).expect("static tolerance")
}

/// Probabilities are still usable when the relative target was missed
/// only because `H` rounds away the differences (a bounded `H` far out).
const PROB_ABS_TOL: f64 = 1e-15;

fn accept(converged: bool, err: f64) -> bool {
    converged || err <= PROB_ABS_TOL
}

/// `Pr(T < t)` (`right = false`) or `Pr(T <= t)` (`right = true`) for
/// `t <= 1`, where the integrand `(H(t) - H(s))(1 - s) e^{-s}` is
/// non-negative.
fn lower_prob(h: &HRep, t: f64, right: bool) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let ht = if right { h.eval_right(t) } else { h.eval(t) };
    let breaks: Vec<f64> = h.jumps().iter().copied().filter(|&j| j < t).collect();
    let r = integrate_interval_with(|s: f64| (ht - h.eval(s)) * (1.0 - s) * (-s).exp(), 0.0, t, &breaks, &inner_tol());
    if accept(r.converged, r.abs_error_estimate) {
        r.value
    } else {
        f64::NAN
    }
}

/// `Pr(T >= t)` (`right = false`) or `Pr(T > t)` (`right = true`) for
/// `t >= 1` from `\int_t^\infty (H(s) - H(t))(s - 1) e^{-s} ds`, scaled
/// by `e^t` during the quadrature.
fn upper_prob(h: &HRep, t: f64, right: bool) -> f64 {
    let ht = if right { h.eval_right(t) } else { h.eval(t) };
    let breaks: Vec<f64> = h.jumps().iter().filter(|&&j| j > t).map(|j| j - t).collect();
    let f = |x: f64| {
        let v = h.eval(t + x) - ht;
        if v == 0.0 {
            0.0
        } else {
            v * (t + x - 1.0) * (-x).exp()
        }
    };
    let r = integrate_halfline_with(f, &inner_tol(), &HalfLineOptions { breakpoints: breaks, tail: None });
    let scale = (-t).exp();
    if accept(r.converged, r.abs_error_estimate * scale) {
        r.value * scale
    } else {
        f64::NAN
    }
}

fn cdf_law_of(h0: HRep, label: String) -> CdfLaw {
    let h = Arc::new(h0);
    // Atoms of T sit at the jumps of H, with mass (H(y+) - H(y)) y e^{-y}.
    let atoms: Vec<(f64, f64)> = h
        .jumps()
        .iter()
        .map(|&y| (y, (h.eval_right(y) - h.eval(y)) * y * (-y).exp()))
        .filter(|a| a.1 > 0.0)
        .collect();
    let mk = |right: bool, upper: bool| -> RealFn {
        let h = h.clone();
        Arc::new(move |t: f64| {
            let (lo, hi) = if t <= 1.0 {
                let p = lower_prob(&h, t, right);
                (p, 1.0 - p)
            } else {
                let q = upper_prob(&h, t, right);
                (1.0 - q, q)
            };
            if upper {
                hi.clamp(0.0, 1.0)
            } else {
                lo.clamp(0.0, 1.0)
            }
        })
    };
    CdfLaw {
        cdf: mk(true, false),
        cdf_left: mk(false, false),
        sf: mk(true, true),
        sf_left: mk(false, true),
        atoms,
        label,
    }
}

/// Points where the construction of `T` is checked for convergence.
const CHECK_GRID: [f64; 8] = [0.05, 0.3, 0.9, 1.0, 1.5, 3.0, 8.0, 20.0];

/// `T = L(F(V))`, where `V` has density proportional to
/// `(1 - F(x)) L(F(x))`. The source is first standardized to
/// `rho_1 = 0, rho_2 = 1`; the map ignores location and scale.
pub fn phi(d: &QuantileRep, tol: &Tolerance) -> Result<TDist> {
    let h = to_h_rep(d);
    let seq = ers_compute(&h, PHI_MOMENTS + 2, tol)?;
    let moments = ers_to_t_moments(&seq)?;
    let d0 = standardize(d, seq.rho[0], seq.rho[1])?;
    let h0 = to_h_rep(&d0);
    let label = format!("phi({})", d.label());

    if let Some(steps) = h0.steps() {
        // Finitely discrete source: T is carried by the jump points.
        let mut atoms: Vec<(f64, f64)> = steps
            .windows(2)
            .map(|w| {
                let y = w[0].0;
                (y, (w[1].1 - w[0].1) * y * (-y).exp())
            })
            .filter(|a| a.1 > 0.0)
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        return Ok(TDist::atoms(atoms)?.with_moments(moments.m));
    }

    let law = cdf_law_of(h0, label);
    for &t in &CHECK_GRID {
        let a = (law.cdf)(t);
        let b = (law.cdf_left)(t);
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::non_convergence("distribution function of T", format!("at t = {t}")));
        }
    }
    Ok(TDist::from_cdf_law(law).with_moments(moments.m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_family;
    use crate::transform::TForm;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn exponential_maps_to_gamma_two() {
        let d = make_family("exponential", &[1.0]).unwrap().build().unwrap();
        let t = phi(&d, &tol()).unwrap();
        for &x in &[0.1f64, 0.5, 1.0, 2.0, 5.0, 12.0] {
            let expect = 1.0 - (-x).exp() * (1.0 + x);
            assert!((t.cdf(x) - expect).abs() < 1e-10, "t={x}: {} vs {expect}", t.cdf(x));
            let s = (-x).exp() * (1.0 + x);
            assert!((t.sf(x) / s - 1.0).abs() < 1e-9);
        }
        let m = t.moments_cache().unwrap();
        assert!((m[3] - 24.0).abs() < 1e-6);
    }

    #[test]
    fn log_record_maps_to_exponential() {
        let d = make_family("log_record", &[]).unwrap().build().unwrap();
        let t = phi(&d, &tol()).unwrap();
        for &x in &[0.05f64, 0.7, 1.0, 3.0, 9.0] {
            assert!((t.cdf(x) + (-x).exp_m1()).abs() < 1e-9, "t={x}");
        }
    }

    #[test]
    fn two_point_fixture_is_degenerate_at_one() {
        let e = std::f64::consts::E;
        let d = make_family("two_point", &[-1.0, 1.0 - (-1f64).exp(), e - 1.0]).unwrap().build().unwrap();
        let t = phi(&d, &tol()).unwrap();
        match t.form() {
            TForm::Atoms(a) => {
                assert_eq!(a.len(), 1);
                assert!((a[0].0 - 1.0).abs() < 1e-15 && (a[0].1 - 1.0).abs() < 1e-15);
            }
            _ => panic!("expected atoms"),
        }
        assert_eq!(t.cdf_left(1.0), 0.0);
        assert_eq!(t.cdf(1.0), 1.0);
    }

    #[test]
    fn quantile_gap_gives_an_atom() {
        // A jump of the quantile function at u = 1/2 is an atom of T.
        let d = make_family("piecewise_quantile", &[0.0, 0.0, 0.5, 1.0, 0.5, 2.0, 1.0, 3.0])
            .unwrap()
            .build()
            .unwrap();
        let t = phi(&d, &tol()).unwrap();
        let atoms = t.declared_atoms();
        assert_eq!(atoms.len(), 1);
        let y = 2f64.ln();
        assert!((atoms[0].0 - y).abs() < 1e-12);
        let jump = t.cdf(y) - t.cdf_left(y);
        assert!((jump - atoms[0].1).abs() < 1e-9, "{jump} vs {}", atoms[0].1);
    }
}
