use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inverse::{phi_inverse, phi_inverse_parts};
use super::phi::phi;
use super::tdist::TDist;
use crate::distributions::{standardize, to_h_rep, HRep, QuantileRep};
use crate::ers::{ers_compute, ers_entry};
use crate::error::{Error, Result};
use crate::numerics::special::ln_factorial;
use crate::numerics::Tolerance;

/// Abscissae of the round-trip comparison.
pub const ROUNDTRIP_GRID: (f64, f64, usize) = (0.05, 10.0, 60);

/// Evenly spaced points, nudged off any listed jump.
fn grid_avoiding(lo: f64, hi: f64, n: usize, jumps: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .map(|y| {
            if jumps.iter().any(|&j| (j - y).abs() < 1e-6 * y.max(1.0)) {
                y + 1e-4 * y.max(1.0)
            } else {
                y
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub label: String,
    pub grid: Vec<f64>,
    pub original: Vec<f64>,
    pub reconstructed: Vec<f64>,
    pub sup_distance: f64,
}

/// Standardizes `d`, applies the forward map and then the inverse, and
/// compares both `H_0` on a grid that avoids jump points.
pub fn roundtrip(d: &QuantileRep, tol: &Tolerance) -> Result<RoundtripReport> {
    let seq = ers_compute(&to_h_rep(d), 2, tol)?;
    let d0 = standardize(d, seq.rho[0], seq.rho[1])?;
    let h0 = to_h_rep(&d0);
    let t = phi(d, tol)?;
    let rec = phi_inverse(&t, tol)?;
    let (lo, hi, n) = ROUNDTRIP_GRID;
    let mut jumps = h0.jumps().to_vec();
    jumps.extend(rec.jumps().iter().copied());
    let grid = grid_avoiding(lo, hi, n, &jumps);
    let pairs: Vec<(f64, f64)> = grid.par_iter().map(|&y| (h0.eval(y), rec.eval(y))).collect();
    let sup = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !sup.is_finite() {
        return Err(Error::non_convergence("round trip", format!("non-finite distance for {}", d.label())));
    }
    Ok(RoundtripReport {
        label: d.label().to_string(),
        grid,
        original: pairs.iter().map(|p| p.0).collect(),
        reconstructed: pairs.iter().map(|p| p.1).collect(),
        sup_distance: sup,
    })
}

/// Points where the two laws of `T` are compared.
pub const INVARIANCE_GRID: [f64; 12] = [0.05, 0.2, 0.5, 0.8, 1.0, 1.3, 2.0, 3.0, 4.5, 7.0, 10.0, 15.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub c: f64,
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Compares the forward map of `d` with that of `c + lambda d`, on both
/// `Pr(T <= t)` and `Pr(T < t)`.
pub fn invariance_check(d: &QuantileRep, c: f64, lambda: f64, tol: &Tolerance) -> Result<InvarianceReport> {
    if !(lambda > 0.0) || !c.is_finite() || !lambda.is_finite() {
        return Err(Error::Domain(format!("need finite c and lambda > 0, got c = {c}, lambda = {lambda}")));
    }
    let a = phi(d, tol)?;
    let b = phi(&d.affine(c, lambda)?, tol)?;
    let worst = INVARIANCE_GRID
        .par_iter()
        .map(|&t| (a.cdf(t) - b.cdf(t)).abs().max((a.cdf_left(t) - b.cdf_left(t)).abs()))
        .reduce(|| 0.0, f64::max);
    Ok(InvarianceReport {
        c,
        lambda,
        grid: INVARIANCE_GRID.to_vec(),
        max_discrepancy: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// `\int (y^k - k!) e^{-y} H_0(y) dy` against `k! sum_{j<k} m_j/(j+1)!`
/// for `k = 1..=k_max`; `m` are the moments of the `T` behind `H_0`.
pub fn weighted_identity(h0: &HRep, m: &[f64], k_max: usize, tol: &Tolerance) -> Result<Vec<IdentityRow>> {
    if m.len() < k_max {
        return Err(Error::InsufficientData(format!("need {k_max} moments, got {}", m.len())));
    }
    let base = ers_entry(h0, 1, tol)?.value;
    (1..=k_max)
        .map(|k| {
            let kf = ln_factorial(k).exp();
            let lhs = kf * (ers_entry(h0, k + 1, tol)?.value - base);
            let rhs = kf * (0..k).map(|j| m[j] * (-ln_factorial(j + 1)).exp()).sum::<f64>();
            Ok(IdentityRow { k, lhs, rhs })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringReport {
    /// `\int e^{-y} H(y) dy` for the uncentered reconstruction.
    pub integral: f64,
    pub c_t: f64,
    pub cdf_left_one: f64,
    /// `|integral - (c_T - e F_T(1-))|`.
    pub discrepancy: f64,
}

/// `\int e^{-y} H = c_T - e Pr(T < 1)` for the uncentered reconstruction.
pub fn centering_identity(t: &TDist, tol: &Tolerance) -> Result<CenteringReport> {
    let parts = phi_inverse_parts(t, tol)?;
    let integral = ers_entry(&parts.h, 1, tol)?.value;
    let expect = parts.c_t - std::f64::consts::E * parts.cdf_left_one;
    Ok(CenteringReport {
        integral,
        c_t: parts.c_t,
        cdf_left_one: parts.cdf_left_one,
        discrepancy: (integral - expect).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingReport {
    pub rho1: f64,
    pub rho2: f64,
    pub grid_points: usize,
    pub monotone: bool,
    /// Largest decrease between consecutive grid values.
    pub worst_drop: f64,
}

/// `rho_1`, `rho_2` of a reconstruction and its monotonicity on a grid
/// of `points` abscissae over `(0, y_max]`.
pub fn landing_check(h0: &HRep, points: usize, y_max: f64, tol: &Tolerance) -> Result<LandingReport> {
    if points < 2 {
        return Err(Error::Config("need at least two grid points".into()));
    }
    let rho1 = ers_entry(h0, 1, tol)?.value;
    let rho2 = ers_entry(h0, 2, tol)?.value;
    let grid: Vec<f64> = (1..=points).map(|i| y_max * i as f64 / points as f64).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&y| h0.eval(y)).collect();
    let worst_drop = vals.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    Ok(LandingReport {
        rho1,
        rho2,
        grid_points: points,
        monotone: worst_drop <= 0.0 && vals.iter().all(|v| v.is_finite()),
        worst_drop,
    })
}
