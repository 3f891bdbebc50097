//! Record values: exact laws and simulation of the three record notions.

mod simulate;
pub mod stats;

pub use simulate::{simulate_quantile_records, simulate_stream_records, RecordNotion, RecordSample, RecordSummary, SummaryRow};

use crate::distributions::{log_survival, QuantileRep};
use crate::error::{Error, Result};
use crate::numerics::special::{ln_factorial, poisson_cdf};

/// Density of the n-th record of a standard uniform sequence,
/// `L(u)^{n-1}/(n-1)!`.
pub fn uniform_record_pdf(n: usize, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("record index starts at 1".into()));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("u must lie in (0,1), got {u}")));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let l = log_survival(u);
    Ok(((n - 1) as f64 * l.ln() - ln_factorial(n - 1)).exp())
}

/// `1 - (1 - F) \sum_{k<n} L(F)^k/k!` evaluated at the level `f`.
fn record_level(n: usize, f: f64) -> f64 {
    if f <= 0.0 {
        0.0
    } else if f >= 1.0 {
        1.0
    } else {
        // (1 - F) = e^{-t} with t = L(F), so the sum is a Poisson cdf.
        1.0 - poisson_cdf(n, log_survival(f))
    }
}

/// Distribution function of the n-th record value at `x`.
pub fn record_cdf(d: &QuantileRep, n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("record index starts at 1".into()));
    }
    let f = d
        .cdf(x)
        .ok_or_else(|| Error::Usage(format!("{} has no cdf view", d.label())))?;
    Ok(record_level(n, f))
}

/// Left limit of [`record_cdf`] at `x`.
pub fn record_cdf_left(d: &QuantileRep, n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("record index starts at 1".into()));
    }
    let f = d
        .cdf_left(x)
        .ok_or_else(|| Error::Usage(format!("{} has no cdf view", d.label())))?;
    Ok(record_level(n, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_family;

    #[test]
    fn uniform_record_density_values() {
        assert_eq!(uniform_record_pdf(1, 0.3).unwrap(), 1.0);
        let u = 1.0 - (-1f64).exp();
        assert!((uniform_record_pdf(2, u).unwrap() - 1.0).abs() < 1e-14);
        let u = 1.0 - (-2f64).exp();
        assert!((uniform_record_pdf(3, u).unwrap() - 2.0).abs() < 1e-14);
        assert!(uniform_record_pdf(2, 1.0).is_err());
        assert!(uniform_record_pdf(0, 0.5).is_err());
    }

    #[test]
    fn record_cdf_values() {
        let d = make_family("exponential", &[1.0]).unwrap().build().unwrap();
        assert!((record_cdf(&d, 2, 1.0).unwrap() - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-15);
        assert!((record_cdf(&d, 1, 0.7).unwrap() - d.cdf(0.7).unwrap()).abs() < 1e-15);
        let x: f64 = 0.4;
        let f = d.cdf(x).unwrap();
        let two = 1.0 - (1.0 - f) * (1.0 + log_survival(f));
        assert!((record_cdf(&d, 2, x).unwrap() - two).abs() < 1e-15);
        assert_eq!(record_cdf(&d, 3, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn record_cdf_at_atoms() {
        let d = make_family("bernoulli", &[0.5]).unwrap().build().unwrap();
        assert_eq!(record_cdf(&d, 2, 1.0).unwrap(), 1.0);
        let below = 0.5 - 0.5 * 2f64.ln();
        assert!((record_cdf(&d, 2, 0.0).unwrap() - below).abs() < 1e-15);
        assert_eq!(record_cdf_left(&d, 2, 0.0).unwrap(), 0.0);
        assert!((record_cdf_left(&d, 2, 1.0).unwrap() - below).abs() < 1e-15);
    }
}
