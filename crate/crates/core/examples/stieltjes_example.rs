//! Distinct source laws with one expected record sequence: the inverse of
//! the oscillating lognormal family, whose members share all moments.

use record_moments::distributions::log_survival;
use record_moments::ers::{ers_compute, stieltjes_example_ers};
use record_moments::numerics::Tolerance;
use record_moments::transform::{phi_inverse, TDist};

fn main() -> record_moments::Result<()> {
    let tol = Tolerance::default();
    let closed = stieltjes_example_ers(6)?;
    for lambda in [-1.0, 0.0, 0.5, 1.0] {
        let h0 = phi_inverse(&TDist::stieltjes(lambda)?, &tol)?;
        let seq = ers_compute(&h0, 6, &tol)?;
        let worst = seq.rho.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "lambda {lambda:>4}: median {:.6}, 0.9-quantile {:.6}, max |rho - closed form| {worst:.2e}",
            h0.eval(log_survival(0.5)),
            h0.eval(log_survival(0.9)),
        );
    }
    println!("closed form: {closed:?}");
    Ok(())
}
