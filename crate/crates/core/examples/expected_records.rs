//! Expected record sequences of a few source laws, with the quadrature
//! error attached to each entry.

use record_moments::distributions::{make_family, membership_check, to_h_rep};
use record_moments::ers::ers_compute;
use record_moments::numerics::Tolerance;

fn main() -> record_moments::Result<()> {
    let tol = Tolerance::default();
    for (name, params) in [
        ("exponential", vec![1.0]),
        ("uniform", vec![0.0, 1.0]),
        ("gumbel", vec![0.0, 1.0]),
        ("lognormal", vec![0.0, 1.0]),
        ("bernoulli", vec![0.5]),
    ] {
        let h = to_h_rep(&make_family(name, &params)?.build()?);
        let member = membership_check(&h, 8, &tol);
        let seq = ers_compute(&h, 6, &tol)?;
        println!("{name:<12} in class: {}", member.in_h_star);
        for (n, (r, e)) in seq.rho.iter().zip(&seq.error).enumerate() {
            println!("  rho_{} = {r:.12}  (+- {e:.1e})", n + 1);
        }
    }
    Ok(())
}
