//! Reconstruction of the standardized source from a law of `T`, and the
//! checks that it lands with `rho_1 = 0`, `rho_2 = 1`.

use record_moments::numerics::Tolerance;
use record_moments::transform::{c_t, landing_check, phi_inverse, TDist};

fn main() -> record_moments::Result<()> {
    let tol = Tolerance::default();
    let cases = [
        ("point mass at 1", TDist::degenerate(1.0)?),
        ("Gamma(2, 1)", TDist::gamma(2.0, 1.0)?),
        ("Exp(1)", TDist::gamma(1.0, 1.0)?),
        ("atoms", TDist::atoms(vec![(0.5, 0.25), (2.0, 0.75)])?),
    ];
    for (name, t) in cases {
        let h0 = phi_inverse(&t, &tol)?;
        let land = landing_check(&h0, 200, 10.0, &tol)?;
        println!(
            "{name:<16} c_T = {:.10}  rho_1 = {:.1e}  rho_2 = {:.12}  monotone {}",
            c_t(&t, &tol)?,
            land.rho1,
            land.rho2,
            land.monotone
        );
        let row: Vec<String> = [0.2, 0.5, 1.5, 3.0, 6.0].iter().map(|&y| format!("{:.5}", h0.eval(y))).collect();
        println!("  H_0 at 0.2, 0.5, 1.5, 3, 6: {}", row.join(", "));
    }
    Ok(())
}
