//! The forward map: a source law goes to a positive `T` whose moments are
//! read off the expected records. An exponential source gives Gamma(2, 1).

use record_moments::distributions::make_family;
use record_moments::numerics::Tolerance;
use record_moments::transform::phi;

fn main() -> record_moments::Result<()> {
    let tol = Tolerance::default();
    let t = phi(&make_family("exponential", &[3.0])?.build()?, &tol)?;
    println!("{:>5} {:>12} {:>12}", "t", "Pr(T <= t)", "Gamma(2,1)");
    for x in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        println!("{x:>5} {:>12.8} {:>12.8}", t.cdf(x), 1.0 - (1.0 + x) * (-x).exp());
    }
    println!("moments: {:?}", &t.moments(5, &tol)?[1..]);

    // A two-point source lands on a point mass.
    let e = std::f64::consts::E;
    let atom = phi(&make_family("two_point", &[-1.0, 1.0 - (-1f64).exp(), e - 1.0])?.build()?, &tol)?;
    println!("two-point source: atoms {:?}", atom.declared_atoms());
    Ok(())
}
