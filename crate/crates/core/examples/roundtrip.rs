//! Forward map followed by reconstruction returns the standardized source.

use record_moments::cli::roundtrip_battery;
use record_moments::numerics::Tolerance;
use record_moments::transform::roundtrip;

fn main() -> record_moments::Result<()> {
    let tol = Tolerance::default();
    for d in roundtrip_battery()? {
        let r = roundtrip(&d, &tol)?;
        println!("{:<14} sup |H_0 - reconstruction| = {:.3e}", r.label, r.sup_distance);
    }
    Ok(())
}
