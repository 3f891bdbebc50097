//! Generating functions: the expected records of an exponential source
//! give `G(t) = (1 - t)^{-2}` and `M_T(a) = (1 - a)^{-2}`; integrating the
//! latter recovers the former.

use record_moments::distributions::{make_family, to_h_rep};
use record_moments::ers::{ers_compute, gen_fun_rho};
use record_moments::moments::{ers_from_mgf, mgf_from_ers};
use record_moments::numerics::Tolerance;

fn main() -> record_moments::Result<()> {
    let tol = Tolerance::default();
    let seq = ers_compute(&to_h_rep(&make_family("exponential", &[1.0])?.build()?), 80, &tol)?;
    for a in [-0.5, 0.0, 0.3, 0.6] {
        let g = gen_fun_rho(&seq, a, &tol)?;
        let m = mgf_from_ers(&seq, a, &tol)?;
        let back = ers_from_mgf(|s| (1.0 - s).powi(-2), seq.get(1), seq.get(2), a, &tol)?;
        println!(
            "a = {a:>4}: G {:.10} M_T {:.10} from M_T {back:.10} exact {:.10} (converged {})",
            g.value,
            m.value,
            (1.0 - a).powi(-2),
            g.converged && m.converged
        );
    }
    // Beyond the radius the series is reported as divergent rather than summed.
    let far = mgf_from_ers(&seq, 0.99, &tol)?;
    println!("a = 0.99: converged {} ({})", far.converged, far.diagnostic.unwrap_or_default());
    Ok(())
}
