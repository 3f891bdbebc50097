//! Hankel screening and the Carleman diagnostic on moments of `T`.

use record_moments::moments::MomentSeq;

fn main() -> record_moments::Result<()> {
    let factorial: Vec<f64> = (0..=12).scan(1.0, |f, n| {
        if n > 0 {
            *f *= n as f64;
        }
        Some(*f)
    }).collect();
    let lognormal: Vec<f64> = (0..=12).map(|n| (0.5 * (n * n) as f64).exp()).collect();
    let broken = vec![1.0, 2.0, 1.0, 1.0, 1.0];
    for (name, m) in [("Exp(1)", factorial), ("lognormal", lognormal), ("not a moment sequence", broken)] {
        let seq = MomentSeq::new(m).diagnose()?;
        println!("{name:<22} feasible {:<5} hint {:?}", seq.feasible, seq.hints.determinacy_hint);
        if let Some(s) = seq.hints.carleman_partial_sum {
            println!("  Carleman partial sum {s:.4}, decay exponent {:.3}", seq.hints.carleman_decay.unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
