//! The three record notions on a fair coin. Under quantile-of-uniform
//! records the second record is 0 with probability 1/2 - ln(2)/2, the
//! second weak record is 0 with probability 1/4 overall and 1/2 once the
//! first is 0, and the second ordinary record, when it exists, is 1.

use record_moments::distributions::make_family;
use record_moments::records::{simulate_quantile_records, simulate_stream_records, RecordNotion};

fn share(hits: usize, total: usize) -> f64 {
    hits as f64 / total.max(1) as f64
}

fn main() -> record_moments::Result<()> {
    let reps = 100_000;
    let d = make_family("bernoulli", &[0.5])?.build()?;
    let q = simulate_quantile_records(&d, 2, reps, 1)?;
    let w = simulate_stream_records(&d, RecordNotion::Weak, 2, 64, reps, 1)?;
    let r = simulate_stream_records(&d, RecordNotion::Ordinary, 2, 64, reps, 1)?;

    let q2 = q.column(2);
    let w2 = w.column(2);
    let first_zero: Vec<&Vec<f64>> = w.values.iter().filter(|v| v.len() >= 2 && v[0] == 0.0).collect();
    let r2 = r.column(2);
    println!(
        "quantile R_2 = 0: {:.4} (exact {:.4})",
        share(q2.iter().filter(|&&v| v == 0.0).count(), q2.len()),
        0.5 - 0.5 * std::f64::consts::LN_2
    );
    println!("weak W_2 = 0: {:.4} (exact 0.25)", share(w2.iter().filter(|&&v| v == 0.0).count(), w2.len()));
    println!(
        "weak W_2 = 0 given W_1 = 0: {:.4} (exact 0.5)",
        share(first_zero.iter().filter(|v| v[1] == 0.0).count(), first_zero.len())
    );
    println!("ordinary R_2 = 1: {:.4} (exact 1)", share(r2.iter().filter(|&&v| v == 1.0).count(), r2.len()));
    Ok(())
}
