//! Monte Carlo record values under the three record notions, checked
//! against the exact expected records.

use record_moments::distributions::{make_family, to_h_rep};
use record_moments::ers::ers_compute;
use record_moments::numerics::Tolerance;
use record_moments::records::{simulate_quantile_records, simulate_stream_records, RecordNotion};

fn main() -> record_moments::Result<()> {
    let d = make_family("gumbel", &[0.0, 1.0])?.build()?;
    let exact = ers_compute(&to_h_rep(&d), 4, &Tolerance::default())?;
    let quantile = simulate_quantile_records(&d, 4, 20_000, 11)?;
    let ordinary = simulate_stream_records(&d, RecordNotion::Ordinary, 4, 5_000, 20_000, 11)?;
    println!("{:>3} {:>12} {:>18} {:>18}", "n", "exact", "quantile records", "ordinary records");
    for n in 1..=4 {
        let (mq, sq) = quantile.mean_se(n);
        let (mo, so) = ordinary.mean_se(n);
        println!("{n:>3} {:>12.6} {mq:>10.6} +- {sq:.4} {mo:>10.6} +- {so:.4}", exact.get(n));
    }

    // Ties separate the notions for a discrete law.
    let coin = make_family("bernoulli", &[0.5])?.build()?;
    let weak = simulate_stream_records(&coin, RecordNotion::Weak, 3, 64, 20_000, 11)?;
    let strict = simulate_stream_records(&coin, RecordNotion::Ordinary, 3, 64, 20_000, 11)?;
    println!("bernoulli(1/2): weak records reaching 3: {}", weak.column(3).len());
    println!("bernoulli(1/2): ordinary records reaching 3: {}", strict.column(3).len());
    Ok(())
}
