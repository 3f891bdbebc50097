use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{empirical_quantile, mean_se};
use crate::distributions::{to_h_rep, QuantileRep};
use crate::error::{Error, Result};

/// Which record process is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordNotion {
    /// Strict upper records of an i.i.d. stream.
    Ordinary,
    /// Ties count as new records.
    Weak,
    /// Quantile function applied to the records of a uniform stream.
    QuantileUniform,
}

impl RecordNotion {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordNotion::Ordinary => "ordinary",
            RecordNotion::Weak => "weak",
            RecordNotion::QuantileUniform => "quantile_uniform",
        }
    }
}

/// Record values of independent replications. Ordinary and weak records
/// of a finite stream may stop early; `realized` holds the counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSample {
    pub notion: RecordNotion,
    pub seed: u64,
    pub n_max: usize,
    pub values: Vec<Vec<f64>>,
    pub realized: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub count: usize,
    pub mean: f64,
    pub se: f64,
    /// Empirical quantiles at levels 0.05, 0.25, 0.5, 0.75, 0.95.
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub notion: RecordNotion,
    pub seed: u64,
    pub reps: usize,
    pub rows: Vec<SummaryRow>,
}

impl RecordSample {
    pub fn reps(&self) -> usize {
        self.values.len()
    }

    /// The n-th record (one-based) of every replication that reached it.
    pub fn column(&self, n: usize) -> Vec<f64> {
        self.values
            .iter()
            .filter(|v| v.len() >= n && n > 0)
            .map(|v| v[n - 1])
            .collect()
    }

    /// Mean and standard error of the n-th record over replications that
    /// reached it.
    pub fn mean_se(&self, n: usize) -> (f64, f64) {
        mean_se(&self.column(n))
    }

    pub fn summary(&self) -> RecordSummary {
        let rows = (1..=self.n_max)
            .map(|n| {
                let mut col = self.column(n);
                let (mean, se) = mean_se(&col);
                col.sort_by(f64::total_cmp);
                let q = [0.05, 0.25, 0.5, 0.75, 0.95].map(|p| empirical_quantile(&col, p));
                SummaryRow {
                    n,
                    count: col.len(),
                    mean,
                    se,
                    quantiles: q,
                }
            })
            .collect();
        RecordSummary {
            notion: self.notion,
            seed: self.seed,
            reps: self.reps(),
            rows,
        }
    }

    /// CSV with columns `rep, n, value, notion`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rep", "n", "value", "notion"])?;
        for (r, vals) in self.values.iter().enumerate() {
            for (i, v) in vals.iter().enumerate() {
                out.write_record([
                    r.to_string(),
                    (i + 1).to_string(),
                    format!("{v:?}"),
                    self.notion.as_str().to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Generator for replication `rep`: one ChaCha stream per replication
/// under a common key, so results do not depend on scheduling.
pub(crate) fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn check_sizes(n_max: usize, reps: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::Config("need at least one record per replication".into()));
    }
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    Ok(())
}

/// Records `R_n = H(E_1 + ... + E_n)` of the quantile-of-uniform process.
pub fn simulate_quantile_records(d: &QuantileRep, n_max: usize, reps: usize, seed: u64) -> Result<RecordSample> {
    check_sizes(n_max, reps)?;
    let h = to_h_rep(d);
    let values: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let mut s = 0.0;
            (0..n_max)
                .map(|_| {
                    let e: f64 = rng.sample(Exp1);
                    s += e;
                    h.eval(s)
                })
                .collect()
        })
        .collect();
    Ok(RecordSample {
        notion: RecordNotion::QuantileUniform,
        seed,
        n_max,
        realized: vec![n_max; reps],
        values,
    })
}

/// Scans `stream_len` draws `G(U)` for ordinary or weak records, stopping
/// once `n_max` records are found.
pub fn simulate_stream_records(
    d: &QuantileRep,
    notion: RecordNotion,
    n_max: usize,
    stream_len: usize,
    reps: usize,
    seed: u64,
) -> Result<RecordSample> {
    if notion == RecordNotion::QuantileUniform {
        return Err(Error::Usage(
            "quantile-of-uniform records are simulated by simulate_quantile_records".into(),
        ));
    }
    check_sizes(n_max, reps)?;
    if stream_len == 0 {
        return Err(Error::Config("stream length must be positive".into()));
    }
    let strict = notion == RecordNotion::Ordinary;
    let values: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let mut recs: Vec<f64> = Vec::with_capacity(n_max);
            for _ in 0..stream_len {
                let u: f64 = rng.sample(Open01);
                let x = d.quantile(u);
                let is_record = match recs.last() {
                    None => true,
                    Some(&cur) => {
                        if strict {
                            x > cur
                        } else {
                            x >= cur
                        }
                    }
                };
                if is_record {
                    recs.push(x);
                    if recs.len() == n_max {
                        break;
                    }
                }
            }
            recs
        })
        .collect();
    let realized = values.iter().map(Vec::len).collect();
    Ok(RecordSample {
        notion,
        seed,
        n_max,
        values,
        realized,
    })
}
