//! Command-line front end. Every command computes its whole result before
//! anything is written, so a failure leaves no output file behind.
//!
//! Exit codes: 0 success, 1 malformed input, 2 a mathematical
//! precondition failed (membership, divergence, non-convergence).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::distributions::{log_survival, make_family, to_h_rep, Family, QuantileRep};
use crate::ers::{ers_compute, ers_to_t_moments, stieltjes_example_ers, ErsSeq};
use crate::error::{Error, Result};
use crate::moments::MomentSeq;
use crate::numerics::Tolerance;
use crate::records::{simulate_quantile_records, simulate_stream_records, RecordNotion};
use crate::transform::{phi, phi_inverse, phi_inverse_parts, roundtrip, TDist, TDistSpec};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const MAX_N: usize = 30;
pub const MAX_REPS: usize = 10_000_000;
pub const TOL_ENV: &str = "RECORD_MOMENTS_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Table1,
    Stieltjes,
    Roundtrip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NotionArg {
    QuantileUniform,
    Ordinary,
    Weak,
}

#[derive(Debug, Parser)]
#[command(name = "record-moments", version, about = "Expected record sequences and the record/moment transform")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Absolute and relative quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected record sequence rho_1..rho_n.
    Ers {
        /// JSON object, path to a JSON file, `name` or `name:p1,p2`.
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Forward map to T, or reconstruction from T.
    Transform {
        #[command(subcommand)]
        direction: Direction,
    },
    /// Worked demonstrations.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
    /// Monte Carlo record values.
    Simulate {
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = NotionArg::QuantileUniform)]
        notion: NotionArg,
        /// Length of each i.i.d. stream for ordinary and weak records.
        #[arg(long, default_value_t = 1000)]
        stream_len: usize,
    },
    /// Hankel screening and Carleman diagnostic of moments of T.
    Moments {
        /// Moment list or moment JSON object.
        #[arg(long, conflicts_with_all = ["rho", "dist"])]
        m: Option<String>,
        /// Expected record sequence, as a list or `{"rho": [...]}`.
        #[arg(long, conflicts_with = "dist")]
        rho: Option<String>,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Direction {
    Phi {
        #[arg(long)]
        dist: String,
    },
    Inverse {
        /// JSON object or path to one.
        #[arg(long)]
        t: String,
    },
}

/// Validated settings shared by the commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tol: Tolerance,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Tolerance from `--tol`, else the environment, else the default.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        // The environment is only consulted when the flag is absent.
        let from_env = match (cli.tol, std::env::var(TOL_ENV)) {
            (None, Ok(s)) => Some(
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("{TOL_ENV} is not a number: {s:?}")))?,
            ),
            _ => None,
        };
        let tol = match cli.tol.or(from_env) {
            Some(t) if t > 0.0 && t < 1.0 => Tolerance::default().with_abs(t).with_rel(t),
            Some(t) => return Err(Error::Config(format!("tolerance must lie in (0, 1), got {t}"))),
            None => Tolerance::default(),
        };
        Ok(RunConfig {
            tol,
            seed: cli.seed,
            out: cli.out.clone(),
            format: cli.format,
        })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        Err(Error::Config(format!("--n must lie in 1..={MAX_N}, got {n}")))
    } else {
        Ok(())
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 || reps > MAX_REPS {
        Err(Error::Config(format!("--reps must lie in 1..={MAX_REPS}, got {reps}")))
    } else {
        Ok(())
    }
}

/// Inline JSON when the argument looks like JSON, otherwise a file.
fn json_arg(arg: &str) -> Result<Value> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(serde_json::from_str(arg)?);
    }
    let text = std::fs::read_to_string(Path::new(arg))
        .map_err(|e| Error::Config(format!("cannot read {arg}: {e}")))?;
    Ok(serde_json::from_str(&text)?)
}

/// `--dist` as JSON, a JSON file, a bare family name or `name:p1,p2`.
pub fn parse_dist(arg: &str) -> Result<Family> {
    let t = arg.trim();
    if t.starts_with('{') || Path::new(t).is_file() {
        let fam: Family = serde_json::from_value(json_arg(t)?)?;
        fam.validate()?;
        return Ok(fam);
    }
    let (name, params) = match t.split_once(':') {
        Some((n, p)) => {
            let ps = p
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad parameter {s:?} in {arg:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            (n, ps)
        }
        None => (t, Vec::new()),
    };
    make_family(name, &params)
}

fn build_dist(arg: &str) -> Result<QuantileRep> {
    parse_dist(arg)?.build()
}

fn parse_t(arg: &str) -> Result<TDist> {
    let spec: TDistSpec = serde_json::from_value(json_arg(arg)?)?;
    spec.build()
}

/// What a command produces: JSON always, CSV where a table exists, and a
/// human-readable report for the demonstrations.
struct Output {
    json: Value,
    csv: Option<String>,
    report: Option<String>,
}

fn csv_table<S: AsRef<str>>(header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|s| s.as_ref()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn cmd_ers(dist: &str, n: usize, cfg: &RunConfig) -> Result<Output> {
    check_n(n)?;
    let d = build_dist(dist)?;
    let seq = ers_compute(&to_h_rep(&d), n, &cfg.tol)?;
    let csv = csv_table(
        &["n", "rho", "error"],
        seq.rho
            .iter()
            .zip(&seq.error)
            .enumerate()
            .map(|(i, (r, e))| vec![(i + 1).to_string(), num(*r), num(*e)]),
    )?;
    Ok(Output {
        json: to_json(&seq)?,
        csv: Some(csv),
        report: None,
    })
}

/// Abscissae of the distribution function of T.
fn t_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 10.0).collect()
}

/// Abscissae of reconstructed `H_0`.
fn y_grid() -> Vec<f64> {
    (1..=200).map(|i| i as f64 / 20.0).collect()
}

fn u_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

fn cmd_phi(dist: &str, cfg: &RunConfig) -> Result<Output> {
    let d = build_dist(dist)?;
    let t = phi(&d, &cfg.tol)?;
    let grid = t_grid();
    let cdf: Vec<f64> = grid.par_iter().map(|&x| t.cdf(x)).collect();
    let moments: Vec<f64> = t.moments_cache().map(|m| m[1..].to_vec()).unwrap_or_default();
    let atoms: Vec<[f64; 2]> = t.declared_atoms().iter().map(|a| [a.0, a.1]).collect();
    let csv = csv_table(&["t", "cdf"], grid.iter().zip(&cdf).map(|(x, c)| vec![num(*x), num(*c)]))?;
    Ok(Output {
        json: json!({
            "source": d.label(),
            "t": t.label(),
            "grid": {"t": grid, "cdf": cdf},
            "atoms": atoms,
            "moments": moments,
        }),
        csv: Some(csv),
        report: None,
    })
}

fn cmd_inverse(t_arg: &str, cfg: &RunConfig) -> Result<Output> {
    let t = parse_t(t_arg)?;
    t.validate(&cfg.tol)?;
    let parts = phi_inverse_parts(&t, &cfg.tol)?;
    let h0 = &parts.h0;
    let ys = y_grid();
    let hs: Vec<f64> = ys.par_iter().map(|&y| h0.eval(y)).collect();
    let us = u_grid();
    let xs: Vec<f64> = us.par_iter().map(|&u| h0.eval(log_survival(u))).collect();
    if hs.iter().chain(&xs).any(|v| !v.is_finite()) {
        return Err(Error::non_convergence("reconstruction", "non-finite grid value"));
    }
    let csv = csv_table(&["y", "h0"], ys.iter().zip(&hs).map(|(y, h)| vec![num(*y), num(*h)]))?;
    Ok(Output {
        json: json!({
            "t": t.label(),
            "c_t": parts.c_t,
            "cdf_left_one": parts.cdf_left_one,
            "grid": {"y": ys, "h0": hs},
            "quantile": {"u": us, "x": xs},
        }),
        csv: Some(csv),
        report: None,
    })
}

/// Proportion of `hits` among `total` with its standard error.
fn proportion(hits: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

fn demo_table1(reps: usize, cfg: &RunConfig) -> Result<Output> {
    check_reps(reps)?;
    let d = make_family("bernoulli", &[0.5])?.build()?;
    // A stream of 64 fair bits misses a second record with chance 2^-63.
    let stream = 64;
    let q = simulate_quantile_records(&d, 2, reps, cfg.seed)?;
    let w = simulate_stream_records(&d, RecordNotion::Weak, 2, stream, reps, cfg.seed)?;
    let r = simulate_stream_records(&d, RecordNotion::Ordinary, 2, stream, reps, cfg.seed)?;

    let q2 = q.column(2);
    let (pq, seq) = proportion(q2.iter().filter(|&&v| v == 0.0).count(), q2.len());
    let w2 = w.column(2);
    let (pw, sew) = proportion(w2.iter().filter(|&&v| v == 0.0).count(), w2.len());
    let w_first_zero: Vec<&Vec<f64>> = w.values.iter().filter(|v| v.len() >= 2 && v[0] == 0.0).collect();
    let (pwc, sewc) = proportion(w_first_zero.iter().filter(|v| v[1] == 0.0).count(), w_first_zero.len());
    let r2 = r.column(2);
    let (pr, ser) = proportion(r2.iter().filter(|&&v| v == 1.0).count(), r2.len());
    let (pexists, seexists) = proportion(r2.len(), reps);

    let exact_q = 0.5 - 0.5 * std::f64::consts::LN_2;
    let mut rep = String::new();
    let _ = writeln!(rep, "bernoulli(1/2), {reps} replications, seed {}", cfg.seed);
    let _ = writeln!(rep, "Pr(F^-1(U_2) = 0)        {pq:.5} +- {seq:.5}   exact {exact_q:.5}");
    let _ = writeln!(rep, "Pr(W_2 = 0)              {pw:.5} +- {sew:.5}   exact 0.25000");
    let _ = writeln!(rep, "Pr(W_2 = 0 | W_1 = 0)    {pwc:.5} +- {sewc:.5}   exact 0.50000");
    let _ = writeln!(rep, "Pr(R_2 = 1 | R_2 exists) {pr:.5} +- {ser:.5}   exact 1.00000");
    let _ = writeln!(rep, "Pr(R_2 exists)           {pexists:.5} +- {seexists:.5}   exact 0.50000");
    let json = json!({
        "demo": "table1",
        "reps": reps,
        "seed": cfg.seed,
        "quantile_second_is_zero": {"estimate": pq, "se": seq, "exact": exact_q},
        "weak_second_is_zero": {"estimate": pw, "se": sew, "exact": 0.25},
        "weak_second_is_zero_given_first_zero": {"estimate": pwc, "se": sewc, "exact": 0.5},
        "ordinary_second_is_one": {"estimate": pr, "se": ser, "exact": 1.0},
        "ordinary_second_exists": {"estimate": pexists, "se": seexists, "exact": 0.5},
    });
    Ok(Output {
        json,
        csv: None,
        report: Some(rep),
    })
}

fn demo_stieltjes(n: usize, cfg: &RunConfig) -> Result<Output> {
    check_n(n)?;
    let lambdas = [-1.0, 0.0, 1.0];
    let closed = stieltjes_example_ers(n)?;
    let us = u_grid();
    let mut seqs = Vec::new();
    let mut quantiles = Vec::new();
    for &l in &lambdas {
        let h0 = phi_inverse(&TDist::stieltjes(l)?, &cfg.tol)?;
        seqs.push(ers_compute(&h0, n, &cfg.tol)?.rho);
        quantiles.push(us.par_iter().map(|&u| h0.eval(log_survival(u))).collect::<Vec<f64>>());
    }
    let mut max_diff: f64 = 0.0;
    for a in 0..quantiles.len() {
        for b in a + 1..quantiles.len() {
            for (x, y) in quantiles[a].iter().zip(&quantiles[b]) {
                max_diff = max_diff.max((x - y).abs());
            }
        }
    }
    let mut rep = String::new();
    let _ = writeln!(rep, "{:>3} {:>14} {:>14} {:>14} {:>14}", "n", "lambda=-1", "lambda=0", "lambda=1", "closed form");
    for i in 0..n {
        let _ = writeln!(
            rep,
            "{:>3} {:>14.8} {:>14.8} {:>14.8} {:>14.8}",
            i + 1,
            seqs[0][i],
            seqs[1][i],
            seqs[2][i],
            closed[i]
        );
    }
    let _ = writeln!(rep, "max pairwise quantile difference: {max_diff:.6}");
    Ok(Output {
        json: json!({
            "demo": "stieltjes",
            "lambda": lambdas,
            "rho": seqs,
            "closed_form": closed,
            "quantile": {"u": us, "x": quantiles},
            "max_quantile_difference": max_diff,
        }),
        csv: None,
        report: Some(rep),
    })
}

/// Sources used by the round-trip demonstration.
pub fn roundtrip_battery() -> Result<Vec<QuantileRep>> {
    let e = std::f64::consts::E;
    [
        make_family("exponential", &[1.0])?,
        make_family("log_record", &[])?,
        make_family("two_point", &[-1.0, 1.0 - (-1f64).exp(), e - 1.0])?,
        make_family("lognormal", &[0.0, 1.0])?,
        make_family("uniform", &[0.0, 1.0])?,
        make_family("gumbel", &[0.0, 1.0])?,
    ]
    .iter()
    .map(Family::build)
    .collect()
}

fn demo_roundtrip(cfg: &RunConfig) -> Result<Output> {
    let mut rep = String::new();
    let mut rows = Vec::new();
    for d in roundtrip_battery()? {
        let r = roundtrip(&d, &cfg.tol)?;
        let _ = writeln!(rep, "{:<14} sup distance {:.3e}", r.label, r.sup_distance);
        rows.push(json!({"source": r.label, "sup_distance": r.sup_distance}));
    }
    Ok(Output {
        json: json!({"demo": "roundtrip", "results": rows}),
        csv: None,
        report: Some(rep),
    })
}

fn cmd_simulate(
    dist: &str,
    n: usize,
    reps: usize,
    notion: NotionArg,
    stream_len: usize,
    cfg: &RunConfig,
) -> Result<Output> {
    check_n(n)?;
    check_reps(reps)?;
    let d = build_dist(dist)?;
    let sample = match notion {
        NotionArg::QuantileUniform => simulate_quantile_records(&d, n, reps, cfg.seed)?,
        NotionArg::Ordinary => simulate_stream_records(&d, RecordNotion::Ordinary, n, stream_len, reps, cfg.seed)?,
        NotionArg::Weak => simulate_stream_records(&d, RecordNotion::Weak, n, stream_len, reps, cfg.seed)?,
    };
    let csv = if cfg.format == Format::Csv {
        let mut buf = Vec::new();
        sample.write_csv(&mut buf)?;
        Some(String::from_utf8(buf).expect("csv output is utf-8"))
    } else {
        None
    };
    Ok(Output {
        json: to_json(&sample.summary())?,
        csv,
        report: None,
    })
}

/// Moments from a list, a moment object, an ERS, or a source.
fn cmd_moments(m: Option<&str>, rho: Option<&str>, dist: Option<&str>, n: usize, cfg: &RunConfig) -> Result<Output> {
    let seq = match (m, rho, dist) {
        (Some(m), _, _) => match json_arg(m)? {
            Value::Array(_) => MomentSeq::new(serde_json::from_value(json_arg(m)?)?),
            v => {
                let s: MomentSeq = serde_json::from_value(v)?;
                MomentSeq::new(s.m)
            }
        },
        (_, Some(r), _) => {
            let ers = match json_arg(r)? {
                Value::Array(a) => ErsSeq::new(serde_json::from_value(Value::Array(a))?, ""),
                v => serde_json::from_value(v)?,
            };
            ers_to_t_moments(&ers)?
        }
        (_, _, Some(d)) => {
            check_n(n)?;
            let d = build_dist(d)?;
            ers_to_t_moments(&ers_compute(&to_h_rep(&d), n, &cfg.tol)?)?
        }
        _ => return Err(Error::Usage("moments needs one of --m, --rho or --dist".into())),
    };
    let seq = seq.diagnose()?;
    let csv = csv_table(
        &["n", "m"],
        seq.m.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]),
    )?;
    Ok(Output {
        json: to_json(&seq)?,
        csv: Some(csv),
        report: None,
    })
}

fn run(cli: &Cli) -> Result<Output> {
    let cfg = RunConfig::from_cli(cli)?;
    match &cli.command {
        Command::Ers { dist, n } => cmd_ers(dist, *n, &cfg),
        Command::Transform { direction } => match direction {
            Direction::Phi { dist } => cmd_phi(dist, &cfg),
            Direction::Inverse { t } => cmd_inverse(t, &cfg),
        },
        Command::Demo { name, reps, n } => match name {
            DemoName::Table1 => demo_table1(*reps, &cfg),
            DemoName::Stieltjes => demo_stieltjes(*n, &cfg),
            DemoName::Roundtrip => demo_roundtrip(&cfg),
        },
        Command::Simulate {
            dist,
            n,
            reps,
            notion,
            stream_len,
        } => cmd_simulate(dist, *n, *reps, *notion, *stream_len, &cfg),
        Command::Moments { m, rho, dist, n } => cmd_moments(m.as_deref(), rho.as_deref(), dist.as_deref(), *n, &cfg),
    }
}

/// Serializes the result in the requested format; the report of a
/// demonstration goes to standard output, its JSON to `--out` if given.
fn emit(cli: &Cli, out: Output) -> Result<()> {
    let body = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json)?;
            s.push('\n');
            s
        }
        Format::Csv => out
            .csv
            .ok_or_else(|| Error::Usage("this command has no CSV form; use --format json".into()))?,
    };
    match (&out.report, &cli.out) {
        (Some(rep), Some(path)) => {
            std::fs::write(path, body)?;
            print!("{rep}");
        }
        (Some(rep), None) => print!("{rep}"),
        (None, Some(path)) => std::fs::write(path, body)?,
        (None, None) => print!("{body}"),
    }
    Ok(())
}

/// Runs the program on `args` (including the program name) and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli).and_then(|out| emit(&cli, out)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_argument_forms() {
        assert_eq!(parse_dist("exponential").unwrap(), Family::Exponential { rate: 1.0 });
        assert_eq!(parse_dist("gumbel:1,2").unwrap(), Family::Gumbel { mu: 1.0, beta: 2.0 });
        assert_eq!(
            parse_dist(r#"{"kind":"exponential","rate":3}"#).unwrap(),
            Family::Exponential { rate: 3.0 }
        );
        assert!(parse_dist("gumbel:x").unwrap_err().is_input_error());
        assert!(parse_dist(r#"{"kind":"exponential","speed":3}"#).unwrap_err().is_input_error());
    }

    #[test]
    fn t_argument_forms() {
        let t = parse_t(r#"{"kind":"density","family":"gamma","shape":2,"rate":1}"#).unwrap();
        assert!((t.cdf(1.0) - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-12);
        let t = parse_t(r#"{"kind":"stieltjes_lambda","lambda":0.5}"#).unwrap();
        assert_eq!(t.declared_atoms().len(), 0);
        let t = parse_t(
            r#"{"kind":"mixture","components":[{"weight":0.5,"dist":{"kind":"atoms","atoms":[[1,1]]}},
                {"weight":0.5,"dist":{"kind":"density","family":"gamma","shape":2}}]}"#,
        )
        .unwrap();
        assert!((t.cdf(1.0) - t.cdf_left(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn limits_are_input_errors() {
        assert!(check_n(31).unwrap_err().is_input_error());
        assert!(check_reps(10_000_001).unwrap_err().is_input_error());
        assert!(check_n(30).is_ok() && check_reps(10_000_000).is_ok());
    }
}
