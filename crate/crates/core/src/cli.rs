//! Command-line front end. Results go to `out`, diagnostics to `err`.
//!
//! Exit codes: 0 success, 2 parse or usage error, 3 backend error, 4 I/O error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{self, BenchConfig, Benchmark};
use crate::circuit::Circuit;
use crate::error::Error;
use crate::numerics::PrecisionConfig;
use crate::state::{PartialAssignment, Registry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "qsym", version, about = "Decision-diagram quantum circuit simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a circuit file and answer queries on the final state.
    Run(RunArgs),
    /// Time the benchmark suites.
    Bench(BenchArgs),
    /// List registered backends.
    Backends,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub backend: String,
    #[arg(long)]
    pub circuit: PathBuf,
    /// Partial assignment `q=b,q=b,...`; repeatable.
    #[arg(long = "prob", value_name = "SPEC")]
    pub probs: Vec<String>,
    /// Count outcomes whose probability is `p`.
    #[arg(long, value_name = "P")]
    pub counts: Option<f64>,
    #[arg(long, value_name = "T", requires = "counts")]
    pub counts_tol: Option<f64>,
    /// Draw `k` samples.
    #[arg(long, value_name = "K", requires = "seed")]
    pub measure: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "P")]
    pub precision_bits: Option<u32>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// ghz, bv, dj, simon, qft, grover or all
    #[arg(long, value_delimiter = ',', required = true)]
    pub suite: Vec<String>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub backend: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub qubits: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 900)]
    pub budget_secs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run table cells concurrently.
    #[arg(long)]
    pub parallel: bool,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Argument(_) => EXIT_USAGE,
        Error::Io(_) => EXIT_IO,
        Error::Config(_) | Error::Resource(_) | Error::UnknownBackend(_) => EXIT_BACKEND,
    }
}

/// Compact decimal for query answers.
pub fn format_prob(p: f64) -> String {
    let s = format!("{p:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Parses `args` (including the program name) and executes.
pub fn run_cli<I, T>(args: I, registry: fn() -> Registry, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let r = match cli.command {
        Command::Run(a) => cmd_run(&a, &registry(), out),
        Command::Bench(a) => cmd_bench(&a, registry, out, err),
        Command::Backends => writeln!(out, "{}", registry().names().join(" ")).map_err(Error::from),
    };
    match r {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_run(a: &RunArgs, registry: &Registry, out: &mut dyn Write) -> Result<(), Error> {
    let queries = a
        .probs
        .iter()
        .map(|s| {
            s.parse::<PartialAssignment>()
                .map(|m| (s.as_str(), m))
                .map_err(|e| Error::Argument(format!("--prob {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let precision = match a.precision_bits {
        Some(b) => PrecisionConfig::with_mantissa_bits(b)?,
        None => PrecisionConfig::default(),
    };
    registry.resolve(&a.backend)?;
    let bytes = fs::read(&a.circuit)?;
    let circuit = Circuit::parse_bytes(&bytes)?;
    let qs = circuit.run_on(registry, &a.backend, precision)?;
    for (text, m) in &queries {
        let p = qs.prob(m)?;
        writeln!(out, "prob {text} = {}", format_prob(p))?;
    }
    if let Some(p) = a.counts {
        let c = match a.counts_tol {
            Some(t) => qs.measurement_counts_with_tol(p, t)?,
            None => qs.measurement_counts(p)?,
        };
        writeln!(out, "counts {p} = {c}")?;
    }
    if let (Some(k), Some(seed)) = (a.measure, a.seed) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..k {
            writeln!(out, "measure {}", qs.measure(&mut rng))?;
        }
    }
    Ok(())
}

fn parse_suite(names: &[String]) -> Result<Vec<Benchmark>, Error> {
    let mut suite = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            suite.extend(Benchmark::ALL);
        } else {
            suite.push(n.parse()?);
        }
    }
    suite.dedup();
    Ok(suite)
}

fn cmd_bench(a: &BenchArgs, registry: fn() -> Registry, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let suite = parse_suite(&a.suite)?;
    let known = registry();
    for b in &a.backend {
        known.resolve(b)?;
    }
    // fail on an unwritable path before spending the budget
    let mut file = match &a.out {
        Some(p) => Some(fs::File::create(p)?),
        None => None,
    };
    let config = BenchConfig {
        suite,
        backends: a.backend.iter().map(|s| s.to_ascii_lowercase()).collect(),
        qubits: a.qubits.clone(),
        runs: a.runs,
        budget: Duration::from_secs(a.budget_secs),
        seed: a.seed,
        parallel: a.parallel,
        registry,
    };
    let reports = bench::bench_run(&config);
    for r in &reports {
        if let Some(e) = &r.error {
            writeln!(err, "{} {} on {}: {e}", r.benchmark, r.qubits, r.backend)?;
        }
    }
    if let Some(f) = file.as_mut() {
        bench::write_csv(&reports, f)?;
    }
    write!(out, "{}", bench::format_table(&reports))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prob_formatting() {
        assert_eq!(format_prob(0.5000000000000001), "0.5");
        assert_eq!(format_prob(1.0), "1");
        assert_eq!(format_prob(0.0), "0");
        assert_eq!(format_prob(1.0 / 6.0), "0.166666666667");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Argument("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::UnknownBackend("x".into())), EXIT_BACKEND);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
    }
}
