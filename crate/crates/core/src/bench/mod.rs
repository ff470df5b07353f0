//! Timing harness over the benchmark generators.
//!
//! Every run executes on its own thread (states are single-threaded, so the
//! whole simulation lives there) and is abandoned when it exceeds the budget.
//! The run checks a cancel flag between gates, so an abandoned run stops at
//! the next gate boundary.

pub mod circuits;

use std::fmt::Write as _;
use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use circuits::{Benchmark, DjOracle, Instance, OracleSpec, Secret};

use crate::error::{Error, Result};
use crate::numerics::{PrecisionConfig, DEFAULT_MANTISSA_BITS};
use crate::state::{QuantumState, Registry};

/// Stack for run threads; the decision-diagram recursions go one frame per variable.
pub const RUN_STACK_BYTES: usize = 1 << 29;

/// Number of measurement samples a Simon run draws.
pub const SIMON_SAMPLES: usize = 100;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub suite: Vec<Benchmark>,
    pub backends: Vec<String>,
    pub qubits: Vec<usize>,
    pub runs: usize,
    pub budget: Duration,
    pub seed: u64,
    /// Run cells concurrently. Off by default so timings are not perturbed.
    pub parallel: bool,
    /// Builds the backend table inside each run thread.
    pub registry: fn() -> Registry,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            suite: Benchmark::ALL.to_vec(),
            backends: vec!["cflobdd".into(), "bdd".into(), "wbdd".into()],
            qubits: vec![4, 8, 16],
            runs: 50,
            budget: Duration::from_secs(900),
            seed: 0,
            parallel: false,
            registry: Registry::default,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub benchmark: Benchmark,
    pub qubits: usize,
    pub backend: String,
    /// Mean over completed runs; `None` when none completed.
    pub mean_seconds: Option<f64>,
    pub verified_runs: usize,
    pub total_runs: usize,
    pub timeout: bool,
    pub peak_nodes: usize,
    pub seed: u64,
    pub ancillas: usize,
    /// Mantissa bits the cell ran at; see [`precision_bits`].
    pub precision_bits: u32,
    /// Set when a run failed with an error rather than finishing or timing out.
    pub error: Option<String>,
}

/// Outcome of one run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub seconds: f64,
    pub verified: bool,
    pub peak_nodes: usize,
    pub ancillas: usize,
}

/// Mantissa bits used for a benchmark: 53 unless the uniform-superposition
/// amplitudes `2^{-w/2}` would approach the coalescing grid.
pub fn precision_bits(benchmark: Benchmark, qubits: usize) -> u32 {
    let width = match benchmark {
        Benchmark::Ghz => return 53,
        Benchmark::Bv | Benchmark::Dj => qubits - 1,
        Benchmark::Simon | Benchmark::Qft | Benchmark::Grover => qubits,
    };
    let need = (width / 2 + 40) as u32;
    if need <= 53 {
        53
    } else {
        need.next_power_of_two().max(128)
    }
}

/// Seed of run `run` in a cell; a pure function of its arguments.
pub fn run_seed(seed: u64, benchmark: Benchmark, qubits: usize, run: usize) -> u64 {
    let mut x = seed ^ (benchmark as u64) << 56 ^ (qubits as u64) << 24 ^ run as u64;
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Executes one instance on `backend`, checking `cancel` between gates.
pub fn execute(
    registry: &Registry,
    backend: &str,
    spec: &OracleSpec,
    cancel: &AtomicBool,
) -> Result<RunOutcome> {
    let inst = circuits::instance(spec)?;
    let mut circuit = inst.circuit.clone();
    if backend.eq_ignore_ascii_case("cflobdd") && !circuit.num_qubits().is_power_of_two() {
        circuit = circuits::widen(&circuit, circuit.num_qubits().next_power_of_two())?;
    }
    let precision = PrecisionConfig::with_mantissa_bits(precision_bits(spec.benchmark, spec.qubits))?;
    let mut elapsed = Duration::ZERO;
    let t = Instant::now();
    let mut qs = QuantumState::from_registry(registry, backend, circuit.num_qubits(), precision)?;
    elapsed += t.elapsed();
    let mut peak = qs.node_count();
    for g in circuit.ops() {
        if cancel.load(Ordering::Relaxed) {
            return Err(Error::Resource("cancelled".into()));
        }
        let t = Instant::now();
        qs.apply_mut(g)?;
        elapsed += t.elapsed();
        peak = peak.max(qs.node_count());
    }
    let t = Instant::now();
    let verified = verify(&qs, spec)?;
    elapsed += t.elapsed();
    Ok(RunOutcome {
        seconds: elapsed.as_secs_f64(),
        verified,
        peak_nodes: peak,
        ancillas: inst.ancillas + circuit.num_qubits() - inst.circuit.num_qubits(),
    })
}

/// Runs the benchmark's verifier on a final state.
pub fn verify(qs: &QuantumState, spec: &OracleSpec) -> Result<bool> {
    match spec.benchmark {
        Benchmark::Ghz => circuits::verify_ghz(qs, spec.qubits),
        Benchmark::Bv => circuits::verify_bv(qs, spec),
        Benchmark::Dj => circuits::verify_dj(qs, spec),
        Benchmark::Grover => circuits::verify_grover(qs, spec),
        Benchmark::Simon => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let samples: Vec<_> = (0..SIMON_SAMPLES).map(|_| qs.measure(&mut rng)).collect();
            Ok(circuits::verify_simon(&samples, spec))
        }
        Benchmark::Qft => {
            let n = spec.qubits;
            let full = if n <= 10 { 1u128 << n } else { 0 };
            let ks: Vec<u128> = if full > 0 {
                (0..full).collect()
            } else {
                use rand::Rng;
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
                let mask = if n >= 128 { u128::MAX } else { (1u128 << n) - 1 };
                std::iter::once(0).chain((0..32).map(|_| rng.random::<u128>() & mask)).collect()
            };
            circuits::verify_qft_at(qs, spec, &ks)
        }
    }
}

enum RunResult {
    Done(Result<RunOutcome>),
    TimedOut,
}

fn run_with_budget(
    registry: fn() -> Registry,
    backend: String,
    spec: OracleSpec,
    budget: Duration,
) -> RunResult {
    let cancel = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let flag = Arc::clone(&cancel);
    let spawned = thread::Builder::new()
        .name(format!("{}-{}-{}", spec.benchmark, spec.qubits, backend))
        .stack_size(RUN_STACK_BYTES)
        .spawn(move || {
            let r = execute(&registry(), &backend, &spec, &flag);
            let _ = tx.send(r);
        });
    let handle = match spawned {
        Ok(h) => h,
        Err(e) => return RunResult::Done(Err(Error::Io(e))),
    };
    match rx.recv_timeout(budget) {
        Ok(r) => {
            let _ = handle.join();
            RunResult::Done(r)
        }
        Err(_) => {
            cancel.store(true, Ordering::Relaxed);
            // the thread is detached; it exits at its next gate boundary
            RunResult::TimedOut
        }
    }
}

/// One table cell: `runs` fresh oracles of `benchmark` at `qubits` on `backend`.
pub fn run_cell(
    config: &BenchConfig,
    benchmark: Benchmark,
    qubits: usize,
    backend: &str,
) -> BenchReport {
    let mut report = BenchReport {
        benchmark,
        qubits,
        backend: backend.to_ascii_lowercase(),
        mean_seconds: None,
        verified_runs: 0,
        total_runs: config.runs,
        timeout: false,
        peak_nodes: 0,
        seed: config.seed,
        ancillas: 0,
        precision_bits: precision_bits(benchmark, qubits),
        error: None,
    };
    let mut times = Vec::new();
    for run in 0..config.runs {
        let spec = match OracleSpec::generate(benchmark, qubits, run_seed(config.seed, benchmark, qubits, run)) {
            Ok(s) => s,
            Err(e) => {
                report.error = Some(e.to_string());
                break;
            }
        };
        match run_with_budget(config.registry, backend.to_string(), spec, config.budget) {
            RunResult::TimedOut => {
                report.timeout = true;
                break;
            }
            RunResult::Done(Err(e)) => {
                report.error = Some(e.to_string());
                break;
            }
            RunResult::Done(Ok(o)) => {
                times.push(o.seconds);
                report.verified_runs += o.verified as usize;
                report.peak_nodes = report.peak_nodes.max(o.peak_nodes);
                report.ancillas = o.ancillas;
            }
        }
    }
    if !times.is_empty() {
        report.mean_seconds = Some(times.iter().sum::<f64>() / times.len() as f64);
    }
    report
}

/// Every (benchmark, qubits, backend) cell of the configuration, in that order.
pub fn bench_run(config: &BenchConfig) -> Vec<BenchReport> {
    let mut cells = Vec::new();
    for &b in &config.suite {
        for &n in &config.qubits {
            for backend in &config.backends {
                cells.push((b, n, backend.clone()));
            }
        }
    }
    if !config.parallel {
        return cells
            .iter()
            .map(|(b, n, be)| run_cell(config, *b, *n, be))
            .collect();
    }
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<Option<BenchReport>> = vec![None; cells.len()];
    let slots = std::sync::Mutex::new(&mut out);
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((b, n, be)) = cells.get(i) else { break };
                let r = run_cell(config, *b, *n, be);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.expect("every cell ran")).collect()
}

pub const CSV_HEADER: &str = "benchmark,qubits,backend,mean_seconds,verified_runs,total_runs,timeout,peak_nodes,seed";

pub fn write_csv(reports: &[BenchReport], mut w: impl io::Write) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        let mean = r.mean_seconds.map_or(String::new(), |s| format!("{s:.6}"));
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.benchmark, r.qubits, r.backend, mean, r.verified_runs, r.total_runs, r.timeout, r.peak_nodes, r.seed
        )?;
    }
    Ok(())
}

fn cell_text(r: &BenchReport) -> String {
    if r.timeout {
        return "Timeout".into();
    }
    if r.error.is_some() {
        return "Error".into();
    }
    let mark = if r.precision_bits > DEFAULT_MANTISSA_BITS { "*" } else { "" };
    match r.mean_seconds {
        Some(s) if r.verified_runs == r.total_runs => format!("{s:.3}{mark}"),
        Some(s) => format!("{s:.3}{mark} ({}/{} ok)", r.verified_runs, r.total_runs),
        None => "-".into(),
    }
}

/// Rows per (benchmark, qubits), one column per backend.
pub fn format_table(reports: &[BenchReport]) -> String {
    let mut backends: Vec<&str> = Vec::new();
    let mut rows: Vec<(Benchmark, usize)> = Vec::new();
    for r in reports {
        if !backends.contains(&r.backend.as_str()) {
            backends.push(&r.backend);
        }
        if !rows.contains(&(r.benchmark, r.qubits)) {
            rows.push((r.benchmark, r.qubits));
        }
    }
    let mut grid: Vec<Vec<String>> = vec![std::iter::once("Benchmark".to_string())
        .chain(std::iter::once("#Qubits".to_string()))
        .chain(backends.iter().map(|b| b.to_ascii_uppercase()))
        .collect()];
    for &(b, n) in &rows {
        let mut line = vec![b.name().to_ascii_uppercase(), n.to_string()];
        for be in &backends {
            let cell = reports
                .iter()
                .find(|r| r.benchmark == b && r.qubits == n && r.backend == *be)
                .map_or("-".into(), cell_text);
            line.push(cell);
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        }
    }
    for &(b, n) in &rows {
        let bits = precision_bits(b, n);
        if bits > DEFAULT_MANTISSA_BITS {
            let _ = writeln!(out, "* {} {n}: {bits} mantissa bits", b.name().to_ascii_uppercase());
        }
    }
    out
}
