// A scaled-down benchmark table: every suite on every backend at small sizes.

use std::time::Duration;

use qsym::bench::circuits::Benchmark;
use qsym::bench::{bench_run, format_table, write_csv, BenchConfig};

fn main() -> std::io::Result<()> {
    let config = BenchConfig {
        suite: Benchmark::ALL.to_vec(),
        backends: vec!["cflobdd".into(), "bdd".into(), "wbdd".into()],
        qubits: vec![4, 8, 12],
        runs: 3,
        budget: Duration::from_secs(30),
        seed: 1,
        ..BenchConfig::default()
    };
    let reports = bench_run(&config);
    print!("{}", format_table(&reports));
    println!();
    write_csv(&reports, std::io::stdout())
}
