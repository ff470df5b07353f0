use std::path::PathBuf;
use std::process::Command;
use std::rc::Rc;

use qsym::cli::{run_cli, EXIT_BACKEND, EXIT_IO, EXIT_OK, EXIT_USAGE};
use qsym::{Backend, PrecisionConfig, Registry, StateHandle};

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn cli(args: &[&str]) -> (i32, String, String) {
    cli_with(args, Registry::default)
}

fn cli_with(args: &[&str], registry: fn() -> Registry) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(std::iter::once("qsym").chain(args.iter().copied()), registry, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const BELL: &str = "qubits 2\nh 0\ncx 0 1\n";

#[test]
fn run_answers_prob_and_counts() {
    let path = scratch("bell.qc", BELL);
    let (code, out, err) = cli(&[
        "run", "--backend", "wbdd", "--circuit", path.to_str().unwrap(),
        "--prob", "0=1,1=1", "--prob", "0=1,1=0", "--counts", "0.5",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out, "prob 0=1,1=1 = 0.5\nprob 0=1,1=0 = 0\ncounts 0.5 = 2\n");
}

#[test]
fn measure_stays_in_bell_support() {
    let path = scratch("bell-measure.qc", BELL);
    for backend in ["dense", "bdd", "wbdd", "cflobdd"] {
        let (code, out, _) = cli(&[
            "run", "--backend", backend, "--circuit", path.to_str().unwrap(), "--measure", "4", "--seed", "7",
        ]);
        assert_eq!(code, EXIT_OK);
        let draws: Vec<&str> = out.lines().map(|l| l.strip_prefix("measure ").unwrap()).collect();
        assert_eq!(draws.len(), 4);
        assert!(draws.iter().all(|d| *d == "00" || *d == "11"), "{backend}: {draws:?}");
    }
}

#[test]
fn ghz_file_on_cflobdd() {
    let n = 256;
    let mut text = format!("qubits {n}\nh 0\n");
    for i in 1..n {
        text.push_str(&format!("cx 0 {i}\n"));
    }
    let path = scratch("ghz256.qc", &text);
    let spec = (0..n).map(|i| format!("{i}=1")).collect::<Vec<_>>().join(",");
    let (code, out, _) = cli(&["run", "--backend", "cflobdd", "--circuit", path.to_str().unwrap(), "--prob", &spec]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, format!("prob {spec} = 0.5\n"));
}

#[test]
fn unknown_mnemonic_exits_2_with_line() {
    let path = scratch("bad.qc", "qubits 2\nh 0\nfoo 1\n");
    let (code, out, err) = cli(&["run", "--backend", "bdd", "--circuit", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty());
    assert!(err.contains("unknown mnemonic") && err.contains("line 3"), "{err}");
}

#[test]
fn malformed_prob_names_the_token() {
    let path = scratch("bell-prob.qc", BELL);
    let (code, _, err) = cli(&["run", "--backend", "bdd", "--circuit", path.to_str().unwrap(), "--prob", "0=7"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("0=7"), "{err}");
}

#[test]
fn backend_errors_exit_3() {
    let path = scratch("three.qc", "qubits 3\nh 0\n");
    let (code, _, _) = cli(&["run", "--backend", "zdd", "--circuit", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_BACKEND);
    // cflobdd needs a power-of-two register
    let (code, _, err) = cli(&["run", "--backend", "cflobdd", "--circuit", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_BACKEND, "{err}");
}

#[test]
fn missing_circuit_file_is_io() {
    let (code, _, _) = cli(&["run", "--backend", "bdd", "--circuit", "/nonexistent/x.qc"]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn lists_default_backends() {
    let (code, out, _) = cli(&["backends"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "bdd wbdd cflobdd dense\n");
}

struct Stub;

impl Backend for Stub {
    fn name(&self) -> &str {
        "stub"
    }

    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> qsym::Result<Box<dyn StateHandle>> {
        qsym::dense::DenseBackend.new_state(n, precision)
    }
}

fn with_stub() -> Registry {
    let mut r = Registry::empty_with_dense();
    r.register(Rc::new(Stub));
    r
}

#[test]
fn lists_registered_stub() {
    let (_, out, _) = cli_with(&["backends"], with_stub);
    assert_eq!(out, "dense stub\n");
    let (_, out, _) = cli_with(&["backends"], Registry::empty_with_dense);
    assert_eq!(out, "dense\n");
}

fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[3] = "";
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_writes_verified_rows() {
    let out_path = scratch("ghz.csv", "");
    let (code, table, err) = cli(&[
        "bench", "--suite", "ghz", "--backend", "cflobdd", "--qubits", "8,64,1024", "--runs", "5",
        "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(table.contains("CFLOBDD"), "{table}");
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], qsym::bench::CSV_HEADER);
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!((f[4], f[5], f[6]), ("5", "5", "false"), "{r}");
    }
}

#[test]
fn bench_all_suites_on_dense_is_deterministic() {
    let run = |name: &str| {
        let p = scratch(name, "");
        let (code, _, err) = cli(&[
            "bench", "--suite", "all", "--backend", "dense", "--qubits", "4", "--runs", "1", "--seed", "11",
            "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        std::fs::read_to_string(p).unwrap()
    };
    let a = run("all-a.csv");
    let rows: Vec<&str> = a.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.split(',').nth(4) == Some("1")), "{a}");
    assert_eq!(strip_timing(&a), strip_timing(&run("all-b.csv")));
}

#[test]
fn bench_unwritable_output_exits_4() {
    let (code, _, _) = cli(&[
        "bench", "--suite", "ghz", "--backend", "bdd", "--qubits", "4", "--runs", "1",
        "--out", "/nonexistent-dir/out.csv",
    ]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn binary_end_to_end() {
    let path = scratch("bin-bell.qc", BELL);
    let bin = env!("CARGO_BIN_EXE_qsym");
    let out = Command::new(bin)
        .args(["run", "--backend", "bdd", "--circuit", path.to_str().unwrap(), "--prob", "0=0,1=0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "prob 0=0,1=0 = 0.5\n");

    let bad = scratch("bin-bad.qc", "qubits 2\nh 5\n");
    let out = Command::new(bin).args(["run", "--backend", "bdd", "--circuit", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qubit index out of range (5 >= 2), line 2"));
}
