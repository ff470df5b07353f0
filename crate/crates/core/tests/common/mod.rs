#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsym::bench::circuits::widen;
use qsym::dense::DenseState;
use qsym::{Circuit, GateApplication, GateKind, PrecisionConfig, QuantumState, Registry};

pub const SYMBOLIC: [&str; 3] = ["bdd", "wbdd", "cflobdd"];

/// Seeded random circuit on `n >= 3` qubits drawing uniformly from all kinds.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..depth {
        let kind = GateKind::ALL[rng.random_range(0..GateKind::ALL.len())];
        let mut qs: Vec<usize> = (0..n).collect();
        for i in 0..kind.arity() {
            let j = rng.random_range(i..n);
            qs.swap(i, j);
        }
        qs.truncate(kind.arity());
        let angle = kind.takes_angle().then(|| rng.random_range(-2.0..2.0));
        c.push(GateApplication::new(kind, qs, angle)).unwrap();
    }
    c
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense_run(c: &Circuit) -> DenseState {
    let mut d = DenseState::new(c.num_qubits()).unwrap();
    for g in c.ops() {
        d.apply(g);
    }
    d
}

/// Qubit count a backend can hold for an `n`-qubit circuit.
pub fn width_for(backend: &str, n: usize) -> usize {
    if backend == "cflobdd" { n.next_power_of_two() } else { n }
}

/// Runs `c` on `backend`, padding with idle qubits where needed.
pub fn run_on(backend: &str, c: &Circuit, precision: PrecisionConfig) -> QuantumState {
    let c = widen(c, width_for(backend, c.num_qubits())).unwrap();
    c.run_on(&Registry::default(), backend, precision).unwrap()
}

/// Little-endian-free helper: bits of `i` over `n` qubits, qubit 0 first.
pub fn bits(i: usize, n: usize) -> Vec<bool> {
    (0..n).map(|k| (i >> (n - 1 - k)) & 1 == 1).collect()
}

pub fn to_c(a: &qsym::Amplitude) -> Complex64 {
    a.to_complex64()
}
