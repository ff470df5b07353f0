//! Benchmark circuit generators, seeded oracles and verifiers.
//!
//! Qubit layouts:
//! * GHZ, QFT: `n` qubits.
//! * BV, DJ: data qubits `0..n-1`, ancilla `n-1`.
//! * Simon: data `0..n`, output `n..2n`.
//! * Grover: register `0..n`, then `n-2` ancillas for the ccx cascade.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gate::GateApplication as G;
use crate::state::{BitString, PartialAssignment, QuantumState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    Ghz,
    Bv,
    Dj,
    Simon,
    Qft,
    Grover,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] = [
        Benchmark::Ghz,
        Benchmark::Bv,
        Benchmark::Dj,
        Benchmark::Simon,
        Benchmark::Qft,
        Benchmark::Grover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ghz => "ghz",
            Benchmark::Bv => "bv",
            Benchmark::Dj => "dj",
            Benchmark::Simon => "simon",
            Benchmark::Qft => "qft",
            Benchmark::Grover => "grover",
        }
    }

    /// Smallest register width the generator accepts.
    pub fn min_qubits(self) -> usize {
        match self {
            Benchmark::Ghz | Benchmark::Bv | Benchmark::Dj | Benchmark::Grover => 2,
            Benchmark::Simon | Benchmark::Qft => 1,
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown benchmark suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DjOracle {
    /// `f(x) = c`.
    Constant(bool),
    /// `f(x) = r . x` for nonzero `r`.
    Balanced(Vec<bool>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Secret {
    None,
    /// BV hidden string over the data qubits.
    Hidden(Vec<bool>),
    Dj(DjOracle),
    /// Simon period, nonzero.
    Period(Vec<bool>),
    /// Grover marked register value.
    Marked(Vec<bool>),
    /// QFT basis-state input.
    Input(Vec<bool>),
}

/// The randomized part of a benchmark instance and the seed that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    pub benchmark: Benchmark,
    pub qubits: usize,
    pub seed: u64,
    pub secret: Secret,
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

fn random_nonzero(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    loop {
        let v = random_bits(rng, n);
        if v.iter().any(|&b| b) {
            return v;
        }
    }
}

impl OracleSpec {
    /// Pure function of `(benchmark, qubits, seed)`.
    pub fn generate(benchmark: Benchmark, qubits: usize, seed: u64) -> Result<Self> {
        if qubits < benchmark.min_qubits() {
            return Err(Error::Argument(format!(
                "{benchmark} needs at least {} qubits, got {qubits}",
                benchmark.min_qubits()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let secret = match benchmark {
            Benchmark::Ghz => Secret::None,
            Benchmark::Bv => Secret::Hidden(random_bits(&mut rng, qubits - 1)),
            Benchmark::Dj => Secret::Dj(if rng.random::<bool>() {
                DjOracle::Constant(rng.random())
            } else {
                DjOracle::Balanced(random_nonzero(&mut rng, qubits - 1))
            }),
            Benchmark::Simon => Secret::Period(random_nonzero(&mut rng, qubits)),
            Benchmark::Qft => Secret::Input(random_bits(&mut rng, qubits)),
            Benchmark::Grover => Secret::Marked(random_bits(&mut rng, qubits)),
        };
        Ok(OracleSpec { benchmark, qubits, seed, secret })
    }

    pub fn with_secret(benchmark: Benchmark, secret: Secret) -> Result<Self> {
        let qubits = match &secret {
            Secret::None => return Err(Error::Argument("a secret is required".into())),
            Secret::Hidden(s) => s.len() + 1,
            Secret::Dj(DjOracle::Balanced(r)) => {
                if !r.iter().any(|&b| b) {
                    return Err(Error::Argument("a balanced DJ oracle needs r != 0".into()));
                }
                r.len() + 1
            }
            Secret::Dj(DjOracle::Constant(_)) => {
                return Err(Error::Argument("use dj_constant for constant oracles".into()))
            }
            Secret::Period(s) => {
                if !s.iter().any(|&b| b) {
                    return Err(Error::Argument("the Simon period must be nonzero".into()));
                }
                s.len()
            }
            Secret::Marked(m) | Secret::Input(m) => m.len(),
        };
        Ok(OracleSpec { benchmark, qubits, seed: 0, secret })
    }

    pub fn dj_constant(qubits: usize, value: bool) -> Self {
        OracleSpec {
            benchmark: Benchmark::Dj,
            qubits,
            seed: 0,
            secret: Secret::Dj(DjOracle::Constant(value)),
        }
    }
}

/// A generated circuit plus how its qubits split into register and ancillas.
#[derive(Clone, Debug)]
pub struct Instance {
    pub circuit: Circuit,
    pub oracle: OracleSpec,
    pub register: usize,
    pub ancillas: usize,
}

fn bits_of(spec: &OracleSpec) -> &[bool] {
    match &spec.secret {
        Secret::Hidden(b) | Secret::Period(b) | Secret::Marked(b) | Secret::Input(b) => b,
        Secret::Dj(DjOracle::Balanced(r)) => r,
        Secret::Dj(DjOracle::Constant(_)) | Secret::None => &[],
    }
}

pub fn ghz(n: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n);
    c.push(G::h(0))?;
    for i in 1..n {
        c.push(G::cx(0, i))?;
    }
    Ok(c)
}

pub fn bv(spec: &OracleSpec) -> Result<Circuit> {
    let n = spec.qubits;
    let anc = n - 1;
    let mut c = Circuit::new(n);
    c.push(G::x(anc))?;
    for q in 0..n {
        c.push(G::h(q))?;
    }
    for (i, &b) in bits_of(spec).iter().enumerate() {
        if b {
            c.push(G::cx(i, anc))?;
        }
    }
    for q in 0..anc {
        c.push(G::h(q))?;
    }
    Ok(c)
}

pub fn dj(spec: &OracleSpec) -> Result<Circuit> {
    let n = spec.qubits;
    let anc = n - 1;
    let mut c = Circuit::new(n);
    c.push(G::x(anc))?;
    for q in 0..n {
        c.push(G::h(q))?;
    }
    match &spec.secret {
        Secret::Dj(DjOracle::Constant(true)) => {
            c.push(G::x(anc))?;
        }
        Secret::Dj(DjOracle::Constant(false)) => {}
        Secret::Dj(DjOracle::Balanced(r)) => {
            for (i, &b) in r.iter().enumerate() {
                if b {
                    c.push(G::cx(i, anc))?;
                }
            }
        }
        other => return Err(Error::Argument(format!("not a DJ oracle: {other:?}"))),
    }
    for q in 0..anc {
        c.push(G::h(q))?;
    }
    Ok(c)
}

/// `f(x) = f(x ^ s)`: copy `x` to the output, then xor `s` in whenever
/// `x_j = 1` for the first set bit `j` of `s`.
pub fn simon(spec: &OracleSpec) -> Result<Circuit> {
    let n = spec.qubits;
    let s = bits_of(spec);
    let j = s
        .iter()
        .position(|&b| b)
        .ok_or_else(|| Error::Argument("the Simon period must be nonzero".into()))?;
    let mut c = Circuit::new(2 * n);
    for q in 0..n {
        c.push(G::h(q))?;
    }
    for q in 0..n {
        c.push(G::cx(q, n + q))?;
    }
    for (i, &b) in s.iter().enumerate() {
        if b {
            c.push(G::cx(j, n + i))?;
        }
    }
    for q in 0..n {
        c.push(G::h(q))?;
    }
    Ok(c)
}

/// QFT on `n` qubits without input preparation.
pub fn qft(n: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n);
    for j in 0..n {
        c.push(G::h(j))?;
        for k in j + 1..n {
            c.push(G::cp(k, j, 0.5f64.powi((k - j) as i32)))?;
        }
    }
    for i in 0..n / 2 {
        c.push(G::swap(i, n - 1 - i))?;
    }
    Ok(c)
}

/// `x` gates preparing the QFT input, then the QFT.
pub fn qft_on_input(spec: &OracleSpec) -> Result<Circuit> {
    let n = spec.qubits;
    let mut c = Circuit::new(n);
    for (q, &b) in bits_of(spec).iter().enumerate() {
        if b {
            c.push(G::x(q))?;
        }
    }
    Ok(c.then(&qft(n)?))
}

/// Grover iterations for an `n`-qubit register: `ceil(pi sqrt(N) / 4)` when
/// that count still succeeds with probability at least 0.9, otherwise the
/// optimal `floor(pi / (4 theta))`.
pub fn grover_iterations(n: usize) -> usize {
    let big_n = 2f64.powi(n as i32);
    let theta = (1.0 / big_n.sqrt()).asin();
    let ceil = (PI * big_n.sqrt() / 4.0).ceil() as usize;
    let success = |r: usize| ((2 * r + 1) as f64 * theta).sin().powi(2);
    if success(ceil) >= 0.9 {
        ceil
    } else {
        (PI / (4.0 * theta)).floor() as usize
    }
}

pub fn grover_ancillas(n: usize) -> usize {
    n.saturating_sub(2)
}

/// Z on the all-ones state of `qs`, via a ccx cascade into ancillas `anc`.
fn multi_cz(c: &mut Circuit, qs: &[usize], anc: &[usize]) -> Result<()> {
    match qs.len() {
        1 => {
            c.push(G::z(qs[0]))?;
        }
        2 => {
            c.push(G::cz(qs[0], qs[1]))?;
        }
        k => {
            let mut ladder = vec![G::ccx(qs[0], qs[1], anc[0])];
            for i in 1..k - 2 {
                ladder.push(G::ccx(anc[i - 1], qs[i + 1], anc[i]));
            }
            c.extend(ladder.iter().cloned())?;
            c.push(G::cz(anc[k - 3], qs[k - 1]))?;
            c.extend(ladder.into_iter().rev())?;
        }
    }
    Ok(())
}

pub fn grover(spec: &OracleSpec) -> Result<Circuit> {
    let n = spec.qubits;
    let marked = bits_of(spec);
    let reg: Vec<usize> = (0..n).collect();
    let anc: Vec<usize> = (n..n + grover_ancillas(n)).collect();
    let mut c = Circuit::new(n + anc.len());
    for &q in &reg {
        c.push(G::h(q))?;
    }
    for _ in 0..grover_iterations(n) {
        for (q, &b) in marked.iter().enumerate() {
            if !b {
                c.push(G::x(q))?;
            }
        }
        multi_cz(&mut c, &reg, &anc)?;
        for (q, &b) in marked.iter().enumerate() {
            if !b {
                c.push(G::x(q))?;
            }
        }
        for &q in &reg {
            c.push(G::h(q))?;
            c.push(G::x(q))?;
        }
        multi_cz(&mut c, &reg, &anc)?;
        for &q in &reg {
            c.push(G::x(q))?;
            c.push(G::h(q))?;
        }
    }
    Ok(c)
}

/// Builds the instance for `spec`.
pub fn instance(spec: &OracleSpec) -> Result<Instance> {
    let n = spec.qubits;
    let (circuit, register) = match spec.benchmark {
        Benchmark::Ghz => (ghz(n)?, n),
        Benchmark::Bv => (bv(spec)?, n - 1),
        Benchmark::Dj => (dj(spec)?, n - 1),
        Benchmark::Simon => (simon(spec)?, n),
        Benchmark::Qft => (qft_on_input(spec)?, n),
        Benchmark::Grover => (grover(spec)?, n),
    };
    let ancillas = circuit.num_qubits() - register;
    Ok(Instance { circuit, oracle: spec.clone(), register, ancillas })
}

/// Same gates on `width >= num_qubits` qubits; the extra qubits stay idle.
pub fn widen(c: &Circuit, width: usize) -> Result<Circuit> {
    let mut w = Circuit::new(width.max(c.num_qubits()));
    w.extend(c.ops().iter().cloned())?;
    Ok(w)
}

const TOL: f64 = 1e-8;

pub fn verify_ghz(qs: &QuantumState, n: usize) -> Result<bool> {
    let ones = qs.prob(&PartialAssignment::all(n, true))?;
    let zeros = qs.prob(&PartialAssignment::all(n, false))?;
    Ok((ones - 0.5).abs() <= TOL && (zeros - 0.5).abs() <= TOL)
}

pub fn verify_bv(qs: &QuantumState, spec: &OracleSpec) -> Result<bool> {
    let p = qs.prob(&PartialAssignment::from_bits(bits_of(spec)))?;
    Ok((p - 1.0).abs() <= TOL)
}

pub fn verify_dj(qs: &QuantumState, spec: &OracleSpec) -> Result<bool> {
    let p = qs.prob(&PartialAssignment::all(spec.qubits - 1, false))?;
    let want = match spec.secret {
        Secret::Dj(DjOracle::Constant(_)) => 1.0,
        _ => 0.0,
    };
    Ok((p - want).abs() <= TOL)
}

fn dot(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).filter(|(x, y)| **x && **y).count() % 2 == 1
}

/// Rank over GF(2).
pub fn gf2_rank(rows: &[Vec<bool>]) -> usize {
    let mut basis: Vec<Vec<bool>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for b in &basis {
            let lead = b.iter().position(|&x| x).unwrap();
            if v[lead] {
                for (x, y) in v.iter_mut().zip(b) {
                    *x ^= *y;
                }
            }
        }
        if let Some(lead) = v.iter().position(|&x| x) {
            // keep the basis reduced on the new pivot
            for b in basis.iter_mut() {
                if b[lead] {
                    for (x, y) in b.iter_mut().zip(&v) {
                        *x ^= *y;
                    }
                }
            }
            basis.push(v);
        }
    }
    basis.len()
}

/// Data halves of the samples are orthogonal to `s` and span `s`'s complement.
pub fn verify_simon(samples: &[BitString], spec: &OracleSpec) -> bool {
    let s = bits_of(spec);
    let n = s.len();
    let ys: Vec<Vec<bool>> = samples.iter().map(|b| b.0[..n].to_vec()).collect();
    ys.iter().all(|y| !dot(y, s)) && gf2_rank(&ys) == n - 1
}

/// Closed form `2^{-n/2} e^{2 pi i x k / 2^n}` at the given output indices.
pub fn verify_qft_at(qs: &QuantumState, spec: &OracleSpec, ks: &[u128]) -> Result<bool> {
    let n = spec.qubits;
    let x = BitString(bits_of(spec).to_vec()).index().unwrap_or(0);
    let scale = 2f64.powf(-(n as f64) / 2.0);
    for &k in ks {
        let bits = BitString::from_index(k, n);
        let a = qs.amplitude(&widened(&bits.0, qs.num_qubits()))?.to_complex64();
        // x*k mod 2^n keeps the phase argument small
        let modulus = if n >= 128 { u128::MAX } else { (1u128 << n) - 1 };
        let xk = x.wrapping_mul(k) & modulus;
        let phase = 2.0 * PI * (xk as f64) / 2f64.powi(n as i32);
        let want = num_complex::Complex64::from_polar(scale, phase);
        if (a - want).norm() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn widened(bits: &[bool], width: usize) -> Vec<bool> {
    let mut v = bits.to_vec();
    v.resize(width, false);
    v
}

pub fn verify_grover(qs: &QuantumState, spec: &OracleSpec) -> Result<bool> {
    Ok(qs.prob(&PartialAssignment::from_bits(bits_of(spec)))? > 0.9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseState;

    fn dense_run(c: &Circuit) -> DenseState {
        let mut d = DenseState::new(c.num_qubits()).unwrap();
        for g in c.ops() {
            d.apply(g);
        }
        d
    }

    #[test]
    fn oracle_generation_is_pure() {
        for b in Benchmark::ALL {
            let a = OracleSpec::generate(b, 6, 42).unwrap();
            assert_eq!(a, OracleSpec::generate(b, 6, 42).unwrap());
        }
        let specs: Vec<_> = (0..20).map(|s| OracleSpec::generate(Benchmark::Bv, 12, s).unwrap()).collect();
        assert!(specs.windows(2).any(|w| w[0].secret != w[1].secret));
    }

    #[test]
    fn zero_period_rejected() {
        assert!(OracleSpec::with_secret(Benchmark::Simon, Secret::Period(vec![false; 3])).is_err());
    }

    #[test]
    fn grover_iteration_rule() {
        assert_eq!(grover_iterations(2), 1);
        assert_eq!(grover_iterations(8), 13);
        for n in 2..12 {
            let theta = 2f64.powf(-(n as f64) / 2.0).asin();
            let r = grover_iterations(n);
            assert!(((2 * r + 1) as f64 * theta).sin().powi(2) > 0.9, "n={n}");
        }
    }

    #[test]
    fn gf2_rank_examples() {
        let r = |v: &[u8]| v.iter().map(|&x| x == 1).collect::<Vec<_>>();
        assert_eq!(gf2_rank(&[r(&[1, 0, 1]), r(&[0, 1, 1]), r(&[1, 1, 0])]), 2);
        assert_eq!(gf2_rank(&[r(&[1, 0, 0]), r(&[0, 1, 0]), r(&[0, 0, 1])]), 3);
        assert_eq!(gf2_rank(&[r(&[0, 0, 0])]), 0);
    }

    #[test]
    fn multi_cz_flips_only_all_ones() {
        for k in 1..6 {
            let mut c = Circuit::new(k + grover_ancillas(k));
            let qs: Vec<usize> = (0..k).collect();
            let anc: Vec<usize> = (k..k + grover_ancillas(k)).collect();
            multi_cz(&mut c, &qs, &anc).unwrap();
            for x in 0..1usize << k {
                let mut d = DenseState::new(c.num_qubits()).unwrap();
                for q in 0..k {
                    if (x >> (k - 1 - q)) & 1 == 1 {
                        d.apply(&G::x(q));
                    }
                }
                let before = d.amplitudes().to_vec();
                for g in c.ops() {
                    d.apply(g);
                }
                let sign = if x == (1 << k) - 1 { -1.0 } else { 1.0 };
                for (a, b) in d.amplitudes().iter().zip(&before) {
                    assert!((a - b * sign).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn verifiers_accept_dense_results() {
        for seed in 0..5 {
            for b in Benchmark::ALL {
                let n = if b == Benchmark::Simon { 3 } else { 5 };
                let spec = OracleSpec::generate(b, n, seed).unwrap();
                let inst = instance(&spec).unwrap();
                let d = dense_run(&inst.circuit);
                let amps: Vec<_> = d
                    .amplitudes()
                    .iter()
                    .map(|z| crate::numerics::Amplitude::from_f64(z.re, z.im, 53))
                    .collect();
                let qs = QuantumState::from_amplitudes(
                    &crate::state::Registry::default(),
                    "dense",
                    &amps,
                    Default::default(),
                )
                .unwrap();
                let ok = match b {
                    Benchmark::Ghz => verify_ghz(&qs, n).unwrap(),
                    Benchmark::Bv => verify_bv(&qs, &spec).unwrap(),
                    Benchmark::Dj => verify_dj(&qs, &spec).unwrap(),
                    Benchmark::Qft => {
                        let all: Vec<u128> = (0..1u128 << n).collect();
                        verify_qft_at(&qs, &spec, &all).unwrap()
                    }
                    Benchmark::Grover => verify_grover(&qs, &spec).unwrap(),
                    Benchmark::Simon => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let samples: Vec<_> = (0..100).map(|_| qs.measure(&mut rng)).collect();
                        verify_simon(&samples, &spec)
                    }
                };
                assert!(ok, "{b} seed {seed}");
            }
        }
    }

    #[test]
    fn verifiers_reject_wrong_answers() {
        let spec = OracleSpec::with_secret(Benchmark::Bv, Secret::Hidden(vec![true, false, true])).unwrap();
        let other = OracleSpec::with_secret(Benchmark::Bv, Secret::Hidden(vec![true, true, true])).unwrap();
        let d = dense_run(&bv(&other).unwrap());
        let amps: Vec<_> = d
            .amplitudes()
            .iter()
            .map(|z| crate::numerics::Amplitude::from_f64(z.re, z.im, 53))
            .collect();
        let qs = QuantumState::from_amplitudes(&Default::default(), "dense", &amps, Default::default()).unwrap();
        assert!(!verify_bv(&qs, &spec).unwrap());
        assert!(verify_bv(&qs, &other).unwrap());
    }

    #[test]
    fn generated_circuits_round_trip() {
        for b in Benchmark::ALL {
            let spec = OracleSpec::generate(b, 4, 3).unwrap();
            let c = instance(&spec).unwrap().circuit;
            assert_eq!(Circuit::parse(&c.to_text()).unwrap(), c);
        }
    }
}
