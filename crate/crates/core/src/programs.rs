//! Small fixed circuits: the three-qubit debugging state and the three
//! assertion programs, each with its expected query answers.

use crate::circuit::Circuit;
use crate::error::Result;
use crate::gate::GateApplication as G;
use crate::numerics::Amplitude;
use crate::state::PartialAssignment;

/// Controlled Hadamard from `{s, h, t, cx, tdg, h, sdg}` on the target.
pub fn controlled_h(c: usize, t: usize) -> [G; 7] {
    [G::s(t), G::h(t), G::t(t), G::cx(c, t), G::tdg(t), G::h(t), G::sdg(t)]
}

/// `(1/sqrt 6)(1,1,1,0,1,1,1,0)` over qubits 0..3, first qubit most significant.
pub fn debugging_state_amplitudes(prec: u32) -> Vec<Amplitude> {
    let k = 1.0 / 6f64.sqrt();
    [k, k, k, 0.0, k, k, k, 0.0]
        .iter()
        .map(|&x| Amplitude::from_f64(x, 0.0, prec))
        .collect()
}

/// Prepares the debugging state up to a global phase: qubit 0 is uniform;
/// qubit 1 gets amplitudes `(sqrt(2/3), sqrt(1/3))`; qubit 2 is put in
/// uniform superposition only when qubit 1 is 0.
pub fn debugging_state_circuit() -> Result<Circuit> {
    // cos^2(pi theta / 2) = 2/3
    let theta = 2.0 * (2.0f64 / 3.0).sqrt().acos() / std::f64::consts::PI;
    let mut c = Circuit::new(3);
    c.extend([G::h(0), G::h(1), G::p(1, theta), G::h(1), G::s(1), G::x(1)])?;
    c.extend(controlled_h(1, 2))?;
    c.push(G::x(1))?;
    Ok(c)
}

/// A query program: a circuit, the backend it was written for, and
/// `(assignment, predicate)` pairs on the final state.
pub struct Program {
    pub name: &'static str,
    pub backend: &'static str,
    pub circuit: Circuit,
    pub checks: Vec<(PartialAssignment, Check)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Check {
    /// `|prob - v| < 1e-8`
    Equals(f64),
    /// `prob > v`
    Above(f64),
}

impl Check {
    pub fn holds(self, p: f64) -> bool {
        match self {
            Check::Equals(v) => (p - v).abs() < 1e-8,
            Check::Above(v) => p > v,
        }
    }
}

/// Hadamards on qubits 0..3, then cx from each into qubit 3.
pub fn parity_program() -> Result<Program> {
    let mut c = Circuit::new(4);
    for i in 0..3 {
        c.push(G::h(i))?;
    }
    for i in 0..3 {
        c.push(G::cx(i, 3))?;
    }
    Ok(Program {
        name: "parity",
        backend: "bdd",
        circuit: c,
        checks: vec![
            (PartialAssignment::from([(3, 1)]), Check::Equals(0.5)),
            (PartialAssignment::from([(2, 1), (3, 1)]), Check::Equals(0.25)),
        ],
    })
}

/// Hadamard sandwich around two controlled phases.
pub fn phase_program() -> Result<Program> {
    let mut c = Circuit::new(3);
    for i in 0..3 {
        c.push(G::h(i))?;
    }
    c.extend([G::cp(0, 1, 0.25), G::cp(1, 2, 0.5)])?;
    for i in 0..3 {
        c.push(G::h(i))?;
    }
    Ok(Program {
        name: "phase",
        backend: "bdd",
        circuit: c,
        checks: vec![
            (PartialAssignment::from([(1, 1), (2, 1)]), Check::Equals(0.125)),
            (PartialAssignment::from([(0, 0)]), Check::Above(0.75)),
        ],
    })
}

/// A controlled-swap network steering one excitation.
pub fn swap_program() -> Result<Program> {
    let mut c = Circuit::new(8);
    for i in 0..4 {
        c.push(G::h(i))?;
    }
    c.extend([
        G::x(7),
        G::cswap(0, 6, 7),
        G::cswap(1, 5, 6),
        G::swap(6, 7),
        G::cswap(2, 4, 5),
        G::swap(4, 5),
        G::cswap(3, 4, 7),
    ])?;
    Ok(Program {
        name: "swap-network",
        backend: "wbdd",
        circuit: c,
        checks: vec![(PartialAssignment::from([(4, 0), (5, 1), (6, 0), (7, 0)]), Check::Equals(0.125))],
    })
}

pub fn assertion_programs() -> Result<Vec<Program>> {
    Ok(vec![parity_program()?, phase_program()?, swap_program()?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseState;
    use num_complex::Complex64;

    fn dense(c: &Circuit) -> DenseState {
        let mut d = DenseState::new(c.num_qubits()).unwrap();
        for g in c.ops() {
            d.apply(g);
        }
        d
    }

    #[test]
    fn controlled_h_matches_definition() {
        for input in 0..4usize {
            let mut v = vec![Complex64::new(0.0, 0.0); 4];
            v[input] = Complex64::new(1.0, 0.0);
            let mut d = DenseState::from_vec(v).unwrap();
            for g in controlled_h(0, 1) {
                d.apply(&g);
            }
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let want: [f64; 4] = match input {
                0 => [1.0, 0.0, 0.0, 0.0],
                1 => [0.0, 1.0, 0.0, 0.0],
                2 => [0.0, 0.0, h, h],
                _ => [0.0, 0.0, h, -h],
            };
            for (a, w) in d.amplitudes().iter().zip(want) {
                assert!((a - Complex64::new(w, 0.0)).norm() < 1e-12, "input {input}");
            }
        }
    }

    #[test]
    fn debugging_circuit_prepares_the_state() {
        let d = dense(&debugging_state_circuit().unwrap());
        let want = debugging_state_amplitudes(53);
        // fix the global phase on the first amplitude
        let phase = d.amplitudes()[0] / want[0].to_complex64();
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        for (a, w) in d.amplitudes().iter().zip(&want) {
            assert!((a - phase * w.to_complex64()).norm() < 1e-12);
        }
    }

    #[test]
    fn programs_hold_on_dense() {
        for p in assertion_programs().unwrap() {
            let d = dense(&p.circuit);
            for (m, check) in &p.checks {
                assert!(check.holds(d.prob(m)), "{} {m} {:?} got {}", p.name, check, d.prob(m));
            }
        }
    }
}
