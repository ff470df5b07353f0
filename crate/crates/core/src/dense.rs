//! Brute-force state-vector simulator, the ground truth for the symbolic
//! backends. It keeps its own `f64` gate table and shares no arithmetic with
//! them; the two tables are compared entrywise in the tests.

use std::any::Any;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::RngCore;
use rug::Integer;

use crate::error::{Error, Result};
use crate::gate::{GateApplication, GateKind};
use crate::numerics::{Amplitude, PrecisionConfig};
use crate::state::{Backend, BitString, OutcomeCount, PartialAssignment, StateHandle};

pub const MAX_DENSE_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

/// `2^k x 2^k` row-major matrix of `g`, first target most significant.
pub fn dense_matrix(g: &GateApplication) -> Vec<Complex64> {
    use GateKind::*;
    let h = FRAC_1_SQRT_2;
    let ph = |theta: f64| Complex64::from_polar(1.0, PI * theta);
    let diag = |d: &[Complex64]| {
        let k = d.len();
        let mut m = vec![ZERO; k * k];
        for (i, v) in d.iter().enumerate() {
            m[i * k + i] = *v;
        }
        m
    };
    let perm = |p: &[usize]| {
        let k = p.len();
        let mut m = vec![ZERO; k * k];
        for (r, &c) in p.iter().enumerate() {
            m[r * k + c] = ONE;
        }
        m
    };
    let angle = g.angle.unwrap_or(0.0);
    match g.kind {
        I => diag(&[ONE, ONE]),
        H => vec![h.into(), h.into(), h.into(), (-h).into()],
        X => perm(&[1, 0]),
        Y => vec![ZERO, -IM, IM, ZERO],
        Z => diag(&[ONE, -ONE]),
        S => diag(&[ONE, IM]),
        Sdg => diag(&[ONE, -IM]),
        T => diag(&[ONE, Complex64::new(h, h)]),
        Tdg => diag(&[ONE, Complex64::new(h, -h)]),
        P => diag(&[ONE, ph(angle)]),
        CX => perm(&[0, 1, 3, 2]),
        CZ => diag(&[ONE, ONE, ONE, -ONE]),
        CP => diag(&[ONE, ONE, ONE, ph(angle)]),
        Swap => perm(&[0, 2, 1, 3]),
        ISwap => {
            let mut m = diag(&[ONE, ZERO, ZERO, ONE]);
            m[6] = IM;
            m[9] = IM;
            m
        }
        CSwap => perm(&[0, 1, 2, 3, 4, 6, 5, 7]),
        CCX => perm(&[0, 1, 2, 3, 4, 5, 7, 6]),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn new(n: usize) -> Result<Self> {
        Self::check(n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(DenseState { n, amps })
    }

    pub fn from_vec(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Argument(format!("length {len} is not a power of two >= 2")));
        }
        let n = len.trailing_zeros() as usize;
        Self::check(n)?;
        Ok(DenseState { n, amps })
    }

    fn check(n: usize) -> Result<()> {
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Resource(format!(
                "dense oracle is capped at {MAX_DENSE_QUBITS} qubits, asked for {n}"
            )));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn bit(&self, index: usize, q: usize) -> usize {
        (index >> (self.n - 1 - q)) & 1
    }

    /// `w = U v` by index arithmetic over the target bits.
    pub fn apply(&mut self, g: &GateApplication) {
        let m = dense_matrix(g);
        let k = g.targets.len();
        let dim = 1 << k;
        let mask: usize = g.targets.iter().map(|&q| 1 << (self.n - 1 - q)).sum();
        let mut out = vec![ZERO; self.amps.len()];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let idx = |sub: usize| {
                let mut i = base;
                for (j, &q) in g.targets.iter().enumerate() {
                    if (sub >> (k - 1 - j)) & 1 == 1 {
                        i |= 1 << (self.n - 1 - q);
                    }
                }
                i
            };
            for r in 0..dim {
                let mut acc = ZERO;
                for c in 0..dim {
                    acc += m[r * dim + c] * self.amps[idx(c)];
                }
                out[idx(r)] = acc;
            }
        }
        self.amps = out;
    }

    pub fn prob(&self, m: &PartialAssignment) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| m.iter().all(|(q, b)| self.bit(*i, q) == b as usize))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn counts(&self, p: f64, tol: f64) -> u64 {
        self.amps
            .iter()
            .filter(|a| (a.norm_sqr() - p).abs() <= tol)
            .count() as u64
    }

    /// Inverse-CDF sampling.
    pub fn sample(&self, rng: &mut dyn RngCore) -> BitString {
        let u = crate::mtbdd::uniform01(rng) * self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        let mut acc = 0.0;
        let mut pick = None;
        for (i, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            pick = Some(i);
            acc += w;
            if u < acc {
                break;
            }
        }
        BitString::from_index(pick.unwrap_or(0) as u128, self.n)
    }
}

pub struct DenseBackend;

impl Backend for DenseBackend {
    fn name(&self) -> &str {
        "dense"
    }

    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> Result<Box<dyn StateHandle>> {
        Ok(Box::new(DenseHandle {
            state: DenseState::new(n)?,
            precision: *precision,
        }))
    }

    fn from_amplitudes(
        &self,
        _n: usize,
        amplitudes: &[Amplitude],
        precision: &PrecisionConfig,
    ) -> Result<Box<dyn StateHandle>> {
        let v = amplitudes.iter().map(Amplitude::to_complex64).collect();
        Ok(Box::new(DenseHandle {
            state: DenseState::from_vec(v)?,
            precision: *precision,
        }))
    }
}

pub struct DenseHandle {
    state: DenseState,
    precision: PrecisionConfig,
}

impl DenseHandle {
    pub fn state(&self) -> &DenseState {
        &self.state
    }
}

impl StateHandle for DenseHandle {
    fn backend_name(&self) -> &str {
        "dense"
    }

    fn num_qubits(&self) -> usize {
        self.state.n
    }

    fn precision(&self) -> &PrecisionConfig {
        &self.precision
    }

    fn apply_gate(&self, g: &GateApplication) -> Result<Box<dyn StateHandle>> {
        let mut state = self.state.clone();
        state.apply(g);
        Ok(Box::new(DenseHandle {
            state,
            precision: self.precision,
        }))
    }

    fn prob(&self, m: &PartialAssignment) -> Result<f64> {
        Ok(self.state.prob(m))
    }

    fn measure(&self, rng: &mut dyn RngCore) -> BitString {
        self.state.sample(rng)
    }

    fn measurement_counts(&self, p: f64, tol: f64) -> Result<OutcomeCount> {
        Ok(Integer::from(self.state.counts(p, tol)))
    }

    fn amplitude(&self, bits: &[bool]) -> Amplitude {
        let i = bits.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
        let a = self.state.amps[i];
        Amplitude::from_f64(a.re, a.im, self.precision.mantissa_bits())
    }

    fn node_count(&self) -> usize {
        self.state.amps.len()
    }

    fn same_representation(&self, other: &dyn StateHandle) -> bool {
        other
            .as_any()
            .downcast_ref::<DenseHandle>()
            .is_some_and(|o| o.state == self.state)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_agree_entrywise() {
        for kind in GateKind::ALL {
            for angle in [0.3, -0.125, 1.0 / 3.0] {
                let g = GateApplication::new(
                    kind,
                    (0..kind.arity()).collect(),
                    kind.takes_angle().then_some(angle),
                );
                let sym = g.matrix(53);
                let d = dense_matrix(&g);
                let k = sym.len();
                for r in 0..k {
                    for c in 0..k {
                        let diff = (sym[r][c].to_complex64() - d[r * k + c]).norm();
                        assert!(diff < 1e-15, "{kind} [{r}][{c}]");
                    }
                }
            }
        }
    }

    #[test]
    fn apply_examples() {
        let mut s = DenseState::new(1).unwrap();
        s.apply(&GateApplication::h(0));
        assert!((s.amps[0].re - FRAC_1_SQRT_2).abs() < 1e-16);
        assert!((s.amps[1].re - FRAC_1_SQRT_2).abs() < 1e-16);

        let mut s = DenseState::from_vec(vec![ZERO, ZERO, ONE, ZERO]).unwrap();
        s.apply(&GateApplication::cx(0, 1));
        assert_eq!(s.amps[3], ONE);

        let mut s = DenseState::new(3).unwrap();
        s.apply(&GateApplication::h(0));
        s.apply(&GateApplication::cx(0, 1));
        s.apply(&GateApplication::cx(0, 2));
        for (i, a) in s.amps.iter().enumerate() {
            let want = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((a.re - want).abs() < 1e-15);
        }
        assert!((s.prob(&PartialAssignment::all(3, true)) - 0.5).abs() < 1e-15);
        assert!((s.prob(&PartialAssignment::new()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counts_debugging_state() {
        let k = 1.0 / 6f64.sqrt();
        let v = [k, k, k, 0.0, k, k, k, 0.0].map(|x| Complex64::new(x, 0.0)).to_vec();
        let s = DenseState::from_vec(v).unwrap();
        assert_eq!(s.counts(1.0 / 6.0, 1e-9), 6);
    }

    #[test]
    fn targets_are_msb_first() {
        // cx with control on the less significant qubit
        let mut s = DenseState::from_vec(vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        s.apply(&GateApplication::cx(1, 0));
        assert_eq!(s.amps[3], ONE);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(DenseState::new(25), Err(Error::Resource(_))));
    }
}
