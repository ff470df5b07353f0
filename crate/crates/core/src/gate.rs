//! The seventeen gate kinds and their matrices.
//!
//! Angles of `p` and `cp` are multiples of pi: `p(q, 0.5)` applies the phase
//! `e^{i pi / 2} = i` to `|1>`. [`GateKind::phase`] is the only place that
//! converts an angle into a phase.
//!
//! Multi-qubit matrices are indexed with the first listed target as the most
//! significant bit, so `cx(c, t)` is the textbook CNOT with control `c`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Amplitude;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    I,
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    P,
    CX,
    CZ,
    CP,
    Swap,
    ISwap,
    CSwap,
    CCX,
}

impl GateKind {
    pub const ALL: [GateKind; 17] = [
        GateKind::I,
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::P,
        GateKind::CX,
        GateKind::CZ,
        GateKind::CP,
        GateKind::Swap,
        GateKind::ISwap,
        GateKind::CSwap,
        GateKind::CCX,
    ];

    pub fn arity(self) -> usize {
        use GateKind::*;
        match self {
            I | H | X | Y | Z | S | Sdg | T | Tdg | P => 1,
            CX | CZ | CP | Swap | ISwap => 2,
            CSwap | CCX => 3,
        }
    }

    pub fn takes_angle(self) -> bool {
        matches!(self, GateKind::P | GateKind::CP)
    }

    pub fn mnemonic(self) -> &'static str {
        use GateKind::*;
        match self {
            I => "i",
            H => "h",
            X => "x",
            Y => "y",
            Z => "z",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            P => "p",
            CX => "cx",
            CZ => "cz",
            CP => "cp",
            Swap => "swap",
            ISwap => "iswap",
            CSwap => "cswap",
            CCX => "ccx",
        }
    }

    /// Angle to phase: `e^{i pi theta}` at `prec` bits.
    pub fn phase(theta: f64, prec: u32) -> Amplitude {
        Amplitude::phase_turns(theta / 2.0, prec)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.mnemonic() == s)
            .ok_or_else(|| Error::Argument(format!("unknown gate `{s}`")))
    }
}

/// One gate applied to concrete qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GateApplication {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    /// Multiples of pi; present exactly for `p` and `cp`.
    pub angle: Option<f64>,
}

macro_rules! one_qubit_ctor {
    ($($name:ident => $kind:ident),* $(,)?) => {
        $(pub fn $name(q: usize) -> Self {
            GateApplication { kind: GateKind::$kind, targets: vec![q], angle: None }
        })*
    };
}

impl GateApplication {
    pub fn new(kind: GateKind, targets: Vec<usize>, angle: Option<f64>) -> Self {
        GateApplication {
            kind,
            targets,
            angle,
        }
    }

    one_qubit_ctor! {
        i => I, h => H, x => X, y => Y, z => Z, s => S, sdg => Sdg, t => T, tdg => Tdg,
    }

    pub fn p(q: usize, theta: f64) -> Self {
        Self::new(GateKind::P, vec![q], Some(theta))
    }

    pub fn cx(c: usize, t: usize) -> Self {
        Self::new(GateKind::CX, vec![c, t], None)
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(GateKind::CZ, vec![a, b], None)
    }

    pub fn cp(c: usize, t: usize, theta: f64) -> Self {
        Self::new(GateKind::CP, vec![c, t], Some(theta))
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![a, b], None)
    }

    pub fn iswap(a: usize, b: usize) -> Self {
        Self::new(GateKind::ISwap, vec![a, b], None)
    }

    pub fn cswap(c: usize, a: usize, b: usize) -> Self {
        Self::new(GateKind::CSwap, vec![c, a, b], None)
    }

    pub fn ccx(c1: usize, c2: usize, t: usize) -> Self {
        Self::new(GateKind::CCX, vec![c1, c2, t], None)
    }

    /// Checks arity, angle presence and target indices against `n` qubits.
    pub fn validate(&self, n: usize) -> Result<()> {
        let kind = self.kind;
        if self.targets.len() != kind.arity() {
            return Err(Error::Argument(format!(
                "{kind} takes {} qubit(s), got {}",
                kind.arity(),
                self.targets.len()
            )));
        }
        match (kind.takes_angle(), self.angle) {
            (true, None) => return Err(Error::Argument(format!("{kind} needs an angle"))),
            (false, Some(_)) => return Err(Error::Argument(format!("{kind} takes no angle"))),
            (true, Some(a)) if !a.is_finite() => {
                return Err(Error::Argument(format!("{kind} angle must be finite")))
            }
            _ => {}
        }
        for (i, &q) in self.targets.iter().enumerate() {
            if q >= n {
                return Err(Error::Argument(format!(
                    "qubit index {q} out of range for {n} qubits"
                )));
            }
            if self.targets[..i].contains(&q) {
                return Err(Error::Argument(format!("{kind} repeats qubit {q}")));
            }
        }
        Ok(())
    }

    /// Dense `2^k x 2^k` matrix, row-major, first target most significant.
    pub fn matrix(&self, prec: u32) -> Vec<Vec<Amplitude>> {
        use GateKind::*;
        let z = || Amplitude::zero(prec);
        let o = || Amplitude::one(prec);
        let c = |re: f64, im: f64| Amplitude::from_f64(re, im, prec);
        let diag = |d: Vec<Amplitude>| -> Vec<Vec<Amplitude>> {
            let n = d.len();
            d.into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut row = vec![Amplitude::zero(prec); n];
                    row[i] = v;
                    row
                })
                .collect()
        };
        let perm = |p: &[usize]| -> Vec<Vec<Amplitude>> {
            // row r has its 1 in column p[r]
            p.iter()
                .map(|&col| {
                    let mut row = vec![Amplitude::zero(prec); p.len()];
                    row[col] = Amplitude::one(prec);
                    row
                })
                .collect()
        };
        match self.kind {
            I => diag(vec![o(), o()]),
            H => {
                let h = Amplitude::frac_1_sqrt2(prec);
                vec![vec![h.clone(), h.clone()], vec![h.clone(), -&h]]
            }
            X => perm(&[1, 0]),
            Y => vec![vec![z(), c(0.0, -1.0)], vec![c(0.0, 1.0), z()]],
            Z => diag(vec![o(), c(-1.0, 0.0)]),
            S => diag(vec![o(), c(0.0, 1.0)]),
            Sdg => diag(vec![o(), c(0.0, -1.0)]),
            T => diag(vec![o(), GateKind::phase(0.25, prec)]),
            Tdg => diag(vec![o(), GateKind::phase(-0.25, prec)]),
            P => diag(vec![o(), GateKind::phase(self.angle.unwrap_or(0.0), prec)]),
            CX => perm(&[0, 1, 3, 2]),
            CZ => diag(vec![o(), o(), o(), c(-1.0, 0.0)]),
            CP => diag(vec![
                o(),
                o(),
                o(),
                GateKind::phase(self.angle.unwrap_or(0.0), prec),
            ]),
            Swap => perm(&[0, 2, 1, 3]),
            ISwap => {
                let mut m = perm(&[0, 2, 1, 3]);
                m[1][2] = c(0.0, 1.0);
                m[2][1] = c(0.0, 1.0);
                m
            }
            CSwap => perm(&[0, 1, 2, 3, 4, 6, 5, 7]),
            CCX => perm(&[0, 1, 2, 3, 4, 5, 7, 6]),
        }
    }

    /// The gate as a sum of Kronecker products of 2x2 factors, one factor per
    /// target qubit (untouched qubits carry the identity).
    ///
    /// One-qubit gates give a single term holding the full matrix. Wider gates
    /// expand into matrix units `|r><c|`, one term per nonzero entry.
    pub fn operator_terms(&self, prec: u32) -> Vec<OperatorTerm> {
        let m = self.matrix(prec);
        if self.kind.arity() == 1 {
            let f = [
                m[0][0].clone(),
                m[0][1].clone(),
                m[1][0].clone(),
                m[1][1].clone(),
            ];
            return vec![OperatorTerm {
                coeff: Amplitude::one(prec),
                factors: vec![(self.targets[0], f)],
            }];
        }
        let k = self.targets.len();
        let mut terms = Vec::new();
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let factors = self
                    .targets
                    .iter()
                    .enumerate()
                    .map(|(i, &q)| {
                        let shift = k - 1 - i;
                        (q, matrix_unit((r >> shift) & 1, (c >> shift) & 1, prec))
                    })
                    .collect();
                terms.push(OperatorTerm {
                    coeff: v.clone(),
                    factors,
                });
            }
        }
        terms
    }

    /// Gates whose product with `self` (in program order) is the identity.
    pub fn inverse(&self) -> Vec<GateApplication> {
        use GateKind::*;
        let t = &self.targets;
        match self.kind {
            S => vec![Self::sdg(t[0])],
            Sdg => vec![Self::s(t[0])],
            T => vec![Self::tdg(t[0])],
            Tdg => vec![Self::t(t[0])],
            P => vec![Self::p(t[0], -self.angle.unwrap_or(0.0))],
            CP => vec![Self::cp(t[0], t[1], -self.angle.unwrap_or(0.0))],
            // iswap = (s x s) . swap . cz
            ISwap => vec![
                Self::sdg(t[0]),
                Self::sdg(t[1]),
                Self::swap(t[0], t[1]),
                Self::cz(t[0], t[1]),
            ],
            _ => vec![self.clone()],
        }
    }
}

impl fmt::Display for GateApplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for q in &self.targets {
            write!(f, " {q}")?;
        }
        if let Some(a) = self.angle {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Row-major 2x2 complex matrix.
pub type Mat2 = [Amplitude; 4];

pub fn matrix_unit(r: usize, c: usize, prec: u32) -> Mat2 {
    let mut m = [
        Amplitude::zero(prec),
        Amplitude::zero(prec),
        Amplitude::zero(prec),
        Amplitude::zero(prec),
    ];
    m[r * 2 + c] = Amplitude::one(prec);
    m
}

pub fn identity2(prec: u32) -> Mat2 {
    [
        Amplitude::one(prec),
        Amplitude::zero(prec),
        Amplitude::zero(prec),
        Amplitude::one(prec),
    ]
}

/// `coeff * (F_1 (x) F_2 (x) ...)` with factors on the listed qubits.
#[derive(Clone, Debug)]
pub struct OperatorTerm {
    pub coeff: Amplitude,
    pub factors: Vec<(usize, Mat2)>,
}

impl OperatorTerm {
    pub fn factor(&self, q: usize) -> Option<&Mat2> {
        self.factors.iter().find(|(t, _)| *t == q).map(|(_, m)| m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_c(m: &[Vec<Amplitude>]) -> Vec<Vec<num_complex::Complex64>> {
        m.iter()
            .map(|r| r.iter().map(|a| a.to_complex64()).collect())
            .collect()
    }

    #[test]
    fn every_matrix_is_unitary() {
        for kind in GateKind::ALL {
            let targets = (0..kind.arity()).collect();
            let angle = kind.takes_angle().then_some(0.3);
            let g = GateApplication::new(kind, targets, angle);
            let m = to_c(&g.matrix(53));
            let d = m.len();
            for i in 0..d {
                for j in 0..d {
                    let dot: num_complex::Complex64 =
                        (0..d).map(|k| m[k][i].conj() * m[k][j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot.re - expect).abs() < 1e-15 && dot.im.abs() < 1e-15, "{kind}");
                }
            }
        }
    }

    #[test]
    fn validation_errors() {
        assert!(GateApplication::h(3).validate(3).is_err());
        assert!(GateApplication::cx(1, 1).validate(3).is_err());
        assert!(GateApplication::new(GateKind::P, vec![0], None).validate(1).is_err());
        assert!(GateApplication::new(GateKind::H, vec![0], Some(0.1)).validate(1).is_err());
        assert!(GateApplication::new(GateKind::CX, vec![0], None).validate(2).is_err());
        assert!(GateApplication::ccx(0, 1, 2).validate(3).is_ok());
    }

    #[test]
    fn cp_half_is_i() {
        let m = GateApplication::cp(0, 1, 0.5).matrix(53);
        assert_eq!(m[3][3].to_f64_pair(), (0.0, 1.0));
    }

    #[test]
    fn operator_terms_reassemble_the_matrix() {
        for kind in GateKind::ALL {
            let k = kind.arity();
            let g = GateApplication::new(kind, (0..k).collect(), kind.takes_angle().then_some(0.2));
            let m = to_c(&g.matrix(53));
            let d = 1 << k;
            let mut acc = vec![vec![num_complex::Complex64::new(0.0, 0.0); d]; d];
            for term in g.operator_terms(53) {
                let coeff = term.coeff.to_complex64();
                for (r, row) in acc.iter_mut().enumerate() {
                    for (c, cell) in row.iter_mut().enumerate() {
                        let mut v = coeff;
                        for (i, q) in (0..k).enumerate() {
                            let f = term.factor(q).unwrap();
                            let (rb, cb) = ((r >> (k - 1 - i)) & 1, (c >> (k - 1 - i)) & 1);
                            v *= f[rb * 2 + cb].to_complex64();
                        }
                        *cell += v;
                    }
                }
            }
            for r in 0..d {
                for c in 0..d {
                    assert!((acc[r][c] - m[r][c]).norm() < 1e-15, "{kind} [{r}][{c}]");
                }
            }
        }
    }

    #[test]
    fn mnemonics_round_trip() {
        for kind in GateKind::ALL {
            assert_eq!(kind.mnemonic().parse::<GateKind>().unwrap(), kind);
        }
        assert!("cnot".parse::<GateKind>().is_err());
    }
}
