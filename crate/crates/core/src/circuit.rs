//! Circuit IR and the line-oriented `.qc` text format.
//!
//! ```text
//! # GHZ on three qubits
//! qubits 3
//! h 0
//! cx 0 1
//! cx 0 2
//! cp 1 2 0.25   # phase e^{i pi / 4}
//! ```
//!
//! See `docs/qc-format.md` for the grammar.

use std::fmt;

use thiserror::Error;

use crate::error::Result;
use crate::gate::{GateApplication, GateKind};
use crate::numerics::PrecisionConfig;
use crate::state::{BackendKind, QuantumState, Registry};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingHeader,
    MalformedHeader(String),
    DuplicateHeader,
    UnknownMnemonic(String),
    ArityMismatch { gate: String, expected: usize, got: usize },
    QubitOutOfRange { index: String, qubits: usize },
    BadQubitIndex(String),
    RepeatedQubit(usize),
    MissingAngle(String),
    UnexpectedAngle(String),
    BadAngle(String),
    InvalidUtf8,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParseErrorKind::*;
        match self {
            MissingHeader => write!(f, "missing `qubits <n>` header"),
            MalformedHeader(s) => write!(f, "malformed header `{s}`"),
            DuplicateHeader => write!(f, "duplicate header"),
            UnknownMnemonic(m) => write!(f, "unknown mnemonic `{m}`"),
            ArityMismatch { gate, expected, got } => {
                write!(f, "arity mismatch: `{gate}` takes {expected} qubit(s), got {got}")
            }
            QubitOutOfRange { index, qubits } => {
                write!(f, "qubit index out of range ({index} >= {qubits})")
            }
            BadQubitIndex(s) => write!(f, "bad qubit index `{s}`"),
            RepeatedQubit(q) => write!(f, "qubit {q} used twice in one gate"),
            MissingAngle(g) => write!(f, "missing angle for `{g}`"),
            UnexpectedAngle(g) => write!(f, "extra angle for `{g}`"),
            BadAngle(s) => write!(f, "bad angle `{s}`"),
            InvalidUtf8 => write!(f, "invalid UTF-8"),
        }
    }
}

/// Diagnostic with a 1-based line number.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}, line {line}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateApplication>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            ops: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateApplication] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, g: GateApplication) -> Result<&mut Self> {
        g.validate(self.num_qubits)?;
        self.ops.push(g);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = GateApplication>) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    /// The adjoint circuit: gates reversed, each replaced by its inverse.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            ops: self.ops.iter().rev().flat_map(|g| g.inverse()).collect(),
        }
    }

    /// `self` followed by `other` on the same register.
    pub fn then(&self, other: &Circuit) -> Circuit {
        let mut c = self.clone();
        c.num_qubits = c.num_qubits.max(other.num_qubits);
        c.ops.extend(other.ops.iter().cloned());
        c
    }

    pub fn parse(text: &str) -> Result<Circuit, ParseError> {
        let mut header: Option<usize> = None;
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |kind| ParseError { line, kind };
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            let Some((&head, args)) = toks.split_first() else {
                continue;
            };
            if head == "qubits" {
                if header.is_some() {
                    return Err(err(ParseErrorKind::DuplicateHeader));
                }
                let n = match args {
                    [n] => parse_index(n).filter(|&n| n > 0),
                    _ => None,
                };
                header = Some(n.ok_or_else(|| {
                    err(ParseErrorKind::MalformedHeader(body.trim().to_string()))
                })?);
                continue;
            }
            let n = header.ok_or_else(|| err(ParseErrorKind::MissingHeader))?;
            let kind: GateKind = head
                .parse()
                .map_err(|_| err(ParseErrorKind::UnknownMnemonic(head.to_string())))?;
            let k = kind.arity();
            let name = kind.mnemonic().to_string();
            let (qtoks, angle) = if kind.takes_angle() {
                match args.len() {
                    l if l == k + 1 => (&args[..k], Some(args[k])),
                    l if l == k => {
                        return Err(err(if parse_index(args[k - 1]).is_some() {
                            ParseErrorKind::MissingAngle(name)
                        } else {
                            ParseErrorKind::ArityMismatch { gate: name, expected: k, got: k - 1 }
                        }))
                    }
                    l => {
                        return Err(err(ParseErrorKind::ArityMismatch {
                            gate: name,
                            expected: k,
                            got: if l > k { l - 1 } else { l },
                        }))
                    }
                }
            } else {
                if args.len() == k + 1 && parse_index(args[k]).is_none() && args[k].parse::<f64>().is_ok() {
                    return Err(err(ParseErrorKind::UnexpectedAngle(name)));
                }
                if args.len() != k {
                    return Err(err(ParseErrorKind::ArityMismatch {
                        gate: name,
                        expected: k,
                        got: args.len(),
                    }));
                }
                (args, None)
            };
            let mut targets = Vec::with_capacity(k);
            for t in qtoks {
                let q = parse_index(t).ok_or_else(|| err(ParseErrorKind::BadQubitIndex(t.to_string())))?;
                if q >= n {
                    return Err(err(ParseErrorKind::QubitOutOfRange {
                        index: t.to_string(),
                        qubits: n,
                    }));
                }
                if targets.contains(&q) {
                    return Err(err(ParseErrorKind::RepeatedQubit(q)));
                }
                targets.push(q);
            }
            let angle = match angle {
                Some(a) => Some(
                    a.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| err(ParseErrorKind::BadAngle(a.to_string())))?,
                ),
                None => None,
            };
            ops.push(GateApplication::new(kind, targets, angle));
        }
        let num_qubits = header.ok_or(ParseError {
            line: text.lines().count().max(1),
            kind: ParseErrorKind::MissingHeader,
        })?;
        Ok(Circuit { num_qubits, ops })
    }

    /// Parses raw bytes; invalid UTF-8 is a diagnostic, not a panic.
    pub fn parse_bytes(bytes: &[u8]) -> Result<Circuit, ParseError> {
        match std::str::from_utf8(bytes) {
            Ok(s) => Circuit::parse(s),
            Err(e) => Err(ParseError {
                line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
                kind: ParseErrorKind::InvalidUtf8,
            }),
        }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Fresh `|0...0>` on `kind`, then every gate in order.
    pub fn run(&self, kind: BackendKind, precision: PrecisionConfig) -> Result<QuantumState> {
        self.run_on(&Registry::default(), kind.name(), precision)
    }

    pub fn run_on(&self, registry: &Registry, backend: &str, precision: PrecisionConfig) -> Result<QuantumState> {
        let mut s = QuantumState::from_registry(registry, backend, self.num_qubits, precision)?;
        s.apply_all(&self.ops)?;
        Ok(s)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for g in &self.ops {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Circuit {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Circuit::parse(s)
    }
}

fn parse_index(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}
