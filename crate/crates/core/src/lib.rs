//! Symbolic quantum-circuit simulation over canonical decision diagrams.
//!
//! Three interchangeable backends represent a `2^n` amplitude vector:
//!
//! * `bdd`: multi-terminal BDD with complex leaves ([`mtbdd`])
//! * `wbdd`: weighted BDD with normalized complex edge weights ([`wbdd`])
//! * `cflobdd`: hierarchical CFLOBDD groupings ([`cflobdd`])
//!
//! A fourth backend, `dense`, is the brute-force oracle ([`dense`]).
//!
//! Every backend answers the same three queries: [`QuantumState::prob`] of a
//! partial assignment, [`QuantumState::measure`] (sampling without collapse)
//! and [`QuantumState::measurement_counts`] (exact, as a big integer).

pub mod bench;
pub mod cflobdd;
pub mod circuit;
pub mod cli;
pub mod dd;
pub mod dense;
pub mod error;
pub mod gate;
pub mod mtbdd;
pub mod numerics;
pub mod programs;
pub mod state;
pub mod wbdd;

pub use circuit::{Circuit, ParseError, ParseErrorKind};
pub use error::{Error, Result};
pub use gate::{GateApplication, GateKind};
pub use numerics::{Amplitude, PrecisionConfig};
pub use state::{
    Backend, BackendKind, BitString, OutcomeCount, PartialAssignment, QuantumState, Registry,
    StateHandle,
};
