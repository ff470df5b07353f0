//! The backend contract and the user-facing [`QuantumState`].
//!
//! A backend supplies a [`Backend`] factory plus a [`StateHandle`]
//! implementation. Handles are persistent: applying a gate returns a new
//! handle and leaves the old one answering queries exactly as before.
//! [`QuantumState`] validates arguments once and delegates, so a backend can
//! assume well-formed input.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::gate::GateApplication;
use crate::numerics::{Amplitude, PrecisionConfig};

/// Exact number of outcomes; can exceed `2^64` (up to `2^n`).
pub type OutcomeCount = rug::Integer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Bdd,
    Wbdd,
    Cflobdd,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Bdd, BackendKind::Wbdd, BackendKind::Cflobdd];

    /// Registry name (lower case).
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Bdd => "bdd",
            BackendKind::Wbdd => "wbdd",
            BackendKind::Cflobdd => "cflobdd",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_ascii_uppercase())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BackendKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownBackend(s.to_string()))
    }
}

/// Map from qubit index to a required bit value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialAssignment {
    bits: BTreeMap<usize, bool>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// All `n` qubits set to `value`.
    pub fn all(n: usize, value: bool) -> Self {
        (0..n).map(|q| (q, value)).collect()
    }

    /// Total assignment from a bitstring, qubit 0 first.
    pub fn from_bits(bits: &[bool]) -> Self {
        bits.iter().copied().enumerate().collect()
    }

    pub fn set(&mut self, q: usize, value: bool) -> &mut Self {
        self.bits.insert(q, value);
        self
    }

    pub fn with(mut self, q: usize, value: bool) -> Self {
        self.bits.insert(q, value);
        self
    }

    pub fn get(&self, q: usize) -> Option<bool> {
        self.bits.get(&q).copied()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Assigned qubits in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.bits.iter().map(|(&q, &b)| (q, b))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.bits.keys().next_back() {
            Some(&q) if q >= n => Err(Error::Argument(format!(
                "qubit index {q} out of range for {n} qubits"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromIterator<(usize, bool)> for PartialAssignment {
    fn from_iter<I: IntoIterator<Item = (usize, bool)>>(iter: I) -> Self {
        PartialAssignment {
            bits: iter.into_iter().collect(),
        }
    }
}

impl<const N: usize> From<[(usize, u8); N]> for PartialAssignment {
    fn from(pairs: [(usize, u8); N]) -> Self {
        pairs.into_iter().map(|(q, b)| (q, b != 0)).collect()
    }
}

/// `q=b` pairs separated by commas, e.g. `0=1,3=0`. An empty string is the
/// empty assignment.
impl FromStr for PartialAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = PartialAssignment::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let bad = || Error::Argument(format!("malformed assignment token `{tok}`"));
            let (q, b) = tok.split_once('=').ok_or_else(bad)?;
            let q: usize = q.trim().parse().map_err(|_| bad())?;
            let b = match b.trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            if out.bits.insert(q, b).is_some() {
                return Err(Error::Argument(format!("qubit {q} assigned twice in `{s}`")));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (q, b)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}={}", b as u8)?;
        }
        Ok(())
    }
}

/// Measured basis string; index `q` holds qubit `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Basis index with qubit 0 as the most significant bit; `None` past 128 bits.
    pub fn index(&self) -> Option<u128> {
        (self.0.len() <= 128).then(|| self.0.iter().fold(0u128, |acc, &b| acc << 1 | b as u128))
    }

    pub fn from_index(index: u128, n: usize) -> Self {
        BitString((0..n).map(|q| (index >> (n - 1 - q)) & 1 == 1).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Argument(format!("`{s}` is not a bitstring"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// One immutable state of some backend. Arguments are validated by
/// [`QuantumState`] before they reach an implementation.
pub trait StateHandle {
    fn backend_name(&self) -> &str;

    fn num_qubits(&self) -> usize;

    fn precision(&self) -> &PrecisionConfig;

    fn apply_gate(&self, g: &GateApplication) -> Result<Box<dyn StateHandle>>;

    /// Total probability of the basis states consistent with `m`.
    fn prob(&self, m: &PartialAssignment) -> Result<f64>;

    /// Draws one basis state with probability `|f(x)|^2`; the state is unchanged.
    fn measure(&self, rng: &mut dyn RngCore) -> BitString;

    /// Number of basis states whose probability is within `tol` of `p`.
    fn measurement_counts(&self, p: f64, tol: f64) -> Result<OutcomeCount>;

    /// `f(x)` for a total assignment, qubit 0 first.
    fn amplitude(&self, bits: &[bool]) -> Amplitude;

    /// Number of distinct diagram nodes (or array cells) backing the state.
    fn node_count(&self) -> usize;

    /// Representation equality: same manager and same canonical root.
    fn same_representation(&self, other: &dyn StateHandle) -> bool;

    fn as_any(&self) -> &dyn Any;
}

/// Factory half of the extension contract.
pub trait Backend {
    fn name(&self) -> &str;

    /// `|0...0>` on `n` qubits in a fresh manager.
    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> Result<Box<dyn StateHandle>>;

    /// State with the given `2^n` amplitudes (qubit 0 most significant).
    fn from_amplitudes(
        &self,
        n: usize,
        amplitudes: &[Amplitude],
        precision: &PrecisionConfig,
    ) -> Result<Box<dyn StateHandle>> {
        let _ = (n, amplitudes, precision);
        Err(Error::Config(format!(
            "backend `{}` cannot build a state from amplitudes",
            self.name()
        )))
    }
}

/// Name-indexed plug-in table. The dense oracle is always present.
pub struct Registry {
    backends: Vec<Rc<dyn Backend>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty_with_dense();
        r.register(Rc::new(crate::mtbdd::BddBackend));
        r.register(Rc::new(crate::wbdd::WbddBackend));
        r.register(Rc::new(crate::cflobdd::CflobddBackend));
        // keep the dense oracle last in listings
        let dense = r.backends.remove(0);
        r.backends.push(dense);
        r
    }
}

impl Registry {
    /// A registry holding only the dense oracle.
    pub fn empty_with_dense() -> Self {
        Registry {
            backends: vec![Rc::new(crate::dense::DenseBackend)],
        }
    }

    /// Adds or replaces (by case-insensitive name) a backend.
    pub fn register(&mut self, backend: Rc<dyn Backend>) {
        let name = backend.name().to_ascii_lowercase();
        if let Some(slot) = self
            .backends
            .iter_mut()
            .find(|b| b.name().eq_ignore_ascii_case(&name))
        {
            *slot = backend;
        } else {
            self.backends.push(backend);
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.backends
            .iter()
            .map(|b| b.name().to_ascii_lowercase())
            .collect()
    }

    pub fn resolve(&self, name: &str) -> Result<Rc<dyn Backend>> {
        self.backends
            .iter()
            .find(|b| b.name().eq_ignore_ascii_case(name))
            .cloned()
            .ok_or_else(|| Error::UnknownBackend(name.to_string()))
    }
}

/// A backend-tagged quantum state with the gate-method API.
///
/// Gate methods replace the held handle; [`QuantumState::apply`] returns a
/// new state and leaves `self` untouched.
///
/// ```
/// use qsym::{BackendKind, PartialAssignment, QuantumState};
///
/// let n = 16;
/// let mut qs = QuantumState::new(BackendKind::Cflobdd, n).unwrap();
/// qs.h(0).unwrap();
/// for i in 1..n {
///     qs.cx(0, i).unwrap();
/// }
/// let p = qs.prob(&PartialAssignment::all(n, true)).unwrap();
/// assert!((p - 0.5).abs() < 1e-8);
/// ```
#[derive(Clone)]
pub struct QuantumState {
    handle: Rc<dyn StateHandle>,
}

impl fmt::Debug for QuantumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumState")
            .field("backend", &self.handle.backend_name())
            .field("num_qubits", &self.handle.num_qubits())
            .field("nodes", &self.handle.node_count())
            .finish()
    }
}

macro_rules! gate_methods {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(pub fn $name(&mut self, $($arg: $ty),*) -> Result<&mut Self> {
            self.apply_mut(&GateApplication::$name($($arg),*))
        })*
    };
}

impl QuantumState {
    /// `|0...0>` at the default precision.
    pub fn new(kind: BackendKind, n: usize) -> Result<Self> {
        Self::with_precision(kind, n, PrecisionConfig::default())
    }

    pub fn with_precision(kind: BackendKind, n: usize, precision: PrecisionConfig) -> Result<Self> {
        Self::from_registry(&Registry::default(), kind.name(), n, precision)
    }

    /// Looks `backend` up in `registry` (case-insensitively).
    pub fn from_registry(
        registry: &Registry,
        backend: &str,
        n: usize,
        precision: PrecisionConfig,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("a state needs at least one qubit".into()));
        }
        let b = registry.resolve(backend)?;
        Ok(QuantumState {
            handle: b.new_state(n, &precision)?.into(),
        })
    }

    /// State with explicit amplitudes; they should be normalized.
    pub fn from_amplitudes(
        registry: &Registry,
        backend: &str,
        amplitudes: &[Amplitude],
        precision: PrecisionConfig,
    ) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let b = registry.resolve(backend)?;
        Ok(QuantumState {
            handle: b.from_amplitudes(n, amplitudes, &precision)?.into(),
        })
    }

    pub fn from_handle(handle: Box<dyn StateHandle>) -> Self {
        QuantumState {
            handle: handle.into(),
        }
    }

    pub fn handle(&self) -> &dyn StateHandle {
        &*self.handle
    }

    pub fn backend_name(&self) -> &str {
        self.handle.backend_name()
    }

    pub fn num_qubits(&self) -> usize {
        self.handle.num_qubits()
    }

    pub fn precision(&self) -> &PrecisionConfig {
        self.handle.precision()
    }

    pub fn node_count(&self) -> usize {
        self.handle.node_count()
    }

    /// Persistent application: `self` keeps its old value.
    pub fn apply(&self, g: &GateApplication) -> Result<QuantumState> {
        g.validate(self.num_qubits())?;
        Ok(QuantumState {
            handle: self.handle.apply_gate(g)?.into(),
        })
    }

    pub fn apply_mut(&mut self, g: &GateApplication) -> Result<&mut Self> {
        *self = self.apply(g)?;
        Ok(self)
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a GateApplication>) -> Result<&mut Self> {
        for g in gates {
            self.apply_mut(g)?;
        }
        Ok(self)
    }

    gate_methods! {
        i(q: usize); h(q: usize); x(q: usize); y(q: usize); z(q: usize);
        s(q: usize); sdg(q: usize); t(q: usize); tdg(q: usize); p(q: usize, theta: f64);
        cx(c: usize, t: usize); cz(a: usize, b: usize); cp(c: usize, t: usize, theta: f64);
        swap(a: usize, b: usize); iswap(a: usize, b: usize);
        cswap(c: usize, a: usize, b: usize); ccx(c1: usize, c2: usize, t: usize);
    }

    pub fn prob(&self, m: &PartialAssignment) -> Result<f64> {
        m.validate(self.num_qubits())?;
        self.handle.prob(m)
    }

    pub fn measure(&self, rng: &mut dyn RngCore) -> BitString {
        self.handle.measure(rng)
    }

    /// Counts with the default tolerance `2^10 * leaf_epsilon`.
    pub fn measurement_counts(&self, p: f64) -> Result<OutcomeCount> {
        let tol = self.precision().counts_tolerance();
        self.measurement_counts_with_tol(p, tol)
    }

    pub fn measurement_counts_with_tol(&self, p: f64, tol: f64) -> Result<OutcomeCount> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
        }
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::Argument(format!("tolerance {tol} must be finite and >= 0")));
        }
        self.handle.measurement_counts(p, tol)
    }

    pub fn amplitude(&self, bits: &[bool]) -> Result<Amplitude> {
        if bits.len() != self.num_qubits() {
            return Err(Error::Argument(format!(
                "expected {} bits, got {}",
                self.num_qubits(),
                bits.len()
            )));
        }
        Ok(self.handle.amplitude(bits))
    }

    /// Amplitude of the basis state with index `index` (qubit 0 most significant).
    pub fn amplitude_at(&self, index: u128) -> Result<Amplitude> {
        let n = self.num_qubits();
        if n < 128 && index >> n != 0 {
            return Err(Error::Argument(format!("basis index {index} out of range")));
        }
        self.amplitude(BitString::from_index(index, n).bits())
    }

    /// Every amplitude, for `n <= 24`.
    pub fn to_vec(&self) -> Result<Vec<Amplitude>> {
        let n = self.num_qubits();
        if n > 24 {
            return Err(Error::Resource(format!("refusing to expand {n} qubits densely")));
        }
        (0..1u128 << n).map(|i| self.amplitude_at(i)).collect()
    }

    pub fn same_representation(&self, other: &QuantumState) -> bool {
        self.handle.same_representation(&*other.handle)
    }
}
