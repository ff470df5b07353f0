//! Multi-terminal BDD backend: reduced ordered diagrams with complex leaves.
//!
//! Vectors are functions of the qubit variables `0..n`. Matrices use the
//! interleaved order `x0, y0, x1, y1, ...`, stored as variable `2q` for the
//! row bit and `2q + 1` for the column bit of qubit `q`.

use std::any::Any;
use std::cell::{OnceCell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use rand::RngCore;
use rug::{Float, Integer};

use crate::dd::{AmpId, AmplitudeTable, OpCache, UniqueTable};
use crate::error::Result;
use crate::gate::{GateApplication, Mat2, OperatorTerm};
use crate::numerics::{Amplitude, PrecisionConfig};
use crate::state::{Backend, BitString, OutcomeCount, PartialAssignment, StateHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MtbddNode {
    Terminal(AmpId),
    Internal { var: u32, lo: NodeId, hi: NodeId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Mul,
}

pub struct MtbddManager {
    amps: AmplitudeTable,
    nodes: UniqueTable<MtbddNode>,
    apply_cache: OpCache<(BinOp, NodeId, NodeId), NodeId>,
    matvec_cache: OpCache<(NodeId, NodeId, u32, u32), NodeId>,
    // identity_tails[n][q]: identity on qubits q..n
    identity_tails: HashMap<u32, Vec<NodeId>>,
}

impl MtbddManager {
    pub fn new(precision: PrecisionConfig) -> Self {
        let mut m = MtbddManager {
            amps: AmplitudeTable::new(precision),
            nodes: UniqueTable::new("mtbdd node"),
            apply_cache: OpCache::default(),
            matvec_cache: OpCache::default(),
            identity_tails: HashMap::new(),
        };
        // node 0 is the zero terminal, node 1 the one terminal
        m.nodes.intern(MtbddNode::Terminal(AmpId::ZERO)).unwrap();
        m.nodes.intern(MtbddNode::Terminal(AmpId::ONE)).unwrap();
        m
    }

    pub const ZERO: NodeId = NodeId(0);
    pub const ONE: NodeId = NodeId(1);

    pub fn precision(&self) -> &PrecisionConfig {
        self.amps.precision()
    }

    fn prec(&self) -> u32 {
        self.amps.prec()
    }

    pub fn set_caches_enabled(&mut self, on: bool) {
        self.apply_cache.set_enabled(on);
        self.matvec_cache.set_enabled(on);
    }

    pub fn node(&self, id: NodeId) -> &MtbddNode {
        self.nodes.get(id.0)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Variable of the node; terminals report `u32::MAX`.
    pub fn var(&self, id: NodeId) -> u32 {
        match self.node(id) {
            MtbddNode::Terminal(_) => u32::MAX,
            MtbddNode::Internal { var, .. } => *var,
        }
    }

    pub fn terminal_value(&self, id: NodeId) -> Option<&Amplitude> {
        match self.node(id) {
            MtbddNode::Terminal(a) => Some(self.amps.value(*a)),
            MtbddNode::Internal { .. } => None,
        }
    }

    pub fn amplitude(&self, id: AmpId) -> &Amplitude {
        self.amps.value(id)
    }

    pub fn constant(&mut self, a: &Amplitude) -> Result<NodeId> {
        let id = self.amps.intern(a)?;
        Ok(NodeId(self.nodes.intern(MtbddNode::Terminal(id))?))
    }

    /// Reduced node constructor.
    pub fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> Result<NodeId> {
        if lo == hi {
            return Ok(lo);
        }
        debug_assert!(var < self.var(lo) && var < self.var(hi));
        Ok(NodeId(self.nodes.intern(MtbddNode::Internal { var, lo, hi })?))
    }

    /// Cofactors with respect to `var`; nodes above or not testing `var` are their own cofactors.
    fn cofactors(&self, f: NodeId, var: u32) -> (NodeId, NodeId) {
        match *self.node(f) {
            MtbddNode::Internal { var: v, lo, hi } if v == var => (lo, hi),
            _ => (f, f),
        }
    }

    pub fn apply(&mut self, op: BinOp, f: NodeId, g: NodeId) -> Result<NodeId> {
        let (f, g) = if f <= g { (f, g) } else { (g, f) };
        match op {
            BinOp::Add if f == Self::ZERO => return Ok(g),
            BinOp::Mul if f == Self::ZERO => return Ok(Self::ZERO),
            BinOp::Mul if f == Self::ONE => return Ok(g),
            _ => {}
        }
        if let (Some(a), Some(b)) = (self.terminal_value(f), self.terminal_value(g)) {
            let r = match op {
                BinOp::Add => a + b,
                BinOp::Mul => a * b,
            };
            return self.constant(&r);
        }
        if let Some(r) = self.apply_cache.get(&(op, f, g)) {
            return Ok(r);
        }
        let var = self.var(f).min(self.var(g));
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let lo = self.apply(op, f0, g0)?;
        let hi = self.apply(op, f1, g1)?;
        let r = self.mk(var, lo, hi)?;
        self.apply_cache.put((op, f, g), r);
        Ok(r)
    }

    pub fn add(&mut self, f: NodeId, g: NodeId) -> Result<NodeId> {
        self.apply(BinOp::Add, f, g)
    }

    pub fn scale(&mut self, f: NodeId, a: &Amplitude) -> Result<NodeId> {
        let c = self.constant(a)?;
        self.apply(BinOp::Mul, f, c)
    }

    fn identity_tail(&mut self, q: u32, n: u32) -> Result<NodeId> {
        if !self.identity_tails.contains_key(&n) {
            let mut tails = vec![Self::ONE; n as usize + 1];
            for k in (0..n).rev() {
                let cur = tails[k as usize + 1];
                let r0 = self.mk(2 * k + 1, cur, Self::ZERO)?;
                let r1 = self.mk(2 * k + 1, Self::ZERO, cur)?;
                tails[k as usize] = self.mk(2 * k, r0, r1)?;
            }
            self.identity_tails.insert(n, tails);
        }
        Ok(self.identity_tails[&n][q as usize])
    }

    /// Matrix `F (x) tail` at qubit `q`.
    fn factor_level(&mut self, q: u32, f: &Mat2, tail: NodeId) -> Result<NodeId> {
        let mut e = [Self::ZERO; 4];
        for (slot, a) in e.iter_mut().zip(f) {
            *slot = self.scale(tail, a)?;
        }
        let r0 = self.mk(2 * q + 1, e[0], e[1])?;
        let r1 = self.mk(2 * q + 1, e[2], e[3])?;
        self.mk(2 * q, r0, r1)
    }

    fn term_matrix(&mut self, term: &OperatorTerm, n: u32) -> Result<NodeId> {
        // the coefficient rides on the deepest factor so everything below it is
        // a plain identity tail
        let deepest = term.factors.iter().map(|(q, _)| *q).max().unwrap_or(0) as u32;
        let mut cur = self.identity_tail(deepest + 1, n)?;
        for q in (0..=deepest).rev() {
            cur = match term.factor(q as usize) {
                Some(f) if q == deepest => {
                    let scaled: Vec<Amplitude> = f.iter().map(|a| a * &term.coeff).collect();
                    let f: Mat2 = scaled.try_into().expect("four entries");
                    self.factor_level(q, &f, cur)?
                }
                Some(f) => self.factor_level(q, f, cur)?,
                None => {
                    let r0 = self.mk(2 * q + 1, cur, Self::ZERO)?;
                    let r1 = self.mk(2 * q + 1, Self::ZERO, cur)?;
                    self.mk(2 * q, r0, r1)?
                }
            };
        }
        Ok(cur)
    }

    /// The `n`-qubit extension of `g` over the interleaved variables.
    pub fn gate_matrix(&mut self, g: &GateApplication, n: usize) -> Result<NodeId> {
        let mut acc = Self::ZERO;
        for term in g.operator_terms(self.prec()) {
            let t = self.term_matrix(&term, n as u32)?;
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    /// `w(x) = sum_y M(x, y) v(y)` for an `n`-qubit matrix and vector.
    pub fn matvec(&mut self, m: NodeId, v: NodeId, n: usize) -> Result<NodeId> {
        self.matvec_rec(m, v, 0, n as u32)
    }

    fn matvec_rec(&mut self, m: NodeId, v: NodeId, q: u32, n: u32) -> Result<NodeId> {
        if m == Self::ZERO || v == Self::ZERO {
            return Ok(Self::ZERO);
        }
        if q == n {
            return self.apply(BinOp::Mul, m, v);
        }
        if m == self.identity_tail(q, n)? {
            return Ok(v);
        }
        let key = (m, v, q, n);
        if let Some(r) = self.matvec_cache.get(&key) {
            return Ok(r);
        }
        let (m0, m1) = self.cofactors(m, 2 * q);
        let (m00, m01) = self.cofactors(m0, 2 * q + 1);
        let (m10, m11) = self.cofactors(m1, 2 * q + 1);
        let (v0, v1) = self.cofactors(v, q);
        let a = self.matvec_rec(m00, v0, q + 1, n)?;
        let b = self.matvec_rec(m01, v1, q + 1, n)?;
        let lo = self.add(a, b)?;
        let a = self.matvec_rec(m10, v0, q + 1, n)?;
        let b = self.matvec_rec(m11, v1, q + 1, n)?;
        let hi = self.add(a, b)?;
        let r = self.mk(q, lo, hi)?;
        self.matvec_cache.put(key, r);
        Ok(r)
    }

    /// Cofactor of `f` under `m` (keys are variable indices).
    pub fn restrict(&mut self, f: NodeId, m: &PartialAssignment) -> Result<NodeId> {
        let mut memo = HashMap::new();
        self.restrict_rec(f, m, &mut memo)
    }

    fn restrict_rec(
        &mut self,
        f: NodeId,
        m: &PartialAssignment,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> Result<NodeId> {
        let MtbddNode::Internal { var, lo, hi } = *self.node(f) else {
            return Ok(f);
        };
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let r = match m.get(var as usize) {
            Some(false) => self.restrict_rec(lo, m, memo)?,
            Some(true) => self.restrict_rec(hi, m, memo)?,
            None => {
                let l = self.restrict_rec(lo, m, memo)?;
                let h = self.restrict_rec(hi, m, memo)?;
                self.mk(var, l, h)?
            }
        };
        memo.insert(f, r);
        Ok(r)
    }

    /// Number of assignments of variables `0..nvars` reaching each terminal.
    pub fn path_count(&self, f: NodeId, nvars: usize) -> BTreeMap<AmpId, OutcomeCount> {
        self.path_count_over(f, &vec![true; nvars])
    }

    /// Like [`Self::path_count`], counting only variables `v` with `counted[v]`.
    /// Uncounted variables must not occur in `f`.
    pub fn path_count_over(&self, f: NodeId, counted: &[bool]) -> BTreeMap<AmpId, OutcomeCount> {
        let mut prefix = Vec::with_capacity(counted.len() + 1);
        prefix.push(0u32);
        for &c in counted {
            prefix.push(prefix.last().unwrap() + c as u32);
        }
        let nvars = counted.len() as u32;
        let level = |v: u32| prefix[v.min(nvars) as usize];
        let mut memo: HashMap<NodeId, Rc<BTreeMap<AmpId, Integer>>> = HashMap::new();
        let top = self.count_rec(f, &level, &mut memo);
        let skip = level(self.var(f));
        top.iter().map(|(&k, c)| (k, Integer::from(c << skip))).collect()
    }

    fn count_rec(
        &self,
        f: NodeId,
        level: &dyn Fn(u32) -> u32,
        memo: &mut HashMap<NodeId, Rc<BTreeMap<AmpId, Integer>>>,
    ) -> Rc<BTreeMap<AmpId, Integer>> {
        if let Some(r) = memo.get(&f) {
            return r.clone();
        }
        let r = match *self.node(f) {
            MtbddNode::Terminal(a) => BTreeMap::from([(a, Integer::from(1))]),
            MtbddNode::Internal { var, lo, hi } => {
                let mut out: BTreeMap<AmpId, Integer> = BTreeMap::new();
                for child in [lo, hi] {
                    let sub = self.count_rec(child, level, memo);
                    let skip = level(self.var(child)) - level(var) - 1;
                    for (&k, c) in sub.iter() {
                        *out.entry(k).or_default() += Integer::from(c << skip);
                    }
                }
                out
            }
        };
        let r = Rc::new(r);
        memo.insert(f, r.clone());
        r
    }

    /// Value at an assignment given as a predicate on variables.
    pub fn eval(&self, f: NodeId, assignment: impl Fn(u32) -> bool) -> &Amplitude {
        let mut cur = f;
        loop {
            match *self.node(cur) {
                MtbddNode::Terminal(a) => return self.amps.value(a),
                MtbddNode::Internal { var, lo, hi } => {
                    cur = if assignment(var) { hi } else { lo };
                }
            }
        }
    }

    /// Vector with the given `2^n` entries.
    pub fn from_values(&mut self, values: &[Amplitude]) -> Result<NodeId> {
        let n = values.len().trailing_zeros();
        self.from_values_rec(values, 0, n)
    }

    fn from_values_rec(&mut self, values: &[Amplitude], q: u32, n: u32) -> Result<NodeId> {
        if q == n {
            return self.constant(&values[0]);
        }
        let (l, h) = values.split_at(values.len() / 2);
        let lo = self.from_values_rec(l, q + 1, n)?;
        let hi = self.from_values_rec(h, q + 1, n)?;
        self.mk(q, lo, hi)
    }

    /// `|bits>`, qubit 0 first.
    pub fn basis_state(&mut self, bits: &[bool]) -> Result<NodeId> {
        let mut cur = Self::ONE;
        for (q, &b) in bits.iter().enumerate().rev() {
            cur = if b {
                self.mk(q as u32, Self::ZERO, cur)?
            } else {
                self.mk(q as u32, cur, Self::ZERO)?
            };
        }
        Ok(cur)
    }

    pub fn reachable(&self, f: NodeId) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![f];
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            if let MtbddNode::Internal { lo, hi, .. } = *self.node(x) {
                stack.push(lo);
                stack.push(hi);
            }
        }
        seen.len()
    }

    /// Squared-magnitude mass below every node reachable from `f`, where the
    /// mass of a node sums over the variables from its own to `n`.
    fn masses(&self, f: NodeId, n: u32) -> HashMap<NodeId, Float> {
        let prec = self.prec() + 16;
        let mut out: HashMap<NodeId, Float> = HashMap::new();
        let mut order = Vec::new();
        let mut stack = vec![(f, false)];
        while let Some((x, done)) = stack.pop() {
            if done {
                order.push(x);
                continue;
            }
            if out.contains_key(&x) {
                continue;
            }
            out.insert(x, Float::new(prec));
            stack.push((x, true));
            if let MtbddNode::Internal { lo, hi, .. } = *self.node(x) {
                stack.push((lo, false));
                stack.push((hi, false));
            }
        }
        for x in order {
            let mass = match *self.node(x) {
                MtbddNode::Terminal(a) => Float::with_val(prec, self.amps.value(a).norm_sqr()),
                MtbddNode::Internal { var, lo, hi } => {
                    let w = |c: NodeId| -> Float {
                        let skip = self.var(c).min(n) - var - 1;
                        Float::with_val(prec, &out[&c] << skip)
                    };
                    Float::with_val(prec, w(lo) + w(hi))
                }
            };
            out.insert(x, mass);
        }
        out
    }
}

pub(crate) fn uniform01(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn random_bit(rng: &mut dyn RngCore) -> bool {
    rng.next_u64() >> 63 == 1
}

pub struct BddBackend;

impl Backend for BddBackend {
    fn name(&self) -> &str {
        "bdd"
    }

    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> Result<Box<dyn StateHandle>> {
        let mut mgr = MtbddManager::new(*precision);
        let root = mgr.basis_state(&vec![false; n])?;
        Ok(Box::new(BddState::new(Rc::new(RefCell::new(mgr)), root, n)))
    }

    fn from_amplitudes(
        &self,
        n: usize,
        amplitudes: &[Amplitude],
        precision: &PrecisionConfig,
    ) -> Result<Box<dyn StateHandle>> {
        let mut mgr = MtbddManager::new(*precision);
        let root = mgr.from_values(amplitudes)?;
        Ok(Box::new(BddState::new(Rc::new(RefCell::new(mgr)), root, n)))
    }
}

pub struct BddState {
    mgr: Rc<RefCell<MtbddManager>>,
    root: NodeId,
    n: usize,
    precision: PrecisionConfig,
    masses: OnceCell<HashMap<NodeId, Float>>,
}

impl BddState {
    pub fn new(mgr: Rc<RefCell<MtbddManager>>, root: NodeId, n: usize) -> Self {
        let precision = *mgr.borrow().precision();
        BddState {
            mgr,
            root,
            n,
            precision,
            masses: OnceCell::new(),
        }
    }

    pub fn manager(&self) -> &Rc<RefCell<MtbddManager>> {
        &self.mgr
    }

    pub fn root(&self) -> NodeId {
        self.root
    }
}

impl StateHandle for BddState {
    fn backend_name(&self) -> &str {
        "bdd"
    }

    fn num_qubits(&self) -> usize {
        self.n
    }

    fn precision(&self) -> &PrecisionConfig {
        &self.precision
    }

    fn apply_gate(&self, g: &GateApplication) -> Result<Box<dyn StateHandle>> {
        let root = {
            let mut m = self.mgr.borrow_mut();
            let u = m.gate_matrix(g, self.n)?;
            m.matvec(u, self.root, self.n)?
        };
        Ok(Box::new(BddState::new(self.mgr.clone(), root, self.n)))
    }

    fn prob(&self, assignment: &PartialAssignment) -> Result<f64> {
        let mut m = self.mgr.borrow_mut();
        let r = m.restrict(self.root, assignment)?;
        let counted: Vec<bool> = (0..self.n).map(|q| assignment.get(q).is_none()).collect();
        let counts = m.path_count_over(r, &counted);
        let prec = m.prec() + 16;
        let mut total = Float::new(prec);
        for (a, c) in &counts {
            total += Float::with_val(prec, m.amplitude(*a).norm_sqr() * c);
        }
        Ok(total.to_f64())
    }

    fn measure(&self, rng: &mut dyn RngCore) -> BitString {
        let m = self.mgr.borrow();
        let n = self.n as u32;
        let masses = self.masses.get_or_init(|| m.masses(self.root, n));
        let mut bits = Vec::with_capacity(self.n);
        let mut cur = self.root;
        for q in 0..n {
            match *m.node(cur) {
                MtbddNode::Internal { var, lo, hi } if var == q => {
                    let w = |c: NodeId| {
                        let skip = m.var(c).min(n) - var - 1;
                        Float::with_val(masses[&c].prec(), &masses[&c] << skip)
                    };
                    let (wl, wh) = (w(lo), w(hi));
                    let p0 = Float::with_val(wl.prec(), &wl / Float::with_val(wl.prec(), &wl + &wh));
                    let take_lo = uniform01(rng) < p0.to_f64();
                    bits.push(!take_lo);
                    cur = if take_lo { lo } else { hi };
                }
                _ => bits.push(random_bit(rng)),
            }
        }
        BitString(bits)
    }

    fn measurement_counts(&self, p: f64, tol: f64) -> Result<OutcomeCount> {
        let m = self.mgr.borrow();
        let counts = m.path_count(self.root, self.n);
        Ok(sum_matching(
            counts.iter().map(|(a, c)| (m.amplitude(*a).norm_sqr(), c)),
            p,
            tol,
        ))
    }

    fn amplitude(&self, bits: &[bool]) -> Amplitude {
        self.mgr.borrow().eval(self.root, |v| bits[v as usize]).clone()
    }

    fn node_count(&self) -> usize {
        self.mgr.borrow().reachable(self.root)
    }

    fn same_representation(&self, other: &dyn StateHandle) -> bool {
        other
            .as_any()
            .downcast_ref::<BddState>()
            .is_some_and(|o| Rc::ptr_eq(&self.mgr, &o.mgr) && o.root == self.root)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Sums the counts of buckets whose probability lies within `tol` of `p`.
pub(crate) fn sum_matching<'a>(
    buckets: impl Iterator<Item = (Float, &'a Integer)>,
    p: f64,
    tol: f64,
) -> Integer {
    let mut total = Integer::new();
    for (prob, c) in buckets {
        let diff = Float::with_val(prob.prec().max(64), &prob - p).abs();
        if diff <= tol {
            total += c;
        }
    }
    total
}
