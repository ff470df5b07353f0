//! Weighted BDD backend. The value of an assignment is the root weight times
//! the product of the edge weights along its path; every node ends in the
//! single shared terminal.
//!
//! Normalization: a low edge with nonzero weight has weight exactly 1; a low
//! edge with weight 0 points to the terminal and forces the high weight to 1.
//! Zero-weight edges always point to the terminal and no node has identical
//! low and high edges.
//!
//! Edge weights are ratios of arbitrary magnitude, so they are interned at
//! relative resolution `leaf_epsilon`, and zero tests scale a weight by the
//! largest entry below its node.

use std::any::Any;
use std::cell::{OnceCell, RefCell};
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use rand::RngCore;
use rug::{Float, Integer};

use crate::dd::{AmpId, AmplitudeTable, OpCache, UniqueTable};
use crate::error::Result;
use crate::gate::{GateApplication, Mat2, OperatorTerm};
use crate::mtbdd::{random_bit, sum_matching, uniform01};
use crate::numerics::{Amplitude, PrecisionConfig};
use crate::state::{Backend, BitString, OutcomeCount, PartialAssignment, StateHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

/// Interned edge stored inside a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub weight: AmpId,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum WbddNode {
    Terminal,
    Internal { var: u32, lo: Edge, hi: Edge },
}

/// Edge with a full-precision weight; roots and intermediate results.
#[derive(Clone, Debug, PartialEq)]
pub struct WEdge {
    pub weight: Amplitude,
    pub node: NodeId,
}

pub struct WbddManager {
    amps: AmplitudeTable,
    nodes: UniqueTable<WbddNode>,
    add_cache: OpCache<(NodeId, NodeId, AmpId), WEdge>,
    matvec_cache: OpCache<(NodeId, NodeId, u32, u32), WEdge>,
    identity_tails: HashMap<u32, Vec<NodeId>>,
    /// Squared largest magnitude of any entry below each node, by node id.
    peak_sq: Vec<Float>,
}

const PEAK_PREC: u32 = 32;

impl WbddManager {
    pub const TERMINAL: NodeId = NodeId(0);

    pub fn new(precision: PrecisionConfig) -> Self {
        let mut nodes = UniqueTable::new("wbdd node");
        nodes.intern(WbddNode::Terminal).unwrap();
        WbddManager {
            amps: AmplitudeTable::relative(precision),
            nodes,
            add_cache: OpCache::default(),
            matvec_cache: OpCache::default(),
            identity_tails: HashMap::new(),
            peak_sq: vec![Float::with_val(PEAK_PREC, 1)],
        }
    }

    /// `(nodes, amplitudes)` interned so far.
    pub fn table_sizes(&self) -> (usize, usize) {
        (self.nodes.len(), self.amps.len())
    }

    pub fn precision(&self) -> &PrecisionConfig {
        self.amps.precision()
    }

    fn prec(&self) -> u32 {
        self.amps.prec()
    }

    pub fn set_caches_enabled(&mut self, on: bool) {
        self.add_cache.set_enabled(on);
        self.matvec_cache.set_enabled(on);
    }

    pub fn node(&self, id: NodeId) -> &WbddNode {
        self.nodes.get(id.0)
    }

    pub fn weight(&self, id: AmpId) -> &Amplitude {
        self.amps.value(id)
    }

    pub fn var(&self, id: NodeId) -> u32 {
        match self.node(id) {
            WbddNode::Terminal => u32::MAX,
            WbddNode::Internal { var, .. } => *var,
        }
    }

    pub fn zero(&self) -> WEdge {
        WEdge {
            weight: Amplitude::zero(self.prec()),
            node: Self::TERMINAL,
        }
    }

    pub fn constant(&self, a: &Amplitude) -> WEdge {
        WEdge {
            weight: a.clone(),
            node: Self::TERMINAL,
        }
    }

    /// Whether the edge `(a, node)` denotes the zero vector. The weight alone
    /// is only the value on the all-low path, so it is scaled by the largest
    /// entry below `node`.
    fn is_zero(&self, a: &Amplitude, node: NodeId) -> bool {
        if a.is_zero() {
            return true;
        }
        if node == Self::TERMINAL {
            return self.amps.grid().key(a).is_zero();
        }
        let eps = self.amps.grid().eps();
        self.edge_peak_sq(&WEdge { weight: a.clone(), node }) < eps * eps
    }

    /// Whether `small` is below `leaf_epsilon` relative to `big`, entrywise.
    fn negligible(&self, small: &WEdge, big: &WEdge) -> bool {
        let eps = self.amps.grid().eps();
        let bound = Float::with_val(PEAK_PREC, self.edge_peak_sq(big) * (eps * eps));
        self.edge_peak_sq(small) <= bound
    }

    fn expand(&self, e: Edge) -> WEdge {
        WEdge {
            weight: self.amps.value(e.weight).clone(),
            node: e.node,
        }
    }

    fn edge_peak_sq(&self, e: &WEdge) -> Float {
        let w = Float::with_val(PEAK_PREC, e.weight.norm_sqr());
        w * &self.peak_sq[e.node.0 as usize]
    }

    /// Normalizing node constructor: returns the extracted factor and the
    /// canonical node.
    ///
    /// A child whose entries are all below `leaf_epsilon` times the sibling's
    /// largest entry is dropped. Without this, cancellation residue in a low
    /// edge would become the normalizer and blow up the high weight.
    pub fn mk(&mut self, var: u32, lo: WEdge, hi: WEdge) -> Result<WEdge> {
        let mut lz = self.is_zero(&lo.weight, lo.node);
        let mut hz = self.is_zero(&hi.weight, hi.node);
        if !lz && !hz {
            if self.negligible(&lo, &hi) {
                lz = true;
            } else if self.negligible(&hi, &lo) {
                hz = true;
            }
        }
        let zero_edge = Edge {
            weight: AmpId::ZERO,
            node: Self::TERMINAL,
        };
        if lz && hz {
            return Ok(self.zero());
        }
        let (factor, lo_e, hi_e) = if lz {
            let hi_e = Edge {
                weight: AmpId::ONE,
                node: hi.node,
            };
            (hi.weight, zero_edge, hi_e)
        } else {
            let lo_e = Edge {
                weight: AmpId::ONE,
                node: lo.node,
            };
            let hi_e = if hz {
                zero_edge
            } else {
                let r = self.amps.intern(&hi.weight.div(&lo.weight))?;
                if r == AmpId::ZERO {
                    zero_edge
                } else {
                    Edge {
                        weight: r,
                        node: hi.node,
                    }
                }
            };
            (lo.weight, lo_e, hi_e)
        };
        if lo_e == hi_e {
            return Ok(WEdge {
                weight: factor,
                node: lo_e.node,
            });
        }
        debug_assert!(var < self.var(lo_e.node) && var < self.var(hi_e.node));
        let node = NodeId(self.nodes.intern(WbddNode::Internal {
            var,
            lo: lo_e,
            hi: hi_e,
        })?);
        if node.0 as usize == self.peak_sq.len() {
            let l = self.edge_peak_sq(&self.expand(lo_e));
            let h = self.edge_peak_sq(&self.expand(hi_e));
            self.peak_sq.push(l.max(&h));
        }
        Ok(WEdge {
            weight: factor,
            node,
        })
    }

    fn scaled(e: &WEdge, k: &Amplitude) -> WEdge {
        WEdge {
            weight: &e.weight * k,
            node: e.node,
        }
    }

    fn cofactors(&self, e: &WEdge, var: u32) -> (WEdge, WEdge) {
        match *self.node(e.node) {
            WbddNode::Internal { var: v, lo, hi } if v == var => (
                Self::scaled(&self.expand(lo), &e.weight),
                Self::scaled(&self.expand(hi), &e.weight),
            ),
            _ => (e.clone(), e.clone()),
        }
    }

    pub fn add(&mut self, a: &WEdge, b: &WEdge) -> Result<WEdge> {
        if self.is_zero(&a.weight, a.node) || self.negligible(a, b) {
            return Ok(b.clone());
        }
        if self.is_zero(&b.weight, b.node) || self.negligible(b, a) {
            return Ok(a.clone());
        }
        if a.node == b.node {
            let w = &a.weight + &b.weight;
            return Ok(if self.is_zero(&w, a.node) {
                self.zero()
            } else {
                WEdge { weight: w, node: a.node }
            });
        }
        let (a, b) = if a.node <= b.node { (a, b) } else { (b, a) };
        let r = self.amps.intern(&b.weight.div(&a.weight))?;
        if r == AmpId::ZERO {
            return Ok(a.clone());
        }
        let sum = self.add_normalized(a.node, b.node, r)?;
        Ok(Self::scaled(&sum, &a.weight))
    }

    /// `(1, n1) + (r, n2)`.
    fn add_normalized(&mut self, n1: NodeId, n2: NodeId, r: AmpId) -> Result<WEdge> {
        let key = (n1, n2, r);
        if let Some(e) = self.add_cache.get(&key) {
            return Ok(e);
        }
        let one = Amplitude::one(self.prec());
        let a = WEdge {
            weight: one,
            node: n1,
        };
        let b = WEdge {
            weight: self.amps.value(r).clone(),
            node: n2,
        };
        let var = self.var(n1).min(self.var(n2));
        let (a0, a1) = self.cofactors(&a, var);
        let (b0, b1) = self.cofactors(&b, var);
        let lo = self.add(&a0, &b0)?;
        let hi = self.add(&a1, &b1)?;
        let e = self.mk(var, lo, hi)?;
        self.add_cache.put(key, e.clone());
        Ok(e)
    }

    fn identity_tail(&mut self, q: u32, n: u32) -> Result<NodeId> {
        if !self.identity_tails.contains_key(&n) {
            let one = Amplitude::one(self.prec());
            let mut tails = vec![Self::TERMINAL; n as usize + 1];
            for k in (0..n).rev() {
                let cur = WEdge {
                    weight: one.clone(),
                    node: tails[k as usize + 1],
                };
                let r0 = self.mk(2 * k + 1, cur.clone(), self.zero())?;
                let r1 = self.mk(2 * k + 1, self.zero(), cur)?;
                let e = self.mk(2 * k, r0, r1)?;
                debug_assert!(e.weight == one);
                tails[k as usize] = e.node;
            }
            self.identity_tails.insert(n, tails);
        }
        Ok(self.identity_tails[&n][q as usize])
    }

    fn factor_level(&mut self, q: u32, f: &Mat2, tail: &WEdge) -> Result<WEdge> {
        let e: Vec<WEdge> = f.iter().map(|a| Self::scaled(tail, a)).collect();
        let r0 = self.mk(2 * q + 1, e[0].clone(), e[1].clone())?;
        let r1 = self.mk(2 * q + 1, e[2].clone(), e[3].clone())?;
        self.mk(2 * q, r0, r1)
    }

    fn term_matrix(&mut self, term: &OperatorTerm, n: u32) -> Result<WEdge> {
        let deepest = term.factors.iter().map(|(q, _)| *q).max().unwrap_or(0) as u32;
        let mut cur = WEdge {
            weight: term.coeff.clone(),
            node: self.identity_tail(deepest + 1, n)?,
        };
        for q in (0..=deepest).rev() {
            cur = match term.factor(q as usize) {
                Some(f) => self.factor_level(q, f, &cur)?,
                None => {
                    let r0 = self.mk(2 * q + 1, cur.clone(), self.zero())?;
                    let r1 = self.mk(2 * q + 1, self.zero(), cur)?;
                    self.mk(2 * q, r0, r1)?
                }
            };
        }
        Ok(cur)
    }

    pub fn gate_matrix(&mut self, g: &GateApplication, n: usize) -> Result<WEdge> {
        let mut acc = self.zero();
        for term in g.operator_terms(self.prec()) {
            let t = self.term_matrix(&term, n as u32)?;
            acc = self.add(&acc, &t)?;
        }
        Ok(acc)
    }

    pub fn matvec(&mut self, m: &WEdge, v: &WEdge, n: usize) -> Result<WEdge> {
        if self.is_zero(&m.weight, m.node) || self.is_zero(&v.weight, v.node) {
            return Ok(self.zero());
        }
        let r = self.matvec_rec(m.node, v.node, 0, n as u32)?;
        Ok(Self::scaled(&Self::scaled(&r, &m.weight), &v.weight))
    }

    fn matvec_rec(&mut self, m: NodeId, v: NodeId, q: u32, n: u32) -> Result<WEdge> {
        let one = Amplitude::one(self.prec());
        if q == n {
            return Ok(WEdge { weight: one, node: Self::TERMINAL });
        }
        if m == self.identity_tail(q, n)? {
            return Ok(WEdge { weight: one, node: v });
        }
        let key = (m, v, q, n);
        if let Some(e) = self.matvec_cache.get(&key) {
            return Ok(e);
        }
        let me = WEdge { weight: one.clone(), node: m };
        let ve = WEdge { weight: one, node: v };
        let (m0, m1) = self.cofactors(&me, 2 * q);
        let (m00, m01) = self.cofactors(&m0, 2 * q + 1);
        let (m10, m11) = self.cofactors(&m1, 2 * q + 1);
        let (v0, v1) = self.cofactors(&ve, q);
        let a = self.matvec_term(&m00, &v0, q + 1, n)?;
        let b = self.matvec_term(&m01, &v1, q + 1, n)?;
        let lo = self.add(&a, &b)?;
        let a = self.matvec_term(&m10, &v0, q + 1, n)?;
        let b = self.matvec_term(&m11, &v1, q + 1, n)?;
        let hi = self.add(&a, &b)?;
        let e = self.mk(q, lo, hi)?;
        self.matvec_cache.put(key, e.clone());
        Ok(e)
    }

    fn matvec_term(&mut self, m: &WEdge, v: &WEdge, q: u32, n: u32) -> Result<WEdge> {
        if self.is_zero(&m.weight, m.node) || self.is_zero(&v.weight, v.node) {
            return Ok(self.zero());
        }
        let r = self.matvec_rec(m.node, v.node, q, n)?;
        let w = &(&m.weight * &v.weight) * &r.weight;
        Ok(WEdge { weight: w, node: r.node })
    }

    pub fn restrict(&mut self, e: &WEdge, m: &PartialAssignment) -> Result<WEdge> {
        let mut memo = HashMap::new();
        let r = self.restrict_rec(e.node, m, &mut memo)?;
        Ok(Self::scaled(&r, &e.weight))
    }

    fn restrict_rec(
        &mut self,
        node: NodeId,
        m: &PartialAssignment,
        memo: &mut HashMap<NodeId, WEdge>,
    ) -> Result<WEdge> {
        let WbddNode::Internal { var, lo, hi } = *self.node(node) else {
            return Ok(WEdge {
                weight: Amplitude::one(self.prec()),
                node,
            });
        };
        if let Some(e) = memo.get(&node) {
            return Ok(e.clone());
        }
        let sub = |this: &mut Self, e: Edge, memo: &mut HashMap<NodeId, WEdge>| -> Result<WEdge> {
            let r = this.restrict_rec(e.node, m, memo)?;
            Ok(Self::scaled(&r, this.amps.value(e.weight)))
        };
        let r = match m.get(var as usize) {
            Some(false) => sub(self, lo, memo)?,
            Some(true) => sub(self, hi, memo)?,
            None => {
                let l = sub(self, lo, memo)?;
                let h = sub(self, hi, memo)?;
                self.mk(var, l, h)?
            }
        };
        memo.insert(node, r.clone());
        Ok(r)
    }

    pub fn eval(&self, e: &WEdge, assignment: impl Fn(u32) -> bool) -> Amplitude {
        let mut acc = e.weight.clone();
        let mut cur = e.node;
        while let WbddNode::Internal { var, lo, hi } = *self.node(cur) {
            let next = if assignment(var) { hi } else { lo };
            acc = &acc * self.amps.value(next.weight);
            cur = next.node;
        }
        acc
    }

    pub fn from_values(&mut self, values: &[Amplitude]) -> Result<WEdge> {
        self.from_values_rec(values, 0)
    }

    fn from_values_rec(&mut self, values: &[Amplitude], q: u32) -> Result<WEdge> {
        if values.len() == 1 {
            return Ok(self.constant(&values[0]));
        }
        let (l, h) = values.split_at(values.len() / 2);
        let lo = self.from_values_rec(l, q + 1)?;
        let hi = self.from_values_rec(h, q + 1)?;
        self.mk(q, lo, hi)
    }

    pub fn basis_state(&mut self, bits: &[bool]) -> Result<WEdge> {
        let mut cur = self.constant(&Amplitude::one(self.prec()));
        for (q, &b) in bits.iter().enumerate().rev() {
            cur = if b {
                self.mk(q as u32, self.zero(), cur)?
            } else {
                self.mk(q as u32, cur, self.zero())?
            };
        }
        Ok(cur)
    }

    fn reachable_nodes(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            out.push(x);
            if let WbddNode::Internal { lo, hi, .. } = *self.node(x) {
                stack.push(lo.node);
                stack.push(hi.node);
            }
        }
        out
    }

    pub fn reachable(&self, root: NodeId) -> usize {
        self.reachable_nodes(root).len()
    }

    /// Checks the normalization rules at every node reachable from `root`.
    pub fn check_normalized(&self, root: NodeId) -> std::result::Result<(), String> {
        for x in self.reachable_nodes(root) {
            let WbddNode::Internal { var, lo, hi } = *self.node(x) else {
                continue;
            };
            let ok_weights = lo.weight == AmpId::ONE
                || (lo.weight == AmpId::ZERO && hi.weight == AmpId::ONE);
            if !ok_weights {
                return Err(format!("node {x:?}: low weight {:?}, high weight {:?}", lo.weight, hi.weight));
            }
            for e in [lo, hi] {
                if e.weight == AmpId::ZERO && e.node != Self::TERMINAL {
                    return Err(format!("node {x:?}: zero edge to a non-terminal"));
                }
                if var >= self.var(e.node) {
                    return Err(format!("node {x:?}: variable order violated"));
                }
            }
            if lo == hi {
                return Err(format!("node {x:?}: redundant"));
            }
        }
        Ok(())
    }

    /// Total squared mass below each node, summed over the variables from the
    /// node's own down to `n`.
    pub fn node_probabilities(&self, root: NodeId, n: u32) -> HashMap<NodeId, Float> {
        let prec = self.prec() + 16;
        let mut nodes = self.reachable_nodes(root);
        // children have larger variables, so descending var order is bottom-up
        nodes.sort_by_key(|&x| std::cmp::Reverse(self.var(x)));
        let mut out: HashMap<NodeId, Float> = HashMap::new();
        for x in nodes {
            let mass = match *self.node(x) {
                WbddNode::Terminal => Float::with_val(prec, 1),
                WbddNode::Internal { var, lo, hi } => {
                    let part = |e: Edge| -> Float {
                        let skip = self.var(e.node).min(n) - var - 1;
                        let w = self.amps.value(e.weight).norm_sqr();
                        Float::with_val(prec, &w * &out[&e.node]) << skip
                    };
                    Float::with_val(prec, part(lo) + part(hi))
                }
            };
            out.insert(x, mass);
        }
        out
    }

    /// Distribution of `|f(x)|^2` over all `x` in `0..n` as (value, count)
    /// buckets. Values are bucketed after rounding to a few bits below the
    /// working precision.
    pub fn magnitude_buckets(&self, e: &WEdge, n: u32) -> Vec<(Float, Integer)> {
        type Buckets = Vec<(Float, Integer)>;
        let prec = self.prec() + 16;
        let key_prec = self.prec().saturating_sub(8).max(8);
        let key = |x: &Float| Float::with_val(key_prec, x).to_integer_exp();
        let merge = |into: &mut HashMap<Option<(Integer, i32)>, (Float, Integer)>, v: Float, c: Integer| {
            into.entry(key(&v))
                .and_modify(|(_, acc)| *acc += &c)
                .or_insert((v, c));
        };
        let mut nodes = self.reachable_nodes(e.node);
        nodes.sort_by_key(|&x| std::cmp::Reverse(self.var(x)));
        let mut memo: HashMap<NodeId, Buckets> = HashMap::new();
        for x in nodes {
            let b = match *self.node(x) {
                WbddNode::Terminal => vec![(Float::with_val(prec, 1), Integer::from(1))],
                WbddNode::Internal { var, lo, hi } => {
                    let mut acc = HashMap::new();
                    for edge in [lo, hi] {
                        let skip = self.var(edge.node).min(n) - var - 1;
                        let w = self.amps.value(edge.weight).norm_sqr();
                        for (v, c) in &memo[&edge.node] {
                            merge(&mut acc, Float::with_val(prec, &w * v), Integer::from(c << skip));
                        }
                    }
                    acc.into_values().collect()
                }
            };
            memo.insert(x, b);
        }
        let w = e.weight.norm_sqr();
        let skip = self.var(e.node).min(n);
        let mut acc = HashMap::new();
        for (v, c) in &memo[&e.node] {
            merge(&mut acc, Float::with_val(prec, &w * v), Integer::from(c << skip));
        }
        acc.into_values().collect()
    }
}

pub struct WbddBackend;

impl Backend for WbddBackend {
    fn name(&self) -> &str {
        "wbdd"
    }

    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> Result<Box<dyn StateHandle>> {
        let mut mgr = WbddManager::new(*precision);
        let root = mgr.basis_state(&vec![false; n])?;
        Ok(Box::new(WbddState::new(Rc::new(RefCell::new(mgr)), root, n)))
    }

    fn from_amplitudes(
        &self,
        n: usize,
        amplitudes: &[Amplitude],
        precision: &PrecisionConfig,
    ) -> Result<Box<dyn StateHandle>> {
        let mut mgr = WbddManager::new(*precision);
        let root = mgr.from_values(amplitudes)?;
        Ok(Box::new(WbddState::new(Rc::new(RefCell::new(mgr)), root, n)))
    }
}

pub struct WbddState {
    mgr: Rc<RefCell<WbddManager>>,
    root: WEdge,
    n: usize,
    precision: PrecisionConfig,
    masses: OnceCell<HashMap<NodeId, Float>>,
}

impl WbddState {
    pub fn new(mgr: Rc<RefCell<WbddManager>>, root: WEdge, n: usize) -> Self {
        let precision = *mgr.borrow().precision();
        WbddState {
            mgr,
            root,
            n,
            precision,
            masses: OnceCell::new(),
        }
    }

    pub fn manager(&self) -> &Rc<RefCell<WbddManager>> {
        &self.mgr
    }

    pub fn root(&self) -> &WEdge {
        &self.root
    }

    fn masses(&self, m: &WbddManager) -> &HashMap<NodeId, Float> {
        self.masses
            .get_or_init(|| m.node_probabilities(self.root.node, self.n as u32))
    }
}

impl StateHandle for WbddState {
    fn backend_name(&self) -> &str {
        "wbdd"
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
            m.matvec(&u, &self.root, self.n)?
        };
        Ok(Box::new(WbddState::new(self.mgr.clone(), root, self.n)))
    }

    /// Sums annotated node masses over the paths consistent with `a`.
    fn prob(&self, a: &PartialAssignment) -> Result<f64> {
        let m = self.mgr.borrow();
        let masses = self.masses(&m);
        let n = self.n;
        let prec = m.prec() + 16;
        // free_below[v]: unassigned variables in v..n
        let mut free_below = vec![0u32; n + 1];
        for v in (0..n).rev() {
            free_below[v] = free_below[v + 1] + a.get(v).is_none() as u32;
        }
        let free = |from: u32, to: u32| {
            free_below[(from as usize).min(n)] - free_below[(to as usize).min(n)]
        };
        let last = a.iter().map(|(q, _)| q as u32).max();
        let mut memo: HashMap<NodeId, Float> = HashMap::new();
        let mut stack = vec![(self.root.node, false)];
        // post-order over the nodes that still see an assigned variable
        while let Some((x, expanded)) = stack.pop() {
            if memo.contains_key(&x) {
                continue;
            }
            let v = m.var(x);
            if last.is_none_or(|l| v > l) {
                memo.insert(x, masses[&x].clone());
                continue;
            }
            let WbddNode::Internal { var, lo, hi } = *m.node(x) else {
                unreachable!("terminals have no assigned variables below")
            };
            let allowed = |bit: bool, e: Edge| {
                e.weight != AmpId::ZERO && a.get(var as usize).is_none_or(|b| b == bit)
            };
            if !expanded {
                stack.push((x, true));
                for (bit, e) in [(false, lo), (true, hi)] {
                    if allowed(bit, e) {
                        stack.push((e.node, false));
                    }
                }
                continue;
            }
            let mut total = Float::new(prec);
            for (bit, e) in [(false, lo), (true, hi)] {
                if allowed(bit, e) {
                    let w = m.weight(e.weight).norm_sqr();
                    total += Float::with_val(prec, &w * &memo[&e.node]) << free(var + 1, m.var(e.node));
                }
            }
            memo.insert(x, total);
        }
        let top = &memo[&self.root.node];
        let total = Float::with_val(prec, &self.root.weight.norm_sqr() * top) << free(0, m.var(self.root.node));
        Ok(total.to_f64())
    }

    fn measure(&self, rng: &mut dyn RngCore) -> BitString {
        let m = self.mgr.borrow();
        let masses = self.masses(&m);
        let n = self.n as u32;
        let prec = m.prec() + 16;
        let mut bits = Vec::with_capacity(self.n);
        let mut cur = self.root.node;
        for q in 0..n {
            match *m.node(cur) {
                WbddNode::Internal { var, lo, hi } if var == q => {
                    let w = |e: Edge| {
                        let skip = m.var(e.node).min(n) - var - 1;
                        let wt = m.weight(e.weight).norm_sqr();
                        Float::with_val(prec, &wt * &masses[&e.node]) << skip
                    };
                    let (wl, wh) = (w(lo), w(hi));
                    let p0 = Float::with_val(prec, &wl / Float::with_val(prec, &wl + &wh));
                    let take_lo = uniform01(rng) < p0.to_f64();
                    bits.push(!take_lo);
                    cur = if take_lo { lo.node } else { hi.node };
                }
                _ => bits.push(random_bit(rng)),
            }
        }
        BitString(bits)
    }

    fn measurement_counts(&self, p: f64, tol: f64) -> Result<OutcomeCount> {
        let m = self.mgr.borrow();
        let buckets = m.magnitude_buckets(&self.root, self.n as u32);
        Ok(sum_matching(buckets.iter().map(|(v, c)| (v.clone(), c)), p, tol))
    }

    fn amplitude(&self, bits: &[bool]) -> Amplitude {
        self.mgr.borrow().eval(&self.root, |v| bits[v as usize])
    }

    fn node_count(&self) -> usize {
        self.mgr.borrow().reachable(self.root.node)
    }

    fn same_representation(&self, other: &dyn StateHandle) -> bool {
        other.as_any().downcast_ref::<WbddState>().is_some_and(|o| {
            let m = self.mgr.borrow();
            let g = m.amps.grid();
            Rc::ptr_eq(&self.mgr, &o.mgr)
                && o.root.node == self.root.node
                && g.key(&o.root.weight) == g.key(&self.root.weight)
        })
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::from_f64(re, im, 53)
    }

    fn mgr() -> WbddManager {
        WbddManager::new(PrecisionConfig::default())
    }

    #[test]
    fn normalize_hadamard_column_node() {
        let mut m = mgr();
        let h = Amplitude::frac_1_sqrt2(53);
        let t = |w: &Amplitude| WEdge { weight: w.clone(), node: WbddManager::TERMINAL };
        let e = m.mk(1, t(&h), t(&-&h)).unwrap();
        assert_eq!(e.weight, h);
        let WbddNode::Internal { lo, hi, .. } = *m.node(e.node) else { panic!() };
        assert_eq!(lo.weight, AmpId::ONE);
        assert_eq!(m.weight(hi.weight).to_f64_pair(), (-1.0, 0.0));
        // idempotent
        let again = m.mk(1, t(&h), t(&-&h)).unwrap();
        assert_eq!(again, e);
    }

    #[test]
    fn normalize_zero_low_edge() {
        let mut m = mgr();
        let one = m.constant(&c(1.0, 0.0));
        let inner = m.mk(1, m.zero(), one).unwrap();
        let w = c(0.3, -0.4);
        let e = m
            .mk(0, m.zero(), WEdge { weight: w.clone(), node: inner.node })
            .unwrap();
        assert_eq!(e.weight, w);
        let WbddNode::Internal { lo, hi, .. } = *m.node(e.node) else { panic!() };
        assert_eq!((lo.weight, lo.node), (AmpId::ZERO, WbddManager::TERMINAL));
        assert_eq!((hi.weight, hi.node), (AmpId::ONE, inner.node));
    }

    #[test]
    fn hadamard_evaluation() {
        let mut m = mgr();
        let h = m.gate_matrix(&GateApplication::h(0), 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let at = |x: bool, y: bool| m.eval(&h, |v| if v == 0 { x } else { y }).to_f64_pair();
        assert_eq!(at(true, true), (-s, 0.0));
        assert_eq!(at(false, false), (s, 0.0));
        assert!((h.weight.to_f64_pair().0 - s).abs() < 1e-16);
        let id = m.gate_matrix(&GateApplication::i(0), 1).unwrap();
        assert!(m.eval(&id, |v| v == 1).is_zero());
    }

    #[test]
    fn hadamard_on_zero_and_identity() {
        let mut m = mgr();
        let zero = m.basis_state(&[false]).unwrap();
        let h = m.gate_matrix(&GateApplication::h(0), 1).unwrap();
        let plus = m.matvec(&h, &zero, 1).unwrap();
        assert_eq!(plus.node, WbddManager::TERMINAL);
        assert!((plus.weight.to_f64_pair().0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
        let id = m.gate_matrix(&GateApplication::i(0), 1).unwrap();
        assert_eq!(m.matvec(&id, &plus, 1).unwrap(), plus);
        let back = m.matvec(&h, &plus, 1).unwrap();
        assert_eq!(back.node, zero.node);
        m.check_normalized(back.node).unwrap();
    }

    #[test]
    fn worked_example_probability() {
        let mut m = mgr();
        let vals: Vec<Amplitude> = [0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.0]
            .iter()
            .map(|&x| c(x, 0.0))
            .collect();
        let root = m.from_values(&vals).unwrap();
        m.check_normalized(root.node).unwrap();
        let s = WbddState::new(Rc::new(RefCell::new(m)), root, 3);
        let p = s.prob(&PartialAssignment::from([(1, 1), (2, 0)])).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((s.prob(&PartialAssignment::new()).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.prob(&PartialAssignment::from([(0, 1)])).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn restrict_matches_eval() {
        let mut m = mgr();
        let vals: Vec<Amplitude> = (0..16).map(|i| c((i % 5) as f64 * 0.1, (i % 3) as f64 * -0.2)).collect();
        let root = m.from_values(&vals).unwrap();
        let a = PartialAssignment::from([(1, 1), (3, 0)]);
        let r = m.restrict(&root, &a).unwrap();
        m.check_normalized(r.node).unwrap();
        for i in 0..16usize {
            let bits: Vec<bool> = (0..4).map(|q| (i >> (3 - q)) & 1 == 1).collect();
            if !bits[1] || bits[3] {
                continue;
            }
            let got = m.eval(&r, |v| bits[v as usize]);
            assert!(got.approx_eq(&vals[i], 1e-15), "{i}");
        }
    }

    #[test]
    fn magnitude_buckets_conserve_count() {
        let mut m = mgr();
        let k = 1.0 / 6f64.sqrt();
        let vals: Vec<Amplitude> = [k, k, k, 0.0, k, k, k, 0.0].iter().map(|&x| c(x, 0.0)).collect();
        let root = m.from_values(&vals).unwrap();
        let b = m.magnitude_buckets(&root, 3);
        let total: Integer = b.iter().map(|(_, c)| c.clone()).sum();
        assert_eq!(total, 8);
        let s = WbddState::new(Rc::new(RefCell::new(m)), root, 3);
        assert_eq!(s.measurement_counts(1.0 / 6.0, 1e-9).unwrap(), 6);
    }
}
