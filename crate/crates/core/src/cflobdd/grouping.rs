//! Groupings, their normal form and the structural operations over them.
//!
//! A level-`k` grouping reads `2^k` variables. Level 0 is either a
//! don't-care (one exit) or a fork on its variable (exit = variable value).
//! A level-`k` internal grouping calls its A-connection on the first half of
//! its variables; the A-exit selects a middle vertex, whose B-connection reads
//! the second half and whose return tuple maps B-exits to the grouping's exits.
//!
//! Normal form, maintained by [`CflobddManager::build`]:
//! * the A-return map is the identity (middle `i` is A-exit `i`), so it is not stored;
//! * every return tuple is injective;
//! * exits are numbered by first occurrence across the return tuples, in middle order;
//! * no two middle vertices carry the same (B-connection, return tuple);
//! * A- and B-connections are themselves in normal form (hash-consed).
//!
//! Exit "labels" passed to `build` and `reduce` are arbitrary `u32` values
//! (amplitude ids, pair ids, linear-combination ids): exits with equal labels
//! get merged and the surviving exits report the label they carry.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rug::{Float, Integer};

use crate::dd::{AmpId, AmplitudeTable, OpCache, UniqueTable};
use crate::error::{Error, Result};
use crate::numerics::{Amplitude, PrecisionConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupingId(pub(crate) u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Middle {
    pub b: GroupingId,
    pub ret: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Grouping {
    DontCare,
    Fork,
    Internal {
        level: u32,
        a: GroupingId,
        middles: Vec<Middle>,
        exits: u32,
    },
}

/// A function over `2^level` variables: grouping plus one value per exit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CflVector {
    pub root: GroupingId,
    pub values: Vec<AmpId>,
}

/// Partial assignment over the variables of one grouping, hash-consed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Constraint {
    Free,
    Zero,
    One,
    Split(u32, u32),
}

pub(crate) const FREE: u32 = 0;

pub struct CflobddManager {
    pub(crate) amps: AmplitudeTable,
    groupings: UniqueTable<Grouping>,
    pub(crate) constraints: UniqueTable<Constraint>,
    reduce_cache: OpCache<(GroupingId, Vec<u32>), (GroupingId, Rc<Vec<u32>>)>,
    pair_cache: OpCache<(GroupingId, GroupingId), (GroupingId, Rc<Vec<(u32, u32)>>)>,
    pub(crate) restrict_cache: OpCache<(GroupingId, u32), (GroupingId, Rc<Vec<u32>>)>,
    pub(crate) matvec_cache: OpCache<super::matvec::MatvecKey, (GroupingId, Rc<Vec<u32>>)>,
    pub(crate) lins: UniqueTable<super::matvec::LinComb>,
    constants: Vec<GroupingId>,
    identities: Vec<GroupingId>,
    counts: RefCell<HashMap<GroupingId, Rc<Vec<Integer>>>>,
    pub(crate) samplers: RefCell<HashMap<(GroupingId, u32), Rc<Vec<(u32, u32, Float)>>>>,
}

pub(crate) const DONT_CARE: GroupingId = GroupingId(0);
pub(crate) const FORK: GroupingId = GroupingId(1);

impl CflobddManager {
    pub fn new(precision: PrecisionConfig) -> Self {
        let mut groupings = UniqueTable::new("cflobdd grouping");
        groupings.intern(Grouping::DontCare).unwrap();
        groupings.intern(Grouping::Fork).unwrap();
        let mut constraints = UniqueTable::new("cflobdd constraint");
        constraints.intern(Constraint::Free).unwrap();
        let mut lins = UniqueTable::new("cflobdd linear combination");
        lins.intern(Vec::new()).unwrap();
        CflobddManager {
            amps: AmplitudeTable::new(precision),
            groupings,
            constraints,
            reduce_cache: OpCache::default(),
            pair_cache: OpCache::default(),
            restrict_cache: OpCache::default(),
            matvec_cache: OpCache::default(),
            lins,
            constants: vec![DONT_CARE],
            identities: Vec::new(),
            counts: RefCell::new(HashMap::new()),
            samplers: RefCell::new(HashMap::new()),
        }
    }

    pub fn precision(&self) -> &PrecisionConfig {
        self.amps.precision()
    }

    pub(crate) fn prec(&self) -> u32 {
        self.amps.prec()
    }

    pub fn set_caches_enabled(&mut self, on: bool) {
        self.reduce_cache.set_enabled(on);
        self.pair_cache.set_enabled(on);
        self.restrict_cache.set_enabled(on);
        self.matvec_cache.set_enabled(on);
    }

    pub fn grouping(&self, g: GroupingId) -> &Grouping {
        self.groupings.get(g.0)
    }

    pub fn value(&self, id: AmpId) -> &Amplitude {
        self.amps.value(id)
    }

    pub fn intern_value(&mut self, a: &Amplitude) -> Result<AmpId> {
        self.amps.intern(a)
    }

    pub fn num_groupings(&self) -> usize {
        self.groupings.len()
    }

    pub fn level(&self, g: GroupingId) -> u32 {
        match self.grouping(g) {
            Grouping::DontCare | Grouping::Fork => 0,
            Grouping::Internal { level, .. } => *level,
        }
    }

    pub fn exits(&self, g: GroupingId) -> u32 {
        match self.grouping(g) {
            Grouping::DontCare => 1,
            Grouping::Fork => 2,
            Grouping::Internal { exits, .. } => *exits,
        }
    }

    fn internal(&self, g: GroupingId) -> (u32, GroupingId, &[Middle]) {
        match self.grouping(g) {
            Grouping::Internal { level, a, middles, .. } => (*level, *a, middles),
            _ => unreachable!("level-0 grouping where an internal one was expected"),
        }
    }

    /// The one-exit grouping of `level`.
    pub fn constant_grouping(&mut self, level: u32) -> Result<GroupingId> {
        while self.constants.len() <= level as usize {
            let below = *self.constants.last().unwrap();
            let k = self.constants.len() as u32;
            let g = self.groupings.intern(Grouping::Internal {
                level: k,
                a: below,
                middles: vec![Middle { b: below, ret: vec![0] }],
                exits: 1,
            })?;
            self.constants.push(GroupingId(g));
        }
        Ok(self.constants[level as usize])
    }

    pub fn is_constant(&self, g: GroupingId) -> bool {
        self.exits(g) == 1
    }

    /// Normalizing constructor. `middles[i]` belongs to A-exit `i`; its labels
    /// name the caller-level exit of every B-exit. Returns the canonical
    /// grouping and the label carried by each of its exits.
    pub fn build(
        &mut self,
        level: u32,
        a: GroupingId,
        middles: Vec<(GroupingId, Vec<u32>)>,
    ) -> Result<(GroupingId, Vec<u32>)> {
        debug_assert_eq!(middles.len() as u32, self.exits(a));
        debug_assert!(level >= 1 && self.level(a) == level - 1);
        let mut distinct: Vec<(GroupingId, Vec<u32>)> = Vec::new();
        let mut seen: HashMap<(GroupingId, Vec<u32>), u32> = HashMap::new();
        let mut classes = Vec::with_capacity(middles.len());
        for (b, labels) in middles {
            let (b, labels) = self.reduce(b, &labels)?;
            let labels = labels.to_vec();
            let c = *seen.entry((b, labels.clone())).or_insert_with(|| {
                distinct.push((b, labels));
                distinct.len() as u32 - 1
            });
            classes.push(c);
        }
        let (a, a_labels) = self.reduce(a, &classes)?;
        let mut exit_labels: Vec<u32> = Vec::new();
        let mut exit_of: HashMap<u32, u32> = HashMap::new();
        let mut mids = Vec::with_capacity(a_labels.len());
        for &c in a_labels.iter() {
            let (b, labels) = &distinct[c as usize];
            let ret = labels
                .iter()
                .map(|&l| {
                    *exit_of.entry(l).or_insert_with(|| {
                        exit_labels.push(l);
                        exit_labels.len() as u32 - 1
                    })
                })
                .collect();
            mids.push(Middle { b: *b, ret });
        }
        let g = self.groupings.intern(Grouping::Internal {
            level,
            a,
            middles: mids,
            exits: exit_labels.len() as u32,
        })?;
        Ok((GroupingId(g), exit_labels))
    }

    /// Merges the exits of `g` that carry equal labels. Returns the reduced
    /// grouping and the label of each of its exits.
    pub fn reduce(&mut self, g: GroupingId, labels: &[u32]) -> Result<(GroupingId, Rc<Vec<u32>>)> {
        debug_assert_eq!(labels.len() as u32, self.exits(g));
        let mut distinct: Vec<u32> = Vec::new();
        let mut pos: HashMap<u32, u32> = HashMap::new();
        let classes: Vec<u32> = labels
            .iter()
            .map(|&l| {
                *pos.entry(l).or_insert_with(|| {
                    distinct.push(l);
                    distinct.len() as u32 - 1
                })
            })
            .collect();
        if distinct.len() == labels.len() {
            return Ok((g, Rc::new(labels.to_vec())));
        }
        if distinct.len() == 1 {
            let level = self.level(g);
            return Ok((self.constant_grouping(level)?, Rc::new(distinct)));
        }
        let key = (g, classes);
        let (r, class_labels) = match self.reduce_cache.get(&key) {
            Some(hit) => hit,
            None => {
                let (level, a, middles) = self.internal(g);
                let middles: Vec<(GroupingId, Vec<u32>)> = middles
                    .iter()
                    .map(|m| (m.b, m.ret.iter().map(|&e| key.1[e as usize]).collect()))
                    .collect();
                let (r, cl) = self.build(level, a, middles)?;
                let v = (r, Rc::new(cl));
                self.reduce_cache.put(key, v.clone());
                v
            }
        };
        let out = class_labels.iter().map(|&c| distinct[c as usize]).collect();
        Ok((r, Rc::new(out)))
    }

    /// Product grouping of two same-level groupings; exit `i` of the result
    /// is reached exactly by the assignments reaching `pairs[i]`.
    pub fn pair_product(
        &mut self,
        g1: GroupingId,
        g2: GroupingId,
    ) -> Result<(GroupingId, Rc<Vec<(u32, u32)>>)> {
        if g1 == g2 {
            let n = self.exits(g1);
            return Ok((g1, Rc::new((0..n).map(|i| (i, i)).collect())));
        }
        if self.is_constant(g1) {
            let n = self.exits(g2);
            return Ok((g2, Rc::new((0..n).map(|j| (0, j)).collect())));
        }
        if self.is_constant(g2) {
            let n = self.exits(g1);
            return Ok((g1, Rc::new((0..n).map(|i| (i, 0)).collect())));
        }
        // both are forks at level 0, and g1 == g2 was handled above
        debug_assert!(self.level(g1) > 0);
        if let Some(hit) = self.pair_cache.get(&(g1, g2)) {
            return Ok(hit);
        }
        let (level, a1, m1) = self.internal(g1);
        let (_, a2, m2) = self.internal(g2);
        let (m1, m2) = (m1.to_vec(), m2.to_vec());
        let (a, apairs) = self.pair_product(a1, a2)?;
        let mut pair_list: Vec<(u32, u32)> = Vec::new();
        let mut pair_id: HashMap<(u32, u32), u32> = HashMap::new();
        let mut middles = Vec::with_capacity(apairs.len());
        for &(i, j) in apairs.iter() {
            let (x, y) = (&m1[i as usize], &m2[j as usize]);
            let (b, bpairs) = self.pair_product(x.b, y.b)?;
            let labels = bpairs
                .iter()
                .map(|&(e, f)| {
                    let p = (x.ret[e as usize], y.ret[f as usize]);
                    *pair_id.entry(p).or_insert_with(|| {
                        pair_list.push(p);
                        pair_list.len() as u32 - 1
                    })
                })
                .collect();
            middles.push((b, labels));
        }
        let (g, exit_labels) = self.build(level, a, middles)?;
        let pairs = Rc::new(exit_labels.iter().map(|&l| pair_list[l as usize]).collect());
        self.pair_cache.put((g1, g2), (g, Rc::clone(&pairs)));
        Ok((g, pairs))
    }

    /// Exit reached by an assignment of the grouping's variables.
    pub fn eval_exit(&self, g: GroupingId, bits: &[bool]) -> u32 {
        match self.grouping(g) {
            Grouping::DontCare => 0,
            Grouping::Fork => bits[0] as u32,
            Grouping::Internal { a, middles, .. } => {
                let (lo, hi) = bits.split_at(bits.len() / 2);
                let m = &middles[self.eval_exit(*a, lo) as usize];
                m.ret[self.eval_exit(m.b, hi) as usize]
            }
        }
    }

    pub fn eval(&self, v: &CflVector, bits: &[bool]) -> &Amplitude {
        self.value(v.values[self.eval_exit(v.root, bits) as usize])
    }

    pub fn constant(&mut self, level: u32, a: &Amplitude) -> Result<CflVector> {
        let root = self.constant_grouping(level)?;
        let id = self.amps.intern(a)?;
        Ok(CflVector { root, values: vec![id] })
    }

    /// Grouping over `2^level` variables whose exits carry the given labels;
    /// `labels` is indexed by the assignment with the first variable most significant.
    pub fn from_labels(&mut self, level: u32, labels: &[u32]) -> Result<(GroupingId, Vec<u32>)> {
        debug_assert_eq!(labels.len() as u64, 1u64 << (1u64 << level));
        if level == 0 {
            let (g, l) = self.reduce(FORK, labels)?;
            return Ok((g, l.to_vec()));
        }
        let block = 1usize << (1usize << (level - 1));
        let mut blocks: Vec<(GroupingId, Vec<u32>)> = Vec::new();
        let mut class_of: HashMap<(GroupingId, Vec<u32>), u32> = HashMap::new();
        let mut classes = Vec::with_capacity(block);
        for chunk in labels.chunks(block) {
            let b = self.from_labels(level - 1, chunk)?;
            let c = *class_of.entry(b.clone()).or_insert_with(|| {
                blocks.push(b);
                blocks.len() as u32 - 1
            });
            classes.push(c);
        }
        let (a, a_labels) = self.from_labels(level - 1, &classes)?;
        let middles = a_labels.iter().map(|&c| blocks[c as usize].clone()).collect();
        self.build(level, a, middles)
    }

    /// Vector with the given `2^(2^level)` values.
    pub fn from_values(&mut self, level: u32, values: &[Amplitude]) -> Result<CflVector> {
        let ids = values
            .iter()
            .map(|v| self.amps.intern(v).map(|id| id.0))
            .collect::<Result<Vec<_>>>()?;
        let (root, labels) = self.from_labels(level, &ids)?;
        Ok(CflVector { root, values: labels.into_iter().map(AmpId).collect() })
    }

    /// `h(x ++ y) = f(x) * g(y)` one level up.
    pub fn kron(&mut self, f: &CflVector, g: &CflVector) -> Result<CflVector> {
        let level = self.level(f.root) + 1;
        debug_assert_eq!(self.level(g.root) + 1, level);
        let mut middles = Vec::with_capacity(f.values.len());
        for &fv in &f.values {
            let labels = g
                .values
                .iter()
                .map(|&gv| {
                    let p = self.value(fv) * self.value(gv);
                    self.amps.intern(&p).map(|id| id.0)
                })
                .collect::<Result<Vec<_>>>()?;
            middles.push((g.root, labels));
        }
        let (root, labels) = self.build(level, f.root, middles)?;
        Ok(CflVector { root, values: labels.into_iter().map(AmpId).collect() })
    }

    /// `|bits>` for `bits.len() == 2^level`.
    pub fn basis_state(&mut self, bits: &[bool]) -> Result<CflVector> {
        if !bits.len().is_power_of_two() {
            return Err(Error::Config(format!(
                "CFLOBDD states need a power-of-two qubit count, got {}",
                bits.len()
            )));
        }
        let mut memo = HashMap::new();
        self.basis_rec(bits, &mut memo)
    }

    fn basis_rec(&mut self, bits: &[bool], memo: &mut HashMap<Vec<bool>, CflVector>) -> Result<CflVector> {
        if let Some(v) = memo.get(bits) {
            return Ok(v.clone());
        }
        let v = if bits.len() == 1 {
            let one = AmpId::ONE.0;
            let zero = AmpId::ZERO.0;
            let labels = if bits[0] { [zero, one] } else { [one, zero] };
            let (root, l) = self.reduce(FORK, &labels)?;
            CflVector { root, values: l.iter().map(|&x| AmpId(x)).collect() }
        } else {
            let (lo, hi) = bits.split_at(bits.len() / 2);
            let f = self.basis_rec(lo, memo)?;
            let g = self.basis_rec(hi, memo)?;
            self.kron(&f, &g)?
        };
        memo.insert(bits.to_vec(), v.clone());
        Ok(v)
    }

    /// Identity matrix grouping at `level >= 1` (over `2^(level-1)` qubits);
    /// exit 0 carries the diagonal, exit 1 everything else.
    pub fn identity_grouping(&mut self, level: u32) -> Result<GroupingId> {
        while self.identities.len() < level as usize {
            let v = if self.identities.is_empty() {
                let prec = self.prec();
                let (o, z) = (Amplitude::one(prec), Amplitude::zero(prec));
                self.from_values(1, &[o.clone(), z.clone(), z, o])?
            } else {
                let below = CflVector {
                    root: *self.identities.last().unwrap(),
                    values: vec![AmpId::ONE, AmpId::ZERO],
                };
                self.kron(&below, &below)?
            };
            debug_assert_eq!(v.values, [AmpId::ONE, AmpId::ZERO]);
            self.identities.push(v.root);
        }
        Ok(self.identities[level as usize - 1])
    }

    /// Pointwise combination of two vectors of the same level.
    pub fn combine(
        &mut self,
        f: &CflVector,
        g: &CflVector,
        op: impl Fn(&Amplitude, &Amplitude) -> Amplitude,
    ) -> Result<CflVector> {
        let (root, pairs) = self.pair_product(f.root, g.root)?;
        let labels = pairs
            .iter()
            .map(|&(i, j)| {
                let r = op(self.value(f.values[i as usize]), self.value(g.values[j as usize]));
                self.amps.intern(&r).map(|id| id.0)
            })
            .collect::<Result<Vec<_>>>()?;
        let (root, labels) = self.reduce(root, &labels)?;
        Ok(CflVector { root, values: labels.iter().map(|&x| AmpId(x)).collect() })
    }

    pub fn add(&mut self, f: &CflVector, g: &CflVector) -> Result<CflVector> {
        self.combine(f, g, |a, b| a + b)
    }

    pub fn mul(&mut self, f: &CflVector, g: &CflVector) -> Result<CflVector> {
        self.combine(f, g, |a, b| a * b)
    }

    /// Number of assignments reaching each exit of `g`.
    pub fn path_counts(&self, g: GroupingId) -> Rc<Vec<Integer>> {
        if let Some(c) = self.counts.borrow().get(&g) {
            return Rc::clone(c);
        }
        let c = match self.grouping(g) {
            Grouping::DontCare => vec![Integer::from(2)],
            Grouping::Fork => vec![Integer::from(1), Integer::from(1)],
            Grouping::Internal { a, middles, exits, .. } => {
                let ca = self.path_counts(*a);
                let mut out = vec![Integer::new(); *exits as usize];
                for (m, c) in middles.iter().zip(ca.iter()) {
                    let cb = self.path_counts(m.b);
                    for (&e, k) in m.ret.iter().zip(cb.iter()) {
                        out[e as usize] += Integer::from(c * k);
                    }
                }
                out
            }
        };
        let c = Rc::new(c);
        self.counts.borrow_mut().insert(g, Rc::clone(&c));
        c
    }

    pub fn reachable(&self, g: GroupingId) -> Vec<GroupingId> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![g];
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            out.push(x);
            if let Grouping::Internal { a, middles, .. } = self.grouping(x) {
                stack.push(*a);
                stack.extend(middles.iter().map(|m| m.b));
            }
        }
        out
    }

    /// Verifies the normal-form rules on every grouping reachable from `g`.
    pub fn check_canonical(&self, g: GroupingId) -> std::result::Result<(), String> {
        for x in self.reachable(g) {
            let Grouping::Internal { level, a, middles, exits } = self.grouping(x) else {
                continue;
            };
            if self.level(*a) + 1 != *level {
                return Err(format!("{x:?}: A-connection level"));
            }
            if middles.len() as u32 != self.exits(*a) {
                return Err(format!("{x:?}: middle count differs from A exits"));
            }
            let mut next = 0;
            let mut seen = std::collections::HashSet::new();
            for m in middles {
                if self.level(m.b) + 1 != *level || m.ret.len() as u32 != self.exits(m.b) {
                    return Err(format!("{x:?}: malformed B-connection"));
                }
                let mut local = std::collections::HashSet::new();
                for &e in &m.ret {
                    if !local.insert(e) {
                        return Err(format!("{x:?}: return tuple not injective"));
                    }
                    if e > next {
                        return Err(format!("{x:?}: exit {e} out of first-occurrence order"));
                    }
                    if e == next {
                        next += 1;
                    }
                }
                if !seen.insert((m.b, m.ret.clone())) {
                    return Err(format!("{x:?}: duplicate middle vertex"));
                }
            }
            if next != *exits {
                return Err(format!("{x:?}: exit count {exits} but {next} reachable"));
            }
        }
        Ok(())
    }
}
