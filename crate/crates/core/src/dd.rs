//! Hash-consing infrastructure shared by the three diagram backends.
//!
//! A backend manager is built from these pieces: one [`UniqueTable`] per node
//! kind (structural equality coincides with handle equality), an
//! [`AmplitudeTable`] that interns leaf values and edge weights on the epsilon
//! grid, and a handful of [`OpCache`]s memoizing recursive operations.
//!
//! Managers are single-threaded and never shared between simulations; handles
//! are only comparable inside the manager that issued them. Nothing is ever
//! garbage collected.

use std::collections::HashMap;
use std::hash::Hash;

use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{Amplitude, Grid, GridKey, PrecisionConfig};

/// Interning table: `intern` returns the same index for structurally equal
/// values and distinct indices otherwise.
#[derive(Debug)]
pub struct UniqueTable<T> {
    name: &'static str,
    entries: Vec<T>,
    index: HashMap<T, u32>,
    limit: usize,
}

impl<T: Hash + Eq + Clone> UniqueTable<T> {
    pub fn new(name: &'static str) -> Self {
        Self::with_limit(name, u32::MAX as usize)
    }

    pub fn with_limit(name: &'static str, limit: usize) -> Self {
        UniqueTable {
            name,
            entries: Vec::new(),
            index: HashMap::new(),
            limit: limit.min(u32::MAX as usize),
        }
    }

    pub fn intern(&mut self, value: T) -> Result<u32> {
        if let Some(&id) = self.index.get(&value) {
            return Ok(id);
        }
        if self.entries.len() >= self.limit {
            return Err(Error::Resource(format!(
                "{} table is full ({} entries)",
                self.name, self.limit
            )));
        }
        let id = self.entries.len() as u32;
        self.entries.push(value.clone());
        self.index.insert(value, id);
        Ok(id)
    }

    pub fn lookup(&self, value: &T) -> Option<u32> {
        self.index.get(value).copied()
    }

    pub fn get(&self, id: u32) -> &T {
        &self.entries[id as usize]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Memo table for one recursive operation. Absence is always a legal answer,
/// so the table may be capped (it is cleared when full) or switched off.
#[derive(Debug)]
pub struct OpCache<K, V> {
    map: HashMap<K, V>,
    cap: Option<usize>,
    enabled: bool,
}

impl<K: Hash + Eq, V: Clone> Default for OpCache<K, V> {
    fn default() -> Self {
        OpCache {
            map: HashMap::new(),
            cap: None,
            enabled: true,
        }
    }
}

impl<K: Hash + Eq, V: Clone> OpCache<K, V> {
    pub fn with_cap(cap: usize) -> Self {
        OpCache {
            cap: Some(cap),
            ..Self::default()
        }
    }

    pub fn get(&self, key: &K) -> Option<V> {
        if !self.enabled {
            return None;
        }
        self.map.get(key).cloned()
    }

    pub fn put(&mut self, key: K, value: V) {
        if !self.enabled {
            return;
        }
        if let Some(cap) = self.cap {
            if self.map.len() >= cap {
                self.map.clear();
            }
        }
        self.map.insert(key, value);
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }

    pub fn set_enabled(&mut self, enabled: bool) {
        self.enabled = enabled;
        if !enabled {
            self.map.clear();
        }
    }

    pub fn set_cap(&mut self, cap: Option<usize>) {
        self.cap = cap;
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Handle of an interned amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AmpId(pub u32);

impl AmpId {
    pub const ZERO: AmpId = AmpId(0);
    pub const ONE: AmpId = AmpId(1);
}

/// Amplitudes interned by their [`GridKey`]. The first value seen in a cell
/// becomes its representative, except the zero cell which always holds an
/// exact zero.
#[derive(Debug)]
pub struct AmplitudeTable {
    precision: PrecisionConfig,
    grid: Grid,
    relative: bool,
    values: Vec<Amplitude>,
    index: HashMap<GridKey, AmpId>,
    limit: usize,
}

impl AmplitudeTable {
    /// Table on the absolute epsilon grid.
    pub fn new(precision: PrecisionConfig) -> Self {
        Self::build(precision, false)
    }

    /// Table keyed by [`Grid::relative_key`], for ratios of arbitrary magnitude.
    pub fn relative(precision: PrecisionConfig) -> Self {
        Self::build(precision, true)
    }

    fn build(precision: PrecisionConfig, relative: bool) -> Self {
        let grid = precision.grid();
        let prec = precision.mantissa_bits();
        let mut t = AmplitudeTable {
            precision,
            grid,
            relative,
            values: Vec::new(),
            index: HashMap::new(),
            limit: u32::MAX as usize,
        };
        let zero = Amplitude::zero(prec);
        let one = Amplitude::one(prec);
        t.index.insert(t.key(&zero), AmpId::ZERO);
        t.values.push(zero);
        t.index.insert(t.key(&one), AmpId::ONE);
        t.values.push(one);
        t
    }

    pub fn precision(&self) -> &PrecisionConfig {
        &self.precision
    }

    pub fn prec(&self) -> u32 {
        self.precision.mantissa_bits()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn key(&self, a: &Amplitude) -> GridKey {
        if self.relative { self.grid.relative_key(a) } else { self.grid.key(a) }
    }

    pub fn intern(&mut self, a: &Amplitude) -> Result<AmpId> {
        debug_assert!(a.is_finite(), "non-finite amplitude {a:?}");
        let key = self.key(a);
        if key.is_zero() {
            return Ok(AmpId::ZERO);
        }
        if let Some(&id) = self.index.get(&key) {
            return Ok(id);
        }
        if self.relative {
            if let Some(id) = self.near(a) {
                self.index.insert(key, id);
                return Ok(id);
            }
        }
        if self.values.len() >= self.limit {
            return Err(Error::Resource("amplitude table is full".into()));
        }
        let id = AmpId(self.values.len() as u32);
        self.values.push(a.clone());
        self.index.insert(key, id);
        Ok(id)
    }

    /// A representative in a neighbouring relative cell within `eps`
    /// (relative), so values straddling a cell boundary still coalesce.
    fn near(&self, a: &Amplitude) -> Option<AmpId> {
        let prec = self.prec();
        let eps = self.grid.eps();
        let mag = a.norm_sqr().sqrt();
        // half-cell steps so no cell within `eps` is jumped over
        let half = Float::with_val(prec, &mag * (eps / 2.0));
        let offsets: Vec<Float> = (-2..=2).map(|k| Float::with_val(prec, &half * k)).collect();
        for dr in &offsets {
            for di in &offsets {
                let probe = Amplitude::from_parts(
                    Float::with_val(prec, a.re() + dr),
                    Float::with_val(prec, a.im() + di),
                );
                let Some(&id) = self.index.get(&self.grid.relative_key(&probe)) else {
                    continue;
                };
                let v = &self.values[id.0 as usize];
                if (v - a).norm_sqr().sqrt() <= Float::with_val(prec, &mag * eps) {
                    return Some(id);
                }
            }
        }
        None
    }

    pub fn value(&self, id: AmpId) -> &Amplitude {
        &self.values[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, PartialEq, Eq, Hash, Debug)]
    enum Desc {
        Leaf(u8),
        Pair(u32, u32),
    }

    #[test]
    fn intern_is_idempotent_and_injective() {
        let mut t = UniqueTable::new("test");
        let a = t.intern(Desc::Leaf(1)).unwrap();
        assert_eq!(t.intern(Desc::Leaf(1)).unwrap(), a);
        let b = t.intern(Desc::Pair(a, a)).unwrap();
        assert_ne!(a, b);
        assert_eq!(t.get(b), &Desc::Pair(a, a));
    }

    #[test]
    fn thousand_copies_two_handles() {
        let mut t = UniqueTable::new("test");
        let mut seen = std::collections::HashSet::new();
        for i in 0..2000 {
            let d = if i % 2 == 0 { Desc::Leaf(7) } else { Desc::Pair(3, 4) };
            seen.insert(t.intern(d).unwrap());
        }
        assert_eq!(seen.len(), 2);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn capacity_exhaustion_is_a_resource_error() {
        let mut t = UniqueTable::with_limit("tiny", 2);
        t.intern(Desc::Leaf(0)).unwrap();
        t.intern(Desc::Leaf(1)).unwrap();
        t.intern(Desc::Leaf(1)).unwrap();
        let err = t.intern(Desc::Leaf(2)).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn cache_put_get_evict() {
        let mut c: OpCache<(u8, u32), u32> = OpCache::with_cap(2);
        assert_eq!(c.get(&(0, 1)), None);
        c.put((0, 1), 10);
        assert_eq!(c.get(&(0, 1)), Some(10));
        c.put((0, 2), 20);
        c.put((0, 3), 30);
        // the cap forced a flush before the third insert
        assert_eq!(c.get(&(0, 1)), None);
        assert_eq!(c.get(&(0, 3)), Some(30));
        c.set_enabled(false);
        c.put((1, 1), 1);
        assert_eq!(c.get(&(1, 1)), None);
    }

    #[test]
    fn amplitude_table_coalesces_on_grid() {
        let mut t = AmplitudeTable::new(PrecisionConfig::default());
        let z = t.intern(&Amplitude::from_f64(1e-15, 0.0, 53)).unwrap();
        assert_eq!(z, AmpId::ZERO);
        assert!(t.value(z).is_zero());
        let h = Amplitude::frac_1_sqrt2(53);
        let a = t.intern(&h).unwrap();
        let b = t.intern(&Amplitude::from_f64(h.re().to_f64() + 1e-16, 0.0, 53)).unwrap();
        assert_eq!(a, b);
        let c = t.intern(&-&h).unwrap();
        assert_ne!(a, c);
        assert_eq!(t.intern(&Amplitude::one(53)).unwrap(), AmpId::ONE);
    }

    #[test]
    fn relative_table_keeps_small_ratios_apart() {
        let mut t = AmplitudeTable::relative(PrecisionConfig::default());
        let small = t.intern(&Amplitude::from_f64(3.4e-5, 0.0, 53)).unwrap();
        let nudged = t.intern(&Amplitude::from_f64(3.4e-5 * (1.0 + 1e-9), 0.0, 53)).unwrap();
        assert_ne!(small, nudged);
        assert_ne!(t.intern(&Amplitude::from_f64(1e-20, 0.0, 53)).unwrap(), AmpId::ZERO);
        assert_eq!(t.intern(&Amplitude::one(53)).unwrap(), AmpId::ONE);
    }

    #[test]
    fn relative_table_coalesces_across_cell_edges() {
        let mut t = AmplitudeTable::relative(PrecisionConfig::default());
        // 1.0 sits on an exponent boundary; both neighbours must find it
        let below = Amplitude::from_f64(1.0 - 1e-14, 0.0, 53);
        let above = Amplitude::from_f64(1.0 + 1e-14, 0.0, 53);
        assert_eq!(t.intern(&below).unwrap(), AmpId::ONE);
        assert_eq!(t.intern(&above).unwrap(), AmpId::ONE);
        let x = t.intern(&Amplitude::from_f64(0.3, 0.4, 53)).unwrap();
        assert_eq!(t.intern(&Amplitude::from_f64(0.3 + 1e-14, 0.4 - 1e-14, 53)).unwrap(), x);
    }
}
