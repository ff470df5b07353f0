//! CFLOBDD backend. States on `n = 2^L` qubits are level-`L` functions;
//! gate matrices are level-`L+1` functions over interleaved row and column
//! variables. See [`grouping`] for the normal form.

pub mod grouping;
mod matvec;

use std::any::Any;
use std::cell::RefCell;
use std::rc::Rc;

use rand::RngCore;
use rug::Float;

pub use grouping::{CflVector, CflobddManager, Grouping, GroupingId, Middle};
pub use matvec::LinComb;

use crate::dd::AmpId;
use crate::error::{Error, Result};
use crate::gate::GateApplication;
use crate::mtbdd::{random_bit, sum_matching, uniform01};
use crate::numerics::{Amplitude, PrecisionConfig};
use crate::state::{Backend, BitString, OutcomeCount, PartialAssignment, StateHandle};
use grouping::{Constraint, FREE};

fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "the cflobdd backend needs a power-of-two qubit count, got {n}"
        )));
    }
    Ok(())
}

impl CflobddManager {
    /// Constraint tree for the variables `start .. start + 2^level`.
    fn constraint(&mut self, level: u32, start: usize, assigned: &[(usize, bool)]) -> Result<u32> {
        let end = start + (1usize << level);
        let lo = assigned.partition_point(|(q, _)| *q < start);
        let hi = assigned.partition_point(|(q, _)| *q < end);
        if lo == hi {
            return Ok(FREE);
        }
        if level == 0 {
            let c = if assigned[lo].1 { Constraint::One } else { Constraint::Zero };
            return self.constraints.intern(c);
        }
        let half = 1usize << (level - 1);
        let a = self.constraint(level - 1, start, assigned)?;
        let b = self.constraint(level - 1, start + half, assigned)?;
        self.constraints.intern(Constraint::Split(a, b))
    }

    /// The grouping with the constrained variables fixed (the result still
    /// reads them but ignores them). Exit labels are exits of `g`.
    fn restrict_g(&mut self, g: GroupingId, c: u32) -> Result<(GroupingId, Rc<Vec<u32>>)> {
        if c == FREE {
            let n = self.exits(g);
            return Ok((g, Rc::new((0..n).collect())));
        }
        if let Some(hit) = self.restrict_cache.get(&(g, c)) {
            return Ok(hit);
        }
        let out = match (self.grouping(g).clone(), *self.constraints.get(c)) {
            (Grouping::DontCare, _) => (g, Rc::new(vec![0])),
            (Grouping::Fork, Constraint::Zero) => (grouping::DONT_CARE, Rc::new(vec![0])),
            (Grouping::Fork, Constraint::One) => (grouping::DONT_CARE, Rc::new(vec![1])),
            (Grouping::Internal { level, a, middles, .. }, Constraint::Split(ca, cb)) => {
                let (a2, la) = self.restrict_g(a, ca)?;
                let mut mids = Vec::with_capacity(la.len());
                for &i in la.iter() {
                    let m = &middles[i as usize];
                    let (b2, lb) = self.restrict_g(m.b, cb)?;
                    mids.push((b2, lb.iter().map(|&e| m.ret[e as usize]).collect()));
                }
                let (r, labels) = self.build(level, a2, mids)?;
                (r, Rc::new(labels))
            }
            _ => unreachable!("constraint shape does not match grouping level"),
        };
        self.restrict_cache.put((g, c), out.clone());
        Ok(out)
    }

    /// `f` with the variables in `m` fixed; the result ignores them.
    pub fn restrict(&mut self, f: &CflVector, m: &PartialAssignment) -> Result<CflVector> {
        let level = self.level(f.root);
        let assigned: Vec<(usize, bool)> = m.iter().collect();
        let c = self.constraint(level, 0, &assigned)?;
        let (root, labels) = self.restrict_g(f.root, c)?;
        Ok(CflVector {
            root,
            values: labels.iter().map(|&e| f.values[e as usize]).collect(),
        })
    }

    /// Weighted choices `(A-exit, B-exit, cumulative count)` that reach exit `e` of `g`.
    fn choices(&self, g: GroupingId, e: u32) -> Rc<Vec<(u32, u32, Float)>> {
        if let Some(c) = self.samplers.borrow().get(&(g, e)) {
            return Rc::clone(c);
        }
        let Grouping::Internal { a, middles, .. } = self.grouping(g) else {
            unreachable!()
        };
        let ca = self.path_counts(*a);
        let mut acc = Float::new(64);
        let mut out = Vec::new();
        for (i, m) in middles.iter().enumerate() {
            let cb = self.path_counts(m.b);
            for (f, &r) in m.ret.iter().enumerate() {
                if r == e {
                    acc += Float::with_val(64, rug::Integer::from(&ca[i] * &cb[f]));
                    out.push((i as u32, f as u32, acc.clone()));
                }
            }
        }
        let out = Rc::new(out);
        self.samplers.borrow_mut().insert((g, e), Rc::clone(&out));
        out
    }

    /// Uniformly random assignment among those reaching exit `e` of `g`.
    fn sample_path(&self, g: GroupingId, e: u32, out: &mut [bool], rng: &mut dyn RngCore) {
        match self.grouping(g) {
            Grouping::DontCare => out[0] = random_bit(rng),
            Grouping::Fork => out[0] = e == 1,
            Grouping::Internal { a, middles, .. } => {
                let choices = self.choices(g, e);
                let total = &choices.last().unwrap().2;
                let u = Float::with_val(64, total * uniform01(rng));
                let k = choices.partition_point(|c| c.2 <= u).min(choices.len() - 1);
                let (i, f, _) = choices[k];
                let (lo, hi) = out.split_at_mut(out.len() / 2);
                self.sample_path(*a, i, lo, rng);
                self.sample_path(middles[i as usize].b, f, hi, rng);
            }
        }
    }

    /// Per-exit `(|value|^2, number of assignments)`.
    fn magnitude_buckets(&self, f: &CflVector) -> Vec<(Float, rug::Integer)> {
        let counts = self.path_counts(f.root);
        f.values
            .iter()
            .zip(counts.iter())
            .map(|(&v, c)| (self.value(v).norm_sqr(), c.clone()))
            .collect()
    }
}

pub struct CflobddBackend;

impl Backend for CflobddBackend {
    fn name(&self) -> &str {
        "cflobdd"
    }

    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> Result<Box<dyn StateHandle>> {
        check_power_of_two(n)?;
        let mut mgr = CflobddManager::new(*precision);
        let root = mgr.basis_state(&vec![false; n])?;
        Ok(Box::new(CflobddState::new(Rc::new(RefCell::new(mgr)), root, n)))
    }

    fn from_amplitudes(
        &self,
        n: usize,
        amplitudes: &[Amplitude],
        precision: &PrecisionConfig,
    ) -> Result<Box<dyn StateHandle>> {
        check_power_of_two(n)?;
        if n > 16 {
            return Err(Error::Resource(format!(
                "cflobdd from_amplitudes builds a full table; {n} qubits is too many"
            )));
        }
        let mut mgr = CflobddManager::new(*precision);
        let root = mgr.from_values(n.trailing_zeros(), amplitudes)?;
        Ok(Box::new(CflobddState::new(Rc::new(RefCell::new(mgr)), root, n)))
    }
}

pub struct CflobddState {
    mgr: Rc<RefCell<CflobddManager>>,
    root: CflVector,
    n: usize,
    precision: PrecisionConfig,
}

impl CflobddState {
    pub fn new(mgr: Rc<RefCell<CflobddManager>>, root: CflVector, n: usize) -> Self {
        let precision = *mgr.borrow().precision();
        CflobddState { mgr, root, n, precision }
    }

    pub fn manager(&self) -> &Rc<RefCell<CflobddManager>> {
        &self.mgr
    }

    pub fn root(&self) -> &CflVector {
        &self.root
    }
}

impl StateHandle for CflobddState {
    fn backend_name(&self) -> &str {
        "cflobdd"
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
            m.matvec(&u, &self.root)?
        };
        Ok(Box::new(CflobddState::new(self.mgr.clone(), root, self.n)))
    }

    fn prob(&self, a: &PartialAssignment) -> Result<f64> {
        let mut m = self.mgr.borrow_mut();
        let r = m.restrict(&self.root, a)?;
        let prec = m.prec() + 16;
        let mut total = Float::new(prec);
        for (w, c) in m.magnitude_buckets(&r) {
            total += Float::with_val(prec, &w * &c);
        }
        Ok((total >> a.len() as u32).to_f64())
    }

    fn measure(&self, rng: &mut dyn RngCore) -> BitString {
        let m = self.mgr.borrow();
        let mut acc = Float::new(m.prec() + 16);
        let cumulative: Vec<Float> = m
            .magnitude_buckets(&self.root)
            .into_iter()
            .map(|(w, c)| {
                acc += Float::with_val(acc.prec(), &w * &c);
                acc.clone()
            })
            .collect();
        let u = Float::with_val(acc.prec(), &acc * uniform01(rng));
        let mut e = cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1);
        // never land on a zero-probability exit
        while self.root.values[e] == AmpId::ZERO {
            e = if e == 0 { cumulative.len() - 1 } else { e - 1 };
        }
        let mut bits = vec![false; self.n];
        m.sample_path(self.root.root, e as u32, &mut bits, rng);
        BitString(bits)
    }

    fn measurement_counts(&self, p: f64, tol: f64) -> Result<OutcomeCount> {
        let m = self.mgr.borrow();
        let buckets = m.magnitude_buckets(&self.root);
        Ok(sum_matching(buckets.iter().map(|(v, c)| (v.clone(), c)), p, tol))
    }

    fn amplitude(&self, bits: &[bool]) -> Amplitude {
        self.mgr.borrow().eval(&self.root, bits).clone()
    }

    fn node_count(&self) -> usize {
        self.mgr.borrow().reachable(self.root.root).len()
    }

    fn same_representation(&self, other: &dyn StateHandle) -> bool {
        other
            .as_any()
            .downcast_ref::<CflobddState>()
            .is_some_and(|o| Rc::ptr_eq(&self.mgr, &o.mgr) && o.root == self.root)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseState;
    use num_complex::Complex64;

    fn mgr() -> CflobddManager {
        CflobddManager::new(PrecisionConfig::default())
    }

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::from_f64(re, im, 53)
    }

    fn table(m: &CflobddManager, f: &CflVector, nvars: usize) -> Vec<Complex64> {
        (0..1usize << nvars)
            .map(|i| {
                let bits: Vec<bool> = (0..nvars).map(|k| (i >> (nvars - 1 - k)) & 1 == 1).collect();
                m.eval(f, &bits).to_complex64()
            })
            .collect()
    }

    #[test]
    fn constants_are_one_exit() {
        let mut m = mgr();
        for level in 0..5 {
            let f = m.constant(level, &c(0.5, 0.0)).unwrap();
            assert_eq!(m.exits(f.root), 1);
            assert_eq!(m.reachable(f.root).len(), level as usize + 1);
        }
    }

    #[test]
    fn basis_state_entries() {
        let mut m = mgr();
        let bits = [true, false, true, true];
        let f = m.basis_state(&bits).unwrap();
        let t = table(&m, &f, 4);
        for (i, v) in t.iter().enumerate() {
            let want = if i == 0b1011 { 1.0 } else { 0.0 };
            assert_eq!(*v, Complex64::new(want, 0.0));
        }
        m.check_canonical(f.root).unwrap();
    }

    #[test]
    fn hadamard_shares_the_fork() {
        let mut m = mgr();
        let h = Amplitude::frac_1_sqrt2(53);
        let f = m.from_values(1, &[h.clone(), h.clone(), h.clone(), -&h]).unwrap();
        let Grouping::Internal { a, middles, .. } = m.grouping(f.root).clone() else { panic!() };
        let refs = std::iter::once(a)
            .chain(middles.iter().map(|x| x.b))
            .filter(|g| *g == grouping::FORK)
            .count();
        assert!(refs >= 2);
        assert_eq!(m.eval(&f, &[true, true]).to_f64_pair().0, -std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn from_values_and_combine_match_tables() {
        let mut m = mgr();
        let xs: Vec<Amplitude> = (0..16).map(|i| c((i % 5) as f64, (i % 3) as f64 - 1.0)).collect();
        let ys: Vec<Amplitude> = (0..16).map(|i| c((i % 2) as f64, 0.5 * (i / 8) as f64)).collect();
        let f = m.from_values(2, &xs).unwrap();
        let g = m.from_values(2, &ys).unwrap();
        m.check_canonical(f.root).unwrap();
        let s = m.add(&f, &g).unwrap();
        let p = m.mul(&f, &g).unwrap();
        let (tf, tg, ts, tp) = (table(&m, &f, 4), table(&m, &g, 4), table(&m, &s, 4), table(&m, &p, 4));
        for i in 0..16 {
            assert_eq!(ts[i], tf[i] + tg[i]);
            assert_eq!(tp[i], tf[i] * tg[i]);
        }
        m.check_canonical(s.root).unwrap();
        m.check_canonical(p.root).unwrap();
        // canonicity: rebuilding from the table gives the same handle
        let vals: Vec<Amplitude> = ts.iter().map(|z| c(z.re, z.im)).collect();
        assert_eq!(m.from_values(2, &vals).unwrap(), s);
    }

    #[test]
    fn kron_matches_product() {
        let mut m = mgr();
        let xs: Vec<Amplitude> = (0..4).map(|i| c(i as f64 + 1.0, 0.0)).collect();
        let ys: Vec<Amplitude> = (0..4).map(|i| c(0.0, i as f64 - 1.5)).collect();
        let f = m.from_values(1, &xs).unwrap();
        let g = m.from_values(1, &ys).unwrap();
        let k = m.kron(&f, &g).unwrap();
        let t = table(&m, &k, 4);
        for i in 0..16 {
            assert_eq!(t[i], xs[i >> 2].to_complex64() * ys[i & 3].to_complex64());
        }
    }

    #[test]
    fn gates_agree_with_dense() {
        let gates = [
            GateApplication::h(0),
            GateApplication::cx(0, 3),
            GateApplication::t(2),
            GateApplication::h(1),
            GateApplication::ccx(1, 2, 3),
            GateApplication::cp(3, 0, 0.2),
            GateApplication::iswap(1, 2),
            GateApplication::cswap(2, 0, 1),
            GateApplication::y(3),
        ];
        let mut m = mgr();
        let mut v = m.basis_state(&[false; 4]).unwrap();
        let mut d = DenseState::new(4).unwrap();
        for g in &gates {
            let u = m.gate_matrix(g, 4).unwrap();
            m.check_canonical(u.root).unwrap();
            v = m.matvec(&u, &v).unwrap();
            m.check_canonical(v.root).unwrap();
            d.apply(g);
            let t = table(&m, &v, 4);
            for (a, b) in t.iter().zip(d.amplitudes()) {
                assert!((a - b).norm() < 1e-12, "{g}");
            }
        }
    }

    #[test]
    fn ghz_is_logarithmic() {
        let mut sizes = Vec::new();
        for l in 3..8u32 {
            let n = 1usize << l;
            let b = CflobddBackend;
            let mut s: Rc<dyn StateHandle> = b.new_state(n, &PrecisionConfig::default()).unwrap().into();
            s = s.apply_gate(&GateApplication::h(0)).unwrap().into();
            for q in 1..n {
                s = s.apply_gate(&GateApplication::cx(0, q)).unwrap().into();
            }
            assert!((s.prob(&PartialAssignment::all(n, true)).unwrap() - 0.5).abs() < 1e-12);
            sizes.push(s.node_count());
        }
        // each doubling of n adds a bounded number of groupings
        let steps: Vec<usize> = sizes.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|&d| d <= steps[0]), "{sizes:?}");
    }

    #[test]
    fn restrict_and_counts() {
        let k = 1.0 / 6f64.sqrt();
        let vals: Vec<Amplitude> = [k, k, k, 0.0, k, k, k, 0.0]
            .iter()
            .flat_map(|&x| [c(x, 0.0), c(0.0, 0.0)])
            .collect();
        let s = CflobddBackend.from_amplitudes(4, &vals, &PrecisionConfig::default()).unwrap();
        let p = s.prob(&PartialAssignment::from([(0, 1), (1, 0), (2, 1)])).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
        let p = s.prob(&PartialAssignment::from([(1, 1), (2, 1)])).unwrap();
        assert_eq!(p, 0.0);
        assert!((s.prob(&PartialAssignment::new()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.measurement_counts(1.0 / 6.0, 1e-9).unwrap(), 6);
        assert_eq!(s.measurement_counts(0.0, 1e-9).unwrap(), 10);
    }

    #[test]
    fn measure_hits_support_only() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut s: Rc<dyn StateHandle> =
            CflobddBackend.new_state(8, &PrecisionConfig::default()).unwrap().into();
        for g in [GateApplication::h(0), GateApplication::h(5), GateApplication::cx(0, 7)] {
            s = s.apply_gate(&g).unwrap().into();
        }
        for _ in 0..200 {
            let b = s.measure(&mut rng);
            assert_eq!(b.0[0], b.0[7]);
            assert!(!b.0[1] && !b.0[2] && !b.0[3] && !b.0[4] && !b.0[6]);
        }
    }

    #[test]
    fn non_power_of_two_is_config_error() {
        let r = CflobddBackend.new_state(3, &PrecisionConfig::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
