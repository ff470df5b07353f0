//! Matrix-vector product over groupings.
//!
//! A matrix over `2^L` qubits is a level-`L+1` function of the interleaved
//! variables `x0 y0 x1 y1 ...`; the vector is a level-`L` function of the
//! `y` variables. The product is computed symbolically: each exit of the
//! result grouping carries a linear combination over pairs
//! (matrix exit, vector exit) with integer multiplicities, and values are
//! substituted only at the top. Exits known to hold zero are masked out so
//! that zero terms never enter a combination.

use std::collections::BTreeMap;
use std::rc::Rc;

use rug::Integer;

use super::grouping::{CflVector, CflobddManager, Grouping, GroupingId, Middle};
use crate::dd::AmpId;
use crate::error::Result;
use crate::gate::{GateApplication, Mat2, OperatorTerm};
use crate::numerics::Amplitude;

/// Sorted `(matrix exit, vector exit, multiplicity)` triples.
pub type LinComb = Vec<(u32, u32, Integer)>;

pub(crate) type MatvecKey = (GroupingId, GroupingId, Vec<bool>, Vec<bool>);

const EMPTY: u32 = 0;

impl CflobddManager {
    fn intern_lin(&mut self, mut terms: BTreeMap<(u32, u32), Integer>) -> Result<u32> {
        terms.retain(|_, c| *c != 0);
        let lin: LinComb = terms.into_iter().map(|((i, j), c)| (i, j, c)).collect();
        self.lins.intern(lin)
    }

    fn lin(&self, id: u32) -> &LinComb {
        self.lins.get(id)
    }

    fn matvec_g(
        &mut self,
        m: GroupingId,
        v: GroupingId,
        zm: &[bool],
        zv: &[bool],
    ) -> Result<(GroupingId, Rc<Vec<u32>>)> {
        let level = self.level(v);
        if zm.iter().all(|&z| z) || zv.iter().all(|&z| z) {
            return Ok((self.constant_grouping(level)?, Rc::new(vec![EMPTY])));
        }
        if m == self.identity_grouping(level + 1)? && zm == [false, true] {
            let labels = zv
                .iter()
                .enumerate()
                .map(|(f, &z)| {
                    if z {
                        Ok(EMPTY)
                    } else {
                        self.intern_lin(BTreeMap::from([((0, f as u32), Integer::from(1))]))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((v, Rc::new(labels)));
        }
        let key = (m, v, zm.to_vec(), zv.to_vec());
        if let Some(hit) = self.matvec_cache.get(&key) {
            return Ok(hit);
        }
        let out = if level == 0 {
            self.matvec_base(m, v, zm, zv)?
        } else {
            self.matvec_internal(m, v, zm, zv)?
        };
        self.matvec_cache.put(key, out.clone());
        Ok(out)
    }

    /// One qubit: `m` reads `(x, y)`, `v` reads `y`.
    fn matvec_base(
        &mut self,
        m: GroupingId,
        v: GroupingId,
        zm: &[bool],
        zv: &[bool],
    ) -> Result<(GroupingId, Rc<Vec<u32>>)> {
        let mut labels = [EMPTY; 2];
        for (x, label) in labels.iter_mut().enumerate() {
            let mut terms = BTreeMap::new();
            for y in [false, true] {
                let me = self.eval_exit(m, &[x == 1, y]);
                let ve = self.eval_exit(v, &[y]);
                if !zm[me as usize] && !zv[ve as usize] {
                    *terms.entry((me, ve)).or_insert_with(Integer::new) += 1;
                }
            }
            *label = self.intern_lin(terms)?;
        }
        let (g, l) = self.reduce(super::grouping::FORK, &labels)?;
        Ok((g, l))
    }

    fn matvec_internal(
        &mut self,
        m: GroupingId,
        v: GroupingId,
        zm: &[bool],
        zv: &[bool],
    ) -> Result<(GroupingId, Rc<Vec<u32>>)> {
        let (level, am, mm) = self.parts(m);
        let (_, av, mv) = self.parts(v);
        let za_m: Vec<bool> = mm.iter().map(|x| x.ret.iter().all(|&e| zm[e as usize])).collect();
        let za_v: Vec<bool> = mv.iter().map(|x| x.ret.iter().all(|&e| zv[e as usize])).collect();
        let (ra, alabels) = self.matvec_g(am, av, &za_m, &za_v)?;
        let mut middles = Vec::with_capacity(alabels.len());
        for &al in alabels.iter() {
            let terms = self.lin(al).clone();
            let mut acc: Option<(GroupingId, Vec<u32>)> = None;
            for (i, j, c) in terms {
                let (xm, xv) = (&mm[i as usize], &mv[j as usize]);
                let bzm: Vec<bool> = xm.ret.iter().map(|&e| zm[e as usize]).collect();
                let bzv: Vec<bool> = xv.ret.iter().map(|&e| zv[e as usize]).collect();
                let (rb, blabels) = self.matvec_g(xm.b, xv.b, &bzm, &bzv)?;
                let mapped = blabels
                    .iter()
                    .map(|&l| {
                        let mut t = BTreeMap::new();
                        for (e, f, k) in self.lin(l) {
                            let key = (xm.ret[*e as usize], xv.ret[*f as usize]);
                            *t.entry(key).or_insert_with(Integer::new) += Integer::from(k * &c);
                        }
                        self.intern_lin(t)
                    })
                    .collect::<Result<Vec<_>>>()?;
                acc = Some(match acc {
                    None => {
                        let (g, l) = self.reduce(rb, &mapped)?;
                        (g, l.to_vec())
                    }
                    Some((g, gl)) => {
                        let (p, pairs) = self.pair_product(g, rb)?;
                        let summed = pairs
                            .iter()
                            .map(|&(s, t)| {
                                let mut sum: BTreeMap<(u32, u32), Integer> = BTreeMap::new();
                                for lid in [gl[s as usize], mapped[t as usize]] {
                                    for (e, f, k) in self.lin(lid) {
                                        *sum.entry((*e, *f)).or_insert_with(Integer::new) += k;
                                    }
                                }
                                self.intern_lin(sum)
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let (g, l) = self.reduce(p, &summed)?;
                        (g, l.to_vec())
                    }
                });
            }
            let middle = match acc {
                Some(x) => x,
                None => (self.constant_grouping(level - 2)?, vec![EMPTY]),
            };
            middles.push(middle);
        }
        let (g, labels) = self.build(level - 1, ra, middles)?;
        Ok((g, Rc::new(labels)))
    }

    fn parts(&self, g: GroupingId) -> (u32, GroupingId, Vec<Middle>) {
        match self.grouping(g) {
            Grouping::Internal { level, a, middles, .. } => (*level, *a, middles.clone()),
            _ => unreachable!("matvec recursion reached level 0 early"),
        }
    }

    /// `w = M v`; `m` is one level above `v`.
    pub fn matvec(&mut self, m: &CflVector, v: &CflVector) -> Result<CflVector> {
        debug_assert_eq!(self.level(m.root), self.level(v.root) + 1);
        let zm: Vec<bool> = m.values.iter().map(|&x| x == AmpId::ZERO).collect();
        let zv: Vec<bool> = v.values.iter().map(|&x| x == AmpId::ZERO).collect();
        let (g, lins) = self.matvec_g(m.root, v.root, &zm, &zv)?;
        let prec = self.prec();
        let mut labels = Vec::with_capacity(lins.len());
        for &l in lins.iter() {
            let mut acc = Amplitude::zero(prec);
            for (i, j, c) in self.lin(l) {
                let p = self.value(m.values[*i as usize]) * self.value(v.values[*j as usize]);
                acc = &acc + &p.scale_integer(c);
            }
            labels.push(self.intern_value(&acc)?.0);
        }
        let (root, labels) = self.reduce(g, &labels)?;
        Ok(CflVector { root, values: labels.iter().map(|&x| AmpId(x)).collect() })
    }

    fn identity_matrix(&mut self, level: u32) -> Result<CflVector> {
        Ok(CflVector {
            root: self.identity_grouping(level)?,
            values: vec![AmpId::ONE, AmpId::ZERO],
        })
    }

    fn factor_matrix(&mut self, f: &Mat2) -> Result<CflVector> {
        self.from_values(1, f)
    }

    /// Kronecker product of the term's factors over qubits
    /// `start .. start + 2^j`, as a level-`j+1` matrix.
    fn term_range(&mut self, term: &OperatorTerm, j: u32, start: usize) -> Result<CflVector> {
        let width = 1usize << j;
        if !term.factors.iter().any(|(q, _)| (start..start + width).contains(q)) {
            return self.identity_matrix(j + 1);
        }
        if j == 0 {
            return self.factor_matrix(term.factor(start).unwrap());
        }
        let lo = self.term_range(term, j - 1, start)?;
        let hi = self.term_range(term, j - 1, start + width / 2)?;
        self.kron(&lo, &hi)
    }

    /// Matrix of `g` on `n = 2^L` qubits, a sum of Kronecker products.
    pub fn gate_matrix(&mut self, g: &GateApplication, n: usize) -> Result<CflVector> {
        debug_assert!(n.is_power_of_two());
        let l = n.trailing_zeros();
        let prec = self.prec();
        let mut acc: Option<CflVector> = None;
        for mut term in g.operator_terms(prec) {
            // fold the coefficient into the deepest factor
            let deepest = term.factors.iter().map(|(q, _)| *q).max().unwrap();
            let coeff = term.coeff.clone();
            for (q, f) in term.factors.iter_mut() {
                if *q == deepest {
                    for a in f.iter_mut() {
                        *a = &*a * &coeff;
                    }
                }
            }
            let t = self.term_range(&term, l, 0)?;
            acc = Some(match acc {
                None => t,
                Some(a) => self.add(&a, &t)?,
            });
        }
        Ok(acc.expect("every gate has at least one term"))
    }
}
