//! Variational derivatives and equality of densities modulo total
//! derivatives.

use super::atom::{Atom, Gen, Kind};
use super::normal::{rref, Ctx};
use super::poly::{Backend, Poly, Q};
use crate::error::{Error, Result};
use num_traits::Zero;
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::VecDeque;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Default cap on the number of candidate currents in [`Ctx::equal_density`].
pub const DEFAULT_BASIS_CAP: usize = 4000;

impl<B: Backend> Ctx<B> {
    /// Whether atoms of `g` are unconstrained functions under the active rules.
    pub fn is_variable(&self, g: Gen) -> bool {
        match g.kind() {
            Kind::DynField | Kind::Antifield => true,
            Kind::Background => g == Gen::Phibar,
            Kind::Variation => match g {
                Gen::Var(_) => !self.rules.var_on_shell,
                _ => true,
            },
            Kind::External => match g {
                Gen::Lambda => self.rules.cutoff.is_none(),
                _ => true,
            },
            Kind::Param => false,
        }
    }

    /// Euler–Lagrange derivative of the density `f` with respect to the
    /// generator component `v` (its `ders` and `comp` are ignored).  The Lie
    /// leg of `v` becomes the last free leg.
    pub fn euler(&self, f: &Poly<B>, v: &Atom, side: Side) -> Poly<B> {
        let target = v.bare().with_ders(&[]);
        let adj = usize::from(v.gen.adjoint());
        let groups = B::extract(f, &|a| a.gen == target.gen && a.idx == target.idx, side == Side::Right);
        let mut out = Poly::zero(f.nfree + adj);
        for (a, mut r) in groups {
            for &d in a.ders.iter() {
                r = self.d(d, &r);
            }
            if a.order() % 2 == 1 {
                r = r.neg();
            }
            out.add_assign(&r);
        }
        out
    }

    /// Distinct unconstrained generator components occurring in `f`.
    pub fn variables(&self, f: &Poly<B>) -> Vec<Atom> {
        let mut set: FxHashSet<Atom> = FxHashSet::default();
        for a in f.atoms_iter() {
            if self.is_variable(a.gen) {
                set.insert(Atom::new(a.gen, &a.idx));
            }
        }
        let mut v: Vec<Atom> = set.into_iter().collect();
        v.sort();
        v
    }

    /// `f` integrates to zero for all compactly supported variables: every
    /// Euler derivative vanishes and the variable-free part is zero.
    pub fn is_total_derivative(&self, f: &Poly<B>) -> bool {
        self.total_derivative_residual(f).is_none()
    }

    /// First obstruction to `f` being a total derivative, if any.
    pub fn total_derivative_residual(&self, f: &Poly<B>) -> Option<(Option<Atom>, Poly<B>)> {
        let fixed = f.filter(|atoms| !atoms.iter().any(|a| self.is_variable(a.gen)));
        if !fixed.is_zero() {
            return Some((None, fixed));
        }
        for v in self.variables(f) {
            let e = self.euler(f, &v, Side::Left);
            if !e.is_zero() {
                return Some((Some(v), e));
            }
        }
        None
    }

    /// Exact test whether `f − g` lies in the span of `∂_μ(m)` over
    /// monomials `m` of derivative order at most `max_order`, by linear
    /// algebra over the rationals on the canonical monomial basis.
    pub fn equal_density(&self, f: &Poly<B>, g: &Poly<B>, max_order: usize) -> Result<bool> {
        self.equal_density_capped(f, g, max_order, DEFAULT_BASIS_CAP)
    }

    pub fn equal_density_capped(&self, f: &Poly<B>, g: &Poly<B>, max_order: usize, cap: usize) -> Result<bool> {
        if f.nfree != 0 || g.nfree != 0 {
            return Err(Error::MalformedIndex("densities must have no free Lie legs".into()));
        }
        let h = self.normalize(&f.minus(g));
        if let Some(found) = h.atoms_iter().map(|a| a.order()).max() {
            if found > max_order {
                return Err(Error::OrderExceeded {
                    found,
                    bound: max_order,
                });
            }
        }
        if h.is_zero() {
            return Ok(true);
        }
        let mut seen_keys: FxHashSet<B::Key> = FxHashSet::default();
        let mut queue: VecDeque<B::Key> = VecDeque::new();
        for k in h.terms.keys() {
            seen_keys.insert(k.clone());
            queue.push_back(k.clone());
        }
        let mut seen_cands: FxHashSet<(Vec<B::Key>, u8)> = FxHashSet::default();
        let mut cands: Vec<Poly<B>> = Vec::new();
        while let Some(key) = queue.pop_front() {
            let atoms: Vec<Atom> = B::atoms(&key).to_vec();
            let mut single = Poly::<B>::zero(0);
            single.add_term(key.clone(), Q::from_integer(1));
            for (j, a) in atoms.iter().enumerate() {
                if a.order() == 0 || (j > 0 && atoms[j - 1] == *a) {
                    continue;
                }
                let stripped = a.bare().with_ders(&a.ders[1..]);
                let target = a.bare();
                let mut m = single.derivation(false, &mut |x| {
                    if *x == target {
                        Some(B::atom(&stripped))
                    } else {
                        None
                    }
                });
                m = self.normalize(&m);
                if m.is_zero() || m.atoms_iter().any(|b| b.order() > max_order) {
                    continue;
                }
                let mut mk: Vec<B::Key> = m.terms.keys().cloned().collect();
                mk.sort();
                if !seen_cands.insert((mk, a.ders[0])) {
                    continue;
                }
                let c = self.d(a.ders[0], &m);
                if c.is_zero() {
                    continue;
                }
                for k in c.terms.keys() {
                    if seen_keys.insert(k.clone()) {
                        queue.push_back(k.clone());
                    }
                }
                cands.push(c);
                if cands.len() > cap {
                    return Err(Error::BasisOverflow { size: cands.len(), cap });
                }
            }
        }
        Ok(in_span(&cands, &h))
    }
}

/// Exact membership of `h` in the linear span of `cands`.
pub fn in_span<B: Backend>(cands: &[Poly<B>], h: &Poly<B>) -> bool {
    let mut rows: FxHashMap<B::Key, usize> = FxHashMap::default();
    for p in cands.iter().chain(std::iter::once(h)) {
        for k in p.terms.keys() {
            let n = rows.len();
            rows.entry(k.clone()).or_insert(n);
        }
    }
    let nc = cands.len();
    let mut mat = vec![vec![Q::zero(); nc + 1]; rows.len()];
    for (j, p) in cands.iter().enumerate() {
        for (k, v) in &p.terms {
            mat[rows[k]][j] = *v;
        }
    }
    for (k, v) in &h.terms {
        mat[rows[k]][nc] = *v;
    }
    let piv = rref(&mut mat, nc);
    let rank = piv.len();
    mat[rank..].iter().all(|r| r[nc].is_zero())
}
