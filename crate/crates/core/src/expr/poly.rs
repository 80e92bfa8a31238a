//! Graded polynomials in jet atoms with Lie-algebra tensor coefficients.
//!
//! Two interchangeable Lie backends implement [`Backend`]:
//! [`Abstract`] keeps the Lie structure as invariant trees (valid for any
//! algebra with an invariant metric), [`Su2`] enumerates components with
//! `f = ε`.  Spacetime indices are concrete in both.

use super::atom::Atom;
use super::lie::{self, Block};
use num_rational::Rational64;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use std::fmt::Debug;
use std::hash::Hash;

pub type Q = Rational64;
pub type Atoms = SmallVec<[Atom; 6]>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// Atom replacement callback; receives the atom with `comp` cleared and
/// returns its replacement with the atom's Lie leg as the single free leg.
pub type Subst<'a, B> = dyn FnMut(&Atom) -> Option<Poly<B>> + 'a;

pub trait Backend: Copy + Clone + Default + Debug + Send + Sync + 'static {
    type Key: Clone + Eq + Hash + Ord + Debug + Send + Sync;
    const NAME: &'static str;

    fn atoms(k: &Self::Key) -> &[Atom];
    fn unit_key() -> Self::Key;
    /// A single generator occurrence; adjoint atoms get one free leg.
    fn atom(a: &Atom) -> Poly<Self>;
    /// Product; free legs of `p` come first.
    fn mul(p: &Poly<Self>, q: &Poly<Self>) -> Poly<Self>;
    /// Contract free legs `i` and `j` with the invariant metric.
    fn contract(p: &Poly<Self>, i: usize, j: usize) -> Poly<Self>;
    /// `[·_i, ·_j]`: legs `i`, `j` are replaced by one new last leg.
    fn bracket(p: &Poly<Self>, i: usize, j: usize) -> Poly<Self>;
    /// New free leg `k` is old leg `perm[k]`.
    fn permute_free(p: &Poly<Self>, perm: &[usize]) -> Poly<Self>;
    /// Replace every atom simultaneously (`None` keeps it).
    fn substitute(p: &Poly<Self>, f: &mut Subst<'_, Self>) -> Poly<Self>;
    /// Sum over atom positions of the replacement (`None` means zero),
    /// with Koszul signs for an odd operator.
    fn derivation(p: &Poly<Self>, odd: bool, f: &mut Subst<'_, Self>) -> Poly<Self>;
    /// Occurrences of atoms matching `pred`, each removed and its Lie leg
    /// appended as a new free leg; sign moves the atom to the left (or right)
    /// end.  Results are grouped by the bare atom.
    fn extract(p: &Poly<Self>, pred: &dyn Fn(&Atom) -> bool, right: bool) -> Vec<(Atom, Poly<Self>)>;
    /// Constant invariant tensor given by a forest on legs `0..nfree`.
    fn tensor(blocks: &[Block], nfree: usize) -> Poly<Self>;
    /// Fixed Lie component of an adjoint atom or of a free leg (su(2) only).
    fn fixed_component(a: Option<&Atom>, c: u8) -> Option<Poly<Self>>;
}

#[derive(Clone, Debug)]
pub struct Poly<B: Backend> {
    pub nfree: usize,
    pub terms: FxHashMap<B::Key, Q>,
}

impl<B: Backend> PartialEq for Poly<B> {
    fn eq(&self, other: &Self) -> bool {
        self.nfree == other.nfree && self.terms == other.terms
    }
}

impl<B: Backend> Poly<B> {
    pub fn zero(nfree: usize) -> Self {
        Poly {
            nfree,
            terms: FxHashMap::default(),
        }
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Self::zero(0);
        p.add_term(B::unit_key(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn atom(a: &Atom) -> Self {
        B::atom(a)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, k: B::Key, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry(k) {
            Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: Q) {
        if other.is_zero() || c.is_zero() {
            return;
        }
        assert_eq!(self.nfree, other.nfree, "free-leg mismatch in sum");
        for (k, v) in &other.terms {
            self.add_term(k.clone(), *v * c);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.add_scaled(other, Q::one());
    }

    pub fn sub_assign(&mut self, other: &Self) {
        self.add_scaled(other, -Q::one());
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut r = self.clone();
        if r.is_zero() {
            r.nfree = other.nfree;
        }
        r.add_assign(other);
        r
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut r = self.clone();
        if r.is_zero() {
            r.nfree = other.nfree;
        }
        r.sub_assign(other);
        r
    }

    pub fn scale(&self, c: Q) -> Self {
        let mut r = Self::zero(self.nfree);
        if c.is_zero() {
            return r;
        }
        for (k, v) in &self.terms {
            r.terms.insert(k.clone(), *v * c);
        }
        r
    }

    pub fn neg(&self) -> Self {
        self.scale(-Q::one())
    }

    pub fn mul(&self, other: &Self) -> Self {
        B::mul(self, other)
    }

    pub fn contract(&self, i: usize, j: usize) -> Self {
        B::contract(self, i, j)
    }

    pub fn bracket(&self, i: usize, j: usize) -> Self {
        B::bracket(self, i, j)
    }

    /// Lie pairing `X^I Y^I` of two one-leg polynomials.
    pub fn dot(&self, other: &Self) -> Self {
        assert_eq!((self.nfree, other.nfree), (1, 1));
        self.mul(other).contract(0, 1)
    }

    /// `[X, Y]^I` of two one-leg polynomials.
    pub fn lie(&self, other: &Self) -> Self {
        assert_eq!((self.nfree, other.nfree), (1, 1));
        self.mul(other).bracket(0, 1)
    }

    pub fn substitute(&self, f: &mut Subst<'_, B>) -> Self {
        B::substitute(self, f)
    }

    pub fn derivation(&self, odd: bool, f: &mut Subst<'_, B>) -> Self {
        B::derivation(self, odd, f)
    }

    pub fn sorted_terms(&self) -> Vec<(&B::Key, &Q)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Keep only terms for which `keep` holds on the atom list.
    pub fn filter(&self, keep: impl Fn(&[Atom]) -> bool) -> Self {
        let mut r = Self::zero(self.nfree);
        for (k, v) in &self.terms {
            if keep(B::atoms(k)) {
                r.terms.insert(k.clone(), *v);
            }
        }
        r
    }

    pub fn atoms_iter(&self) -> impl Iterator<Item = &Atom> {
        self.terms.keys().flat_map(|k| B::atoms(k).iter())
    }
}

/// Sort atoms, returning the Koszul sign and the permutation
/// (`perm[new] = old`).  Equal odd atoms without Lie labels give zero.
fn sort_atoms(atoms: &mut Atoms) -> (i64, SmallVec<[usize; 8]>) {
    let n = atoms.len();
    let mut perm: SmallVec<[usize; 8]> = (0..n).collect();
    let mut sign = 1;
    // insertion sort tracking odd transpositions
    for i in 1..n {
        let mut j = i;
        while j > 0 && atoms[j - 1] > atoms[j] {
            if atoms[j - 1].odd() && atoms[j].odd() {
                sign = -sign;
            }
            atoms.swap(j - 1, j);
            perm.swap(j - 1, j);
            j -= 1;
        }
    }
    (sign, perm)
}

// ---------------------------------------------------------------- su(2)

#[derive(Copy, Clone, Debug, Default)]
pub struct Su2;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SKey {
    pub atoms: Atoms,
    pub free: SmallVec<[u8; 4]>,
}

fn su2_push(out: &mut Poly<Su2>, c: Q, mut atoms: Atoms, free: SmallVec<[u8; 4]>) {
    let (s, _) = sort_atoms(&mut atoms);
    if atoms.windows(2).any(|w| w[0] == w[1] && w[0].odd()) {
        return;
    }
    out.add_term(SKey { atoms, free }, c * q(s));
}

fn odd_before(atoms: &[Atom], j: usize) -> usize {
    atoms[..j].iter().filter(|a| a.odd()).count()
}

fn odd_after(atoms: &[Atom], j: usize) -> usize {
    atoms[j + 1..].iter().filter(|a| a.odd()).count()
}

/// Replacement for an su(2) atom with fixed component: the terms of `r`
/// whose single free component equals `comp`.
fn su2_project(r: &Poly<Su2>, adjoint: bool, comp: u8) -> Vec<(Atoms, Q)> {
    r.terms
        .iter()
        .filter(|(k, _)| !adjoint || k.free[0] == comp)
        .map(|(k, v)| (k.atoms.clone(), *v))
        .collect()
}

impl Backend for Su2 {
    type Key = SKey;
    const NAME: &'static str = "su2";

    fn atoms(k: &SKey) -> &[Atom] {
        &k.atoms
    }

    fn unit_key() -> SKey {
        SKey {
            atoms: Atoms::new(),
            free: SmallVec::new(),
        }
    }

    fn atom(a: &Atom) -> Poly<Su2> {
        if a.gen.adjoint() {
            let mut p = Poly::zero(1);
            for c in 0..3 {
                let mut b = a.clone();
                b.comp = c;
                p.add_term(
                    SKey {
                        atoms: SmallVec::from_elem(b, 1),
                        free: SmallVec::from_slice(&[c]),
                    },
                    Q::one(),
                );
            }
            p
        } else {
            let mut p = Poly::zero(0);
            p.add_term(
                SKey {
                    atoms: SmallVec::from_elem(a.bare(), 1),
                    free: SmallVec::new(),
                },
                Q::one(),
            );
            p
        }
    }

    fn mul(p: &Poly<Su2>, r: &Poly<Su2>) -> Poly<Su2> {
        let mut out = Poly::zero(p.nfree + r.nfree);
        for (k1, c1) in &p.terms {
            for (k2, c2) in &r.terms {
                let mut atoms = k1.atoms.clone();
                atoms.extend(k2.atoms.iter().cloned());
                let mut free = k1.free.clone();
                free.extend_from_slice(&k2.free);
                su2_push(&mut out, *c1 * *c2, atoms, free);
            }
        }
        out
    }

    fn contract(p: &Poly<Su2>, i: usize, j: usize) -> Poly<Su2> {
        assert!(i != j && i < p.nfree && j < p.nfree);
        let mut out = Poly::zero(p.nfree - 2);
        for (k, c) in &p.terms {
            if k.free[i] == k.free[j] {
                let free = k
                    .free
                    .iter()
                    .enumerate()
                    .filter(|(n, _)| *n != i && *n != j)
                    .map(|(_, x)| *x)
                    .collect();
                out.add_term(
                    SKey {
                        atoms: k.atoms.clone(),
                        free,
                    },
                    *c,
                );
            }
        }
        out
    }

    fn bracket(p: &Poly<Su2>, i: usize, j: usize) -> Poly<Su2> {
        assert!(i != j && i < p.nfree && j < p.nfree);
        let mut out = Poly::zero(p.nfree - 1);
        for (k, c) in &p.terms {
            let (a, b) = (k.free[i], k.free[j]);
            if a == b {
                continue;
            }
            let z = 3 - a - b;
            let mut free: SmallVec<[u8; 4]> = k
                .free
                .iter()
                .enumerate()
                .filter(|(n, _)| *n != i && *n != j)
                .map(|(_, x)| *x)
                .collect();
            free.push(z);
            out.add_term(
                SKey {
                    atoms: k.atoms.clone(),
                    free,
                },
                *c * q(lie::eps(z, a, b)),
            );
        }
        out
    }

    fn permute_free(p: &Poly<Su2>, perm: &[usize]) -> Poly<Su2> {
        let mut out = Poly::zero(p.nfree);
        for (k, c) in &p.terms {
            let free = perm.iter().map(|&o| k.free[o]).collect();
            out.add_term(
                SKey {
                    atoms: k.atoms.clone(),
                    free,
                },
                *c,
            );
        }
        out
    }

    fn substitute(p: &Poly<Su2>, f: &mut Subst<'_, Su2>) -> Poly<Su2> {
        let mut out = Poly::zero(p.nfree);
        let mut memo: FxHashMap<Atom, Option<Poly<Su2>>> = FxHashMap::default();
        for (k, c) in &p.terms {
            let mut partial: Vec<(Atoms, Q)> = vec![(Atoms::new(), *c)];
            for a in &k.atoms {
                let bare = a.bare();
                let rep = memo.entry(bare.clone()).or_insert_with(|| f(&bare));
                match rep {
                    None => {
                        for (atoms, _) in partial.iter_mut() {
                            atoms.push(a.clone());
                        }
                    }
                    Some(r) => {
                        let choices = su2_project(r, a.gen.adjoint(), a.comp);
                        let mut next = Vec::with_capacity(partial.len() * choices.len());
                        for (atoms, c0) in &partial {
                            for (ra, rc) in &choices {
                                let mut na = atoms.clone();
                                na.extend(ra.iter().cloned());
                                next.push((na, *c0 * *rc));
                            }
                        }
                        partial = next;
                    }
                }
                if partial.is_empty() {
                    break;
                }
            }
            for (atoms, c0) in partial {
                su2_push(&mut out, c0, atoms, k.free.clone());
            }
        }
        out
    }

    fn derivation(p: &Poly<Su2>, odd: bool, f: &mut Subst<'_, Su2>) -> Poly<Su2> {
        let mut out = Poly::zero(p.nfree);
        let mut memo: FxHashMap<Atom, Option<Poly<Su2>>> = FxHashMap::default();
        for (k, c) in &p.terms {
            for (j, a) in k.atoms.iter().enumerate() {
                let bare = a.bare();
                let rep = memo.entry(bare.clone()).or_insert_with(|| f(&bare));
                let Some(r) = rep else { continue };
                let sign = if odd && odd_before(&k.atoms, j) % 2 == 1 { -1 } else { 1 };
                for (ra, rc) in su2_project(r, a.gen.adjoint(), a.comp) {
                    let mut atoms: Atoms = k.atoms[..j].iter().cloned().collect();
                    atoms.extend(ra.iter().cloned());
                    atoms.extend(k.atoms[j + 1..].iter().cloned());
                    su2_push(&mut out, *c * rc * q(sign), atoms, k.free.clone());
                }
            }
        }
        out
    }

    fn extract(p: &Poly<Su2>, pred: &dyn Fn(&Atom) -> bool, right: bool) -> Vec<(Atom, Poly<Su2>)> {
        let mut groups: FxHashMap<Atom, Poly<Su2>> = FxHashMap::default();
        for (k, c) in &p.terms {
            for (j, a) in k.atoms.iter().enumerate() {
                let bare = a.bare();
                if !pred(&bare) {
                    continue;
                }
                let n = if right {
                    odd_after(&k.atoms, j)
                } else {
                    odd_before(&k.atoms, j)
                };
                let sign = if a.odd() && n % 2 == 1 { -1 } else { 1 };
                let mut atoms = k.atoms.clone();
                atoms.remove(j);
                let mut free = k.free.clone();
                let adj = a.gen.adjoint();
                if adj {
                    free.push(a.comp);
                }
                let nf = p.nfree + usize::from(adj);
                groups
                    .entry(bare)
                    .or_insert_with(|| Poly::zero(nf))
                    .add_term(SKey { atoms, free }, *c * q(sign));
            }
        }
        let mut v: Vec<_> = groups.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    fn tensor(blocks: &[Block], nfree: usize) -> Poly<Su2> {
        let mut out = Poly::zero(nfree);
        let total = 3usize.pow(nfree as u32);
        for mut n in 0..total {
            let mut comps = vec![0u8; nfree];
            for c in comps.iter_mut() {
                *c = (n % 3) as u8;
                n /= 3;
            }
            let v = lie::eval_forest_su2(blocks, &comps);
            if v != 0 {
                out.add_term(
                    SKey {
                        atoms: Atoms::new(),
                        free: SmallVec::from_slice(&comps),
                    },
                    q(v),
                );
            }
        }
        out
    }

    fn fixed_component(a: Option<&Atom>, c: u8) -> Option<Poly<Su2>> {
        if c > 2 {
            return None;
        }
        let mut p;
        match a {
            Some(a) => {
                if !a.gen.adjoint() {
                    return None;
                }
                let mut b = a.bare();
                b.comp = c;
                p = Poly::zero(0);
                p.add_term(
                    SKey {
                        atoms: SmallVec::from_elem(b, 1),
                        free: SmallVec::new(),
                    },
                    Q::one(),
                );
            }
            None => {
                p = Poly::zero(1);
                p.add_term(
                    SKey {
                        atoms: Atoms::new(),
                        free: SmallVec::from_slice(&[c]),
                    },
                    Q::one(),
                );
            }
        }
        Some(p)
    }
}

// ------------------------------------------------------------- abstract

#[derive(Copy, Clone, Debug, Default)]
pub struct Abstract;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AKey {
    pub atoms: Atoms,
    pub forest: lie::ForestKey,
}

impl AKey {
    pub fn n_adj(&self) -> usize {
        self.atoms.iter().filter(|a| a.gen.adjoint()).count()
    }
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    if n == 0 {
        return vec![(vec![], 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            // inserting the largest element at `pos` passes (len-pos) elements
            let sign = if (p.len() - pos) % 2 == 1 { -s } else { s };
            out.push((q, sign));
        }
    }
    out
}

/// Canonicalize a raw term and add it to `out`.
///
/// Legs of `blocks` are numbered by the adjoint atoms of `atoms` in their
/// given order, then `nfree` free legs.
fn abs_push(out: &mut Poly<Abstract>, c: Q, mut atoms: Atoms, mut blocks: Vec<Block>, nfree: usize) {
    let raw_adj: SmallVec<[usize; 8]> = atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.gen.adjoint())
        .map(|(i, _)| i)
        .collect();
    let n_adj = raw_adj.len();
    let (sign, perm) = sort_atoms(&mut atoms);
    if atoms
        .windows(2)
        .any(|w| w[0] == w[1] && w[0].odd() && !w[0].gen.adjoint())
    {
        return;
    }
    // raw adjoint leg -> sorted adjoint leg
    let mut pos_of_raw = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        pos_of_raw[old] = new;
    }
    let mut sorted_rank = vec![0u8; atoms.len()];
    let mut r = 0u8;
    for (i, a) in atoms.iter().enumerate() {
        if a.gen.adjoint() {
            sorted_rank[i] = r;
            r += 1;
        }
    }
    let mut map: Vec<u8> = Vec::with_capacity(n_adj + nfree);
    for &ra in &raw_adj {
        map.push(sorted_rank[pos_of_raw[ra]]);
    }
    for f in 0..nfree {
        map.push((n_adj + f) as u8);
    }
    lie::relabel(&mut blocks, &map);
    let c = c * q(sign);
    let forests = lie::canon_forest(&blocks);
    if forests.is_empty() {
        return;
    }

    // groups of identical adjoint atoms (by leg rank)
    let adj_atoms: Vec<&Atom> = atoms.iter().filter(|a| a.gen.adjoint()).collect();
    let mut groups: Vec<(usize, usize, bool)> = Vec::new();
    let mut i = 0;
    while i < adj_atoms.len() {
        let mut j = i + 1;
        while j < adj_atoms.len() && adj_atoms[j] == adj_atoms[i] {
            j += 1;
        }
        if j - i > 1 {
            groups.push((i, j - i, adj_atoms[i].odd()));
        }
        i = j;
    }
    if groups.is_empty() {
        for (s, k) in forests {
            out.add_term(
                AKey {
                    atoms: atoms.clone(),
                    forest: k,
                },
                c * q(s),
            );
        }
        return;
    }
    // enumerate the product of symmetric groups
    let mut relabels: Vec<(Vec<u8>, i64)> = vec![((0..(n_adj + nfree) as u8).collect(), 1)];
    for &(start, len, odd) in &groups {
        let perms = permutations(len);
        let mut next = Vec::with_capacity(relabels.len() * perms.len());
        for (m, s) in &relabels {
            for (p, ps) in &perms {
                let mut m2 = m.clone();
                for (k, &pk) in p.iter().enumerate() {
                    m2[start + k] = m[start + pk];
                }
                next.push((m2, if odd { s * ps } else { *s }));
            }
        }
        relabels = next;
    }
    let weight = c / q(relabels.len() as i64);
    let mut acc: FxHashMap<lie::ForestKey, Q> = FxHashMap::default();
    for (s0, k) in &forests {
        let base = lie::blocks_of(k);
        for (m, s) in &relabels {
            let mut bl = base.clone();
            lie::relabel(&mut bl, m);
            for (s1, k1) in lie::canon_forest(&bl) {
                *acc.entry(k1).or_insert_with(Q::zero) += weight * q(s0 * s * s1);
            }
        }
    }
    for (k, v) in acc {
        out.add_term(
            AKey {
                atoms: atoms.clone(),
                forest: k,
            },
            v,
        );
    }
}

/// Canonical forest of a term whose atom order is unchanged.
fn abs_push_forest(out: &mut Poly<Abstract>, c: Q, atoms: &Atoms, blocks: &[Block]) {
    for (s, k) in lie::canon_forest(blocks) {
        out.add_term(
            AKey {
                atoms: atoms.clone(),
                forest: k,
            },
            c * q(s),
        );
    }
}

fn remove_free(nfree_legs: usize, n_adj: usize, drop: &[usize]) -> Vec<u8> {
    // map for all legs 0..n_adj+nfree (+extra), dropped legs map to 255
    let mut map = Vec::new();
    for l in 0..n_adj {
        map.push(l as u8);
    }
    let mut next = n_adj as u8;
    for f in 0..nfree_legs {
        if drop.contains(&f) {
            map.push(u8::MAX);
        } else {
            map.push(next);
            next += 1;
        }
    }
    map
}

/// Replace the atoms of one term.  `reps[j]` is `None` to keep atom `j`.
fn abs_replace(out: &mut Poly<Abstract>, key: &AKey, c: Q, nfree: usize, reps: &[Option<&Poly<Abstract>>]) {
    let n_adj = key.n_adj();
    // leg index of each atom in the original forest
    let mut atom_leg = vec![usize::MAX; key.atoms.len()];
    let mut l = 0;
    for (i, a) in key.atoms.iter().enumerate() {
        if a.gen.adjoint() {
            atom_leg[i] = l;
            l += 1;
        }
    }
    let base_blocks = lie::blocks_of(&key.forest);

    // partial products: (coef, atoms, blocks from replacements with local legs
    // shifted, pending glue pairs (orig leg, replacement free leg))
    struct Part {
        c: Q,
        atoms: Atoms,
        blocks: Vec<Block>,
        glue: SmallVec<[(u8, u8); 6]>,
        // orig atom leg -> result adjoint leg (identity replacements)
        direct: SmallVec<[(u8, u8); 6]>,
        n_adj: u8,
    }
    // temporary leg numbers start after all result legs; use high range
    const TMP: u8 = 128;
    let mut parts = vec![Part {
        c,
        atoms: Atoms::new(),
        blocks: Vec::new(),
        glue: SmallVec::new(),
        direct: SmallVec::new(),
        n_adj: 0,
    }];
    for (j, a) in key.atoms.iter().enumerate() {
        match reps[j] {
            None => {
                for p in parts.iter_mut() {
                    p.atoms.push(a.clone());
                    if a.gen.adjoint() {
                        p.direct.push((atom_leg[j] as u8, p.n_adj));
                        p.n_adj += 1;
                    }
                }
            }
            Some(r) => {
                let mut next = Vec::with_capacity(parts.len() * r.terms.len());
                for p in &parts {
                    for (rk, rc) in &r.terms {
                        let rn = rk.n_adj() as u8;
                        let mut bl = lie::blocks_of(&rk.forest);
                        // local legs: adjoint 0..rn -> p.n_adj + .., free leg rn -> temp
                        let tmp_free = TMP + 2 * j as u8 + 1;
                        let map: Vec<u8> = (0..=rn).map(|x| if x < rn { p.n_adj + x } else { tmp_free }).collect();
                        lie::relabel(&mut bl, &map);
                        let mut np = Part {
                            c: p.c * *rc,
                            atoms: p.atoms.clone(),
                            blocks: p.blocks.clone(),
                            glue: p.glue.clone(),
                            direct: p.direct.clone(),
                            n_adj: p.n_adj + rn,
                        };
                        np.atoms.extend(rk.atoms.iter().cloned());
                        np.blocks.extend(bl);
                        if a.gen.adjoint() {
                            np.glue.push((atom_leg[j] as u8, tmp_free));
                        }
                        next.push(np);
                    }
                }
                parts = next;
            }
        }
    }
    for p in parts {
        let total_adj = p.n_adj as usize;
        // original forest: atom legs -> direct leg or temp; free legs -> after adjoint
        let mut map = vec![0u8; n_adj + nfree];
        for &(o, d) in &p.direct {
            map[o as usize] = d;
        }
        for &(o, _) in &p.glue {
            map[o as usize] = TMP + 2 * o;
        }
        for f in 0..nfree {
            map[n_adj + f] = (total_adj + f) as u8;
        }
        let mut bl = base_blocks.clone();
        lie::relabel(&mut bl, &map);
        let mut blocks = p.blocks;
        blocks.extend(bl);
        let mut c = p.c;
        for &(o, t) in &p.glue {
            match lie::glue(&mut blocks, TMP + 2 * o, t) {
                Ok(s) => c *= q(s),
                Err(_) => panic!("loop contraction in abstract Lie backend"),
            }
        }
        abs_push(out, c, p.atoms, blocks, nfree);
    }
}

impl Backend for Abstract {
    type Key = AKey;
    const NAME: &'static str = "abstract";

    fn atoms(k: &AKey) -> &[Atom] {
        &k.atoms
    }

    fn unit_key() -> AKey {
        AKey {
            atoms: Atoms::new(),
            forest: lie::ForestKey::new(),
        }
    }

    fn atom(a: &Atom) -> Poly<Abstract> {
        let a = a.bare();
        if a.gen.adjoint() {
            let mut p = Poly::zero(1);
            p.add_term(
                AKey {
                    atoms: SmallVec::from_elem(a, 1),
                    forest: SmallVec::from_slice(&[2, 0, 1]),
                },
                Q::one(),
            );
            p
        } else {
            let mut p = Poly::zero(0);
            p.add_term(
                AKey {
                    atoms: SmallVec::from_elem(a, 1),
                    forest: lie::ForestKey::new(),
                },
                Q::one(),
            );
            p
        }
    }

    fn mul(p: &Poly<Abstract>, r: &Poly<Abstract>) -> Poly<Abstract> {
        let nfree = p.nfree + r.nfree;
        let mut out = Poly::zero(nfree);
        for (k1, c1) in &p.terms {
            let n1 = k1.n_adj();
            let b1 = lie::blocks_of(&k1.forest);
            for (k2, c2) in &r.terms {
                let n2 = k2.n_adj();
                let m1: Vec<u8> = (0..n1 + p.nfree)
                    .map(|l| if l < n1 { l } else { n1 + n2 + (l - n1) } as u8)
                    .collect();
                let m2: Vec<u8> = (0..n2 + r.nfree)
                    .map(|l| if l < n2 { n1 + l } else { n1 + n2 + p.nfree + (l - n2) } as u8)
                    .collect();
                let mut bl = b1.clone();
                lie::relabel(&mut bl, &m1);
                let mut bl2 = lie::blocks_of(&k2.forest);
                lie::relabel(&mut bl2, &m2);
                bl.extend(bl2);
                let mut atoms = k1.atoms.clone();
                atoms.extend(k2.atoms.iter().cloned());
                abs_push(&mut out, *c1 * *c2, atoms, bl, nfree);
            }
        }
        out
    }

    fn contract(p: &Poly<Abstract>, i: usize, j: usize) -> Poly<Abstract> {
        assert!(i != j && i < p.nfree && j < p.nfree);
        let mut out = Poly::zero(p.nfree - 2);
        for (k, c) in &p.terms {
            let n = k.n_adj();
            let mut bl = lie::blocks_of(&k.forest);
            let s = lie::glue(&mut bl, (n + i) as u8, (n + j) as u8)
                .unwrap_or_else(|_| panic!("loop contraction in abstract Lie backend"));
            let map = remove_free(p.nfree, n, &[i, j]);
            lie::relabel(&mut bl, &map);
            abs_push_forest(&mut out, *c * q(s), &k.atoms, &bl);
        }
        out
    }

    fn bracket(p: &Poly<Abstract>, i: usize, j: usize) -> Poly<Abstract> {
        assert!(i != j && i < p.nfree && j < p.nfree);
        let mut out = Poly::zero(p.nfree - 1);
        for (k, c) in &p.terms {
            let n = k.n_adj();
            let total = n + p.nfree;
            let (z, t1, t2) = (total as u8, total as u8 + 1, total as u8 + 2);
            let mut bl = lie::blocks_of(&k.forest);
            bl.push(Block {
                root: z,
                word: lie::bracket(&[t1], &[t2]),
            });
            let s1 = lie::glue(&mut bl, (n + i) as u8, t1);
            let s2 = lie::glue(&mut bl, (n + j) as u8, t2);
            let s = match (s1, s2) {
                (Ok(a), Ok(b)) => a * b,
                _ => panic!("loop contraction in abstract Lie backend"),
            };
            let mut map = remove_free(p.nfree, n, &[i, j]);
            map.push((n + p.nfree - 2) as u8);
            lie::relabel(&mut bl, &map);
            abs_push_forest(&mut out, *c * q(s), &k.atoms, &bl);
        }
        out
    }

    fn permute_free(p: &Poly<Abstract>, perm: &[usize]) -> Poly<Abstract> {
        let mut out = Poly::zero(p.nfree);
        for (k, c) in &p.terms {
            let n = k.n_adj();
            let mut map: Vec<u8> = (0..n as u8).collect();
            let mut inv = vec![0u8; p.nfree];
            for (new, &old) in perm.iter().enumerate() {
                inv[old] = (n + new) as u8;
            }
            map.extend(inv);
            let mut bl = lie::blocks_of(&k.forest);
            lie::relabel(&mut bl, &map);
            abs_push_forest(&mut out, *c, &k.atoms, &bl);
        }
        out
    }

    fn substitute(p: &Poly<Abstract>, f: &mut Subst<'_, Abstract>) -> Poly<Abstract> {
        let mut out = Poly::zero(p.nfree);
        let mut memo: FxHashMap<Atom, Option<Poly<Abstract>>> = FxHashMap::default();
        for k in p.terms.keys() {
            for a in &k.atoms {
                if !memo.contains_key(a) {
                    let r = f(a);
                    memo.insert(a.clone(), r);
                }
            }
        }
        for (k, c) in &p.terms {
            let reps: Vec<Option<&Poly<Abstract>>> = k.atoms.iter().map(|a| memo[a].as_ref()).collect();
            if reps.iter().all(|r| r.is_none()) {
                out.add_term(k.clone(), *c);
                continue;
            }
            abs_replace(&mut out, k, *c, p.nfree, &reps);
        }
        out
    }

    fn derivation(p: &Poly<Abstract>, odd: bool, f: &mut Subst<'_, Abstract>) -> Poly<Abstract> {
        let mut out = Poly::zero(p.nfree);
        let mut memo: FxHashMap<Atom, Option<Poly<Abstract>>> = FxHashMap::default();
        for k in p.terms.keys() {
            for a in &k.atoms {
                if !memo.contains_key(a) {
                    let r = f(a);
                    memo.insert(a.clone(), r);
                }
            }
        }
        for (k, c) in &p.terms {
            for j in 0..k.atoms.len() {
                let Some(r) = memo[&k.atoms[j]].as_ref() else { continue };
                if j > 0 && k.atoms[j] == k.atoms[j - 1] {
                    // handled together with the first equal atom below
                    continue;
                }
                // identical atoms at j..j+m: symmetric, so one position times m
                // is not valid for odd atoms; sum all positions explicitly
                let mut m = 1;
                while j + m < k.atoms.len() && k.atoms[j + m] == k.atoms[j] {
                    m += 1;
                }
                for jj in j..j + m {
                    let sign = if odd && odd_before(&k.atoms, jj) % 2 == 1 {
                        -1
                    } else {
                        1
                    };
                    let mut reps: Vec<Option<&Poly<Abstract>>> = vec![None; k.atoms.len()];
                    reps[jj] = Some(r);
                    abs_replace(&mut out, k, *c * q(sign), p.nfree, &reps);
                }
            }
        }
        out
    }

    fn extract(p: &Poly<Abstract>, pred: &dyn Fn(&Atom) -> bool, right: bool) -> Vec<(Atom, Poly<Abstract>)> {
        let mut groups: FxHashMap<Atom, Poly<Abstract>> = FxHashMap::default();
        for (k, c) in &p.terms {
            let n = k.n_adj();
            let mut leg = 0usize;
            for (j, a) in k.atoms.iter().enumerate() {
                let adj = a.gen.adjoint();
                if pred(a) {
                    let cnt = if right {
                        odd_after(&k.atoms, j)
                    } else {
                        odd_before(&k.atoms, j)
                    };
                    let sign = if a.odd() && cnt % 2 == 1 { -1 } else { 1 };
                    let mut atoms = k.atoms.clone();
                    atoms.remove(j);
                    let mut bl = lie::blocks_of(&k.forest);
                    if adj {
                        // legs: adjoint legs after `leg` shift down, free shift down,
                        // removed leg becomes last free leg
                        let total = n + p.nfree;
                        let map: Vec<u8> = (0..total)
                            .map(|l| {
                                if l < leg {
                                    l as u8
                                } else if l == leg {
                                    (total - 1) as u8
                                } else {
                                    (l - 1) as u8
                                }
                            })
                            .collect();
                        lie::relabel(&mut bl, &map);
                    }
                    let nf = p.nfree + usize::from(adj);
                    let g = groups.entry(a.clone()).or_insert_with(|| Poly::zero(nf));
                    abs_push_forest(g, *c * q(sign), &atoms, &bl);
                }
                if adj {
                    leg += 1;
                }
            }
        }
        let mut v: Vec<_> = groups.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    fn tensor(blocks: &[Block], nfree: usize) -> Poly<Abstract> {
        let mut out = Poly::zero(nfree);
        abs_push_forest(&mut out, Q::one(), &Atoms::new(), blocks);
        out
    }

    fn fixed_component(_a: Option<&Atom>, _c: u8) -> Option<Poly<Abstract>> {
        None
    }
}

/// Evaluate an abstract polynomial in the su(2) basis by expanding every
/// invariant forest over component assignments of its legs.
pub fn to_su2(p: &Poly<Abstract>) -> Poly<Su2> {
    let mut out = Poly::zero(p.nfree);
    for (k, c) in &p.terms {
        let n = k.n_adj();
        let legs = n + p.nfree;
        let blocks = lie::blocks_of(&k.forest);
        let mut comps = vec![0u8; legs];
        for mut code in 0..3usize.pow(legs as u32) {
            for x in comps.iter_mut() {
                *x = (code % 3) as u8;
                code /= 3;
            }
            let v = lie::eval_forest_su2(&blocks, &comps);
            if v == 0 {
                continue;
            }
            let mut atoms = k.atoms.clone();
            let mut leg = 0;
            for a in atoms.iter_mut() {
                if a.gen.adjoint() {
                    a.comp = comps[leg];
                    leg += 1;
                }
            }
            su2_push(&mut out, *c * q(v), atoms, SmallVec::from_slice(&comps[n..]));
        }
    }
    out
}
