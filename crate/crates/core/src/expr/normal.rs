//! Normal form of jet atoms.
//!
//! Covariant derivatives are sorted ascending using
//! `[∇̄_a, ∇̄_b]Y = [F̄_ab, Y]`, `F̄_{μν}` is stored with `μ < ν`, and jets of
//! `F̄` (and of on-shell variations) are reduced modulo the Bianchi identity
//! and the active on-shell equations by eliminating pivot jets order by
//! order.

use super::atom::{eta, Atom, Gen};
use super::poly::{q, Backend, Poly, Q};
use crate::error::{Error, Region, Result};
use num_traits::{One, Zero};
use parking_lot::RwLock;
use rustc_hash::FxHashMap;
use std::sync::Arc;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cutoff {
    /// `λ = 1` with vanishing derivatives.
    One,
    /// `λ = 0`.
    Zero,
}

/// Rewrite rules applied during normalization.  The Bianchi identity and
/// derivative commutation are always on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleSet {
    pub cutoff: Option<Cutoff>,
    /// `∇̄^μ F̄_{μν} = 0`.
    pub bg_on_shell: bool,
    /// Background variations solve the linearized equation.
    pub var_on_shell: bool,
}

impl RuleSet {
    pub const NONE: RuleSet = RuleSet {
        cutoff: None,
        bg_on_shell: false,
        var_on_shell: false,
    };

    /// Every rule that holds on `region`.
    pub fn for_region(region: Region) -> RuleSet {
        match region {
            Region::R => RuleSet {
                cutoff: Some(Cutoff::One),
                bg_on_shell: true,
                var_on_shell: true,
            },
            Region::U => RuleSet {
                cutoff: None,
                bg_on_shell: true,
                var_on_shell: true,
            },
            Region::V | Region::M => RuleSet::NONE,
            Region::Exterior => RuleSet {
                cutoff: Some(Cutoff::Zero),
                bg_on_shell: false,
                var_on_shell: false,
            },
        }
    }

    /// Rules valid on `region` are valid on every smaller region.
    pub fn check(&self, region: Region) -> Result<()> {
        let allowed = RuleSet::for_region(region);
        let bad = |rule| Err(Error::RuleNotValidOnRegion { rule, region });
        if self.cutoff.is_some() && self.cutoff != allowed.cutoff {
            return bad(match self.cutoff {
                Some(Cutoff::One) => "cutoff = 1",
                _ => "cutoff = 0",
            });
        }
        if self.bg_on_shell && !allowed.bg_on_shell {
            return bad("background on-shell");
        }
        if self.var_on_shell && !allowed.var_on_shell {
            return bad("variation on-shell");
        }
        Ok(())
    }
}

type Cache<B> = RwLock<FxHashMap<Atom, Option<Poly<B>>>>;
type JetTable<B> = Arc<FxHashMap<Atom, Poly<B>>>;

/// Normalization context: spacetime dimension, active rules and memo tables.
pub struct Ctx<B: Backend> {
    pub dim: u8,
    pub rules: RuleSet,
    nf_cache: Cache<B>,
    raw_cache: Cache<B>,
    jets: RwLock<FxHashMap<(Gen, usize), JetTable<B>>>,
}

impl<B: Backend> Ctx<B> {
    pub fn new(dim: u8, rules: RuleSet) -> Self {
        assert!(dim >= 2, "spacetime dimension must be at least 2");
        Ctx {
            dim,
            rules,
            nf_cache: RwLock::new(FxHashMap::default()),
            raw_cache: RwLock::new(FxHashMap::default()),
            jets: RwLock::new(FxHashMap::default()),
        }
    }

    pub fn for_region(dim: u8, region: Region) -> Self {
        Ctx::new(dim, RuleSet::for_region(region))
    }

    /// Same dimension, different rules.
    pub fn with_rules(&self, rules: RuleSet) -> Self {
        Ctx::new(self.dim, rules)
    }

    pub fn atom(&self, a: &Atom) -> Poly<B> {
        self.nf(a)
    }

    /// Normal form of one atom as a polynomial (one free leg for adjoint
    /// generators).
    pub fn nf(&self, a: &Atom) -> Poly<B> {
        match self.nf_opt(a, false) {
            Some(p) => p,
            None => B::atom(a),
        }
    }

    /// `None` when the atom is already normal.
    fn nf_opt(&self, a: &Atom, raw: bool) -> Option<Poly<B>> {
        let a = a.bare();
        let cache = if raw { &self.raw_cache } else { &self.nf_cache };
        if let Some(r) = cache.read().get(&a) {
            return r.clone();
        }
        let r = self.compute(&a, raw);
        cache.write().insert(a, r.clone());
        r
    }

    fn nf_mode(&self, a: &Atom, raw: bool) -> Poly<B> {
        self.nf_opt(a, raw).unwrap_or_else(|| B::atom(a))
    }

    fn zero_like(a: &Atom) -> Poly<B> {
        Poly::zero(usize::from(a.gen.adjoint()))
    }

    fn compute(&self, a: &Atom, raw: bool) -> Option<Poly<B>> {
        match a.gen {
            Gen::Mass => {
                return if a.ders.is_empty() {
                    None
                } else {
                    Some(Self::zero_like(a))
                };
            }
            Gen::Lambda => match self.rules.cutoff {
                Some(Cutoff::One) => {
                    return Some(if a.ders.is_empty() { Poly::one() } else { Poly::zero(0) });
                }
                Some(Cutoff::Zero) => return Some(Poly::zero(0)),
                None => {}
            },
            _ => {}
        }
        if !a.gen.adjoint() {
            // scalars: partial derivatives commute
            if a.ders_sorted() {
                return None;
            }
            let mut b = a.clone();
            b.ders.sort_unstable();
            return Some(B::atom(&b));
        }
        if a.gen == Gen::Fbar {
            let (m, n) = (a.idx[0], a.idx[1]);
            if m == n {
                return Some(Self::zero_like(a));
            }
            if m > n {
                let mut b = a.clone();
                b.idx.swap(0, 1);
                return Some(self.nf_mode(&b, raw).neg());
            }
        }
        if let Some(i) = (0..a.ders.len().saturating_sub(1)).find(|&i| a.ders[i] > a.ders[i + 1]) {
            let (x, y) = (a.ders[i], a.ders[i + 1]);
            let mut swapped = a.clone();
            swapped.ders.swap(i, i + 1);
            let mut out = self.nf_mode(&swapped, raw);
            let inner = a.clone().with_ders(&a.ders[i + 2..]);
            let comm = self
                .nf_mode(&Atom::new(Gen::Fbar, &[x, y]), raw)
                .lie(&self.nf_mode(&inner, raw));
            out.add_assign(&self.d_prefix_mode(&a.ders[..i], comm, raw));
            return Some(out);
        }
        if raw {
            return None;
        }
        let reducible = match a.gen {
            Gen::Fbar => a.order() >= 1,
            Gen::Var(_) => self.rules.var_on_shell && a.order() >= 2,
            _ => false,
        };
        if reducible {
            return self.jet_rewrite(a);
        }
        None
    }

    /// Normalize every atom of `p`.
    pub fn normalize(&self, p: &Poly<B>) -> Poly<B> {
        p.substitute(&mut |a| self.nf_opt(a, false))
    }

    /// `∇̄_mu` of a normalized polynomial.
    pub fn d(&self, mu: u8, p: &Poly<B>) -> Poly<B> {
        self.d_mode(mu, p, false)
    }

    /// `∇̄^mu = η^{μμ} ∇̄_μ`.
    pub fn d_up(&self, mu: u8, p: &Poly<B>) -> Poly<B> {
        self.d(mu, p).scale(q(eta(mu)))
    }

    fn d_mode(&self, mu: u8, p: &Poly<B>, raw: bool) -> Poly<B> {
        p.derivation(false, &mut |a| {
            if a.gen == Gen::Mass {
                return None;
            }
            let r = self.nf_mode(&a.prepend(mu), raw);
            if r.is_zero() {
                None
            } else {
                Some(r)
            }
        })
    }

    /// `∇̄_{d_0} … ∇̄_{d_{k-1}} p`, outermost index first.
    pub fn d_prefix(&self, ders: &[u8], p: Poly<B>) -> Poly<B> {
        self.d_prefix_mode(ders, p, false)
    }

    fn d_prefix_mode(&self, ders: &[u8], mut p: Poly<B>, raw: bool) -> Poly<B> {
        for &d in ders.iter().rev() {
            p = self.d_mode(d, &p, raw);
        }
        p
    }

    /// Covariant d'Alembertian `∇̄^ρ ∇̄_ρ`.
    pub fn box_op(&self, p: &Poly<B>) -> Poly<B> {
        let mut out = Poly::zero(p.nfree);
        for r in 0..self.dim {
            out.add_assign(&self.d_up(r, &self.d(r, p)));
        }
        out
    }

    fn jet_rewrite(&self, a: &Atom) -> Option<Poly<B>> {
        let key = (a.gen, a.order());
        let table = {
            let cached = self.jets.read().get(&key).cloned();
            match cached {
                Some(t) => t,
                None => {
                    let t = Arc::new(self.build_jets(a.gen, a.order()));
                    self.jets.write().entry(key).or_insert(t).clone()
                }
            }
        };
        table.get(a).cloned()
    }

    /// Pivot rewrites for sorted jets of `gen` at derivative order `k`.
    fn build_jets(&self, gen: Gen, k: usize) -> FxHashMap<Atom, Poly<B>> {
        let dim = self.dim;
        let mut rows: Vec<(Vec<u8>, Vec<(Q, Atom)>)> = Vec::new();
        let mut lower: Vec<Option<(Q, Atom, Atom)>> = Vec::new();
        match gen {
            Gen::Fbar => {
                for beta in multisets(dim, k - 1) {
                    for r in 0..dim {
                        for m in r + 1..dim {
                            for n in m + 1..dim {
                                let base = vec![
                                    (Q::one(), Atom::new(Gen::Fbar, &[m, n]).with_ders(&[r])),
                                    (Q::one(), Atom::new(Gen::Fbar, &[n, r]).with_ders(&[m])),
                                    (Q::one(), Atom::new(Gen::Fbar, &[r, m]).with_ders(&[n])),
                                ];
                                rows.push((beta.clone(), base));
                                lower.push(None);
                            }
                        }
                    }
                    if self.rules.bg_on_shell {
                        for n in 0..dim {
                            let base = (0..dim)
                                .filter(|&m| m != n)
                                .map(|m| (q(eta(m)), Atom::new(Gen::Fbar, &[m, n]).with_ders(&[m])))
                                .collect();
                            rows.push((beta.clone(), base));
                            lower.push(None);
                        }
                    }
                }
            }
            Gen::Var(_) => {
                // ∇̄^ν(∇̄_ν a_μ − ∇̄_μ a_ν) + [F̄_{μν}, a^ν]
                for beta in multisets(dim, k - 2) {
                    for m in 0..dim {
                        let mut base = Vec::new();
                        for n in 0..dim {
                            base.push((q(eta(n)), Atom::new(gen, &[m]).with_ders(&[n, n])));
                            base.push((-q(eta(n)), Atom::new(gen, &[n]).with_ders(&[n, m])));
                        }
                        rows.push((beta.clone(), base));
                        lower.push(Some((Q::one(), Atom::new(Gen::Fbar, &[m, 0]), Atom::new(gen, &[0]))));
                    }
                }
            }
            _ => return FxHashMap::default(),
        }

        // top-order linear parts
        let mut cols: Vec<Atom> = sorted_jets(gen, dim, k);
        cols.sort();
        cols.reverse();
        let col_of: FxHashMap<Atom, usize> = cols.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let nr = rows.len();
        let nc = cols.len();
        let mut mat: Vec<Vec<Q>> = vec![vec![Q::zero(); nc + nr]; nr];
        for (ri, (beta, base)) in rows.iter().enumerate() {
            for (c, at) in base {
                let mut ders: Vec<u8> = beta.clone();
                ders.extend_from_slice(&at.ders);
                ders.sort_unstable();
                let mut b = at.clone().with_ders(&ders);
                let mut s = *c;
                if b.gen == Gen::Fbar {
                    if b.idx[0] == b.idx[1] {
                        continue;
                    }
                    if b.idx[0] > b.idx[1] {
                        b.idx.swap(0, 1);
                        s = -s;
                    }
                }
                mat[ri][col_of[&b]] += s;
            }
            mat[ri][nc + ri] = Q::one();
        }
        let pivots = rref(&mut mat, nc);

        let mut full_cache: FxHashMap<usize, Poly<B>> = FxHashMap::default();
        let mut out = FxHashMap::default();
        for (ri, pc) in pivots {
            let mut rw = B::atom(&cols[pc]);
            for s in 0..nr {
                let c = mat[ri][nc + s];
                if c.is_zero() {
                    continue;
                }
                let full = full_cache
                    .entry(s)
                    .or_insert_with(|| self.full_relation(&rows[s].0, &rows[s].1, lower[s].as_ref(), gen, k));
                rw.add_scaled(full, -c);
            }
            debug_assert!(rw
                .atoms_iter()
                .all(|x| !(x.gen == gen && x.order() == k && x.bare() == cols[pc])));
            out.insert(cols[pc].clone(), rw);
        }
        out
    }

    /// `∇̄_β` of a relation, with top-order jets only sorted and everything of
    /// lower order fully normalized.
    fn full_relation(
        &self,
        beta: &[u8],
        base: &[(Q, Atom)],
        lower: Option<&(Q, Atom, Atom)>,
        gen: Gen,
        k: usize,
    ) -> Poly<B> {
        let mut p = Poly::zero(1);
        for (c, a) in base {
            p.add_scaled(&self.nf_mode(a, true), *c);
        }
        if let Some((c, f, v)) = lower {
            // Σ_ν η^{νν} [F̄_{μν}, a_ν]
            for n in 0..self.dim {
                let mut f = f.clone();
                f.idx[1] = n;
                let mut v = v.clone();
                v.idx[0] = n;
                let t = self.nf_mode(&f, true).lie(&self.nf_mode(&v, true));
                p.add_scaled(&t, *c * q(eta(n)));
            }
        }
        let raw = self.d_prefix_mode(beta, p, true);
        raw.substitute(&mut |a| {
            if a.gen == gen && a.order() == k {
                None
            } else {
                self.nf_opt(a, false)
            }
        })
    }
}

/// Multisets of size `k` from `0..dim`, as sorted vectors.
pub fn multisets(dim: u8, k: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in &out {
            let lo = v.last().copied().unwrap_or(0);
            for x in lo..dim {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// All sorted jets of order `k` of an adjoint background generator.
fn sorted_jets(gen: Gen, dim: u8, k: usize) -> Vec<Atom> {
    let mut out = Vec::new();
    for ders in multisets(dim, k) {
        match gen {
            Gen::Fbar => {
                for m in 0..dim {
                    for n in m + 1..dim {
                        out.push(Atom::new(gen, &[m, n]).with_ders(&ders));
                    }
                }
            }
            _ => {
                for m in 0..dim {
                    out.push(Atom::new(gen, &[m]).with_ders(&ders));
                }
            }
        }
    }
    out
}

/// Reduced row echelon form on the first `nc` columns (extra columns are
/// carried along).  Returns `(row, pivot column)` pairs.
pub fn rref(m: &mut [Vec<Q>], nc: usize) -> Vec<(usize, usize)> {
    let nr = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let Some(p) = (r..nr).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Q::one() / m[r][c];
        for x in m[r].iter_mut() {
            *x *= inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c];
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= f * *y;
                    }
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    pivots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{grade::grade_of, Abstract, Parser, Side};

    fn parse(ctx: &Ctx<Abstract>, text: &str) -> Poly<Abstract> {
        Parser::new(ctx).parse(text).unwrap()
    }

    #[test]
    fn derivative_commutator_is_the_curvature() {
        let c = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let lhs = parse(&c, "(- (D 2 (D 1 (C @0))) (D 1 (D 2 (C @0))))");
        // [∇̄_2, ∇̄_1]C = −[F̄_12, C]
        assert_eq!(lhs, parse(&c, "(* -1 (Fbar a 1 2) (C b) (comb a b @0))"));
        // scalars do not feel the connection
        assert!(parse(&c, "(- (D 0 (D 1 (phi))) (D 1 (D 0 (phi))))").is_zero());
    }

    #[test]
    fn bianchi_identity_reduces_to_zero() {
        let c = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let b = parse(&c, "(+ (D 0 (Fbar @0 1 2)) (D 1 (Fbar @0 2 0)) (D 2 (Fbar @0 0 1)))");
        assert!(b.is_zero());
    }

    #[test]
    fn on_shell_background_drops_the_divergence() {
        let off = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let on = Ctx::<Abstract>::new(
            4,
            RuleSet {
                bg_on_shell: true,
                ..RuleSet::NONE
            },
        );
        let text = "(D ^mu (Fbar @0 mu 1))";
        assert!(!parse(&off, text).is_zero());
        assert!(parse(&on, text).is_zero());
    }

    #[test]
    fn cutoff_one_kills_its_derivatives() {
        let c = Ctx::<Abstract>::new(
            4,
            RuleSet {
                cutoff: Some(Cutoff::One),
                ..RuleSet::NONE
            },
        );
        assert_eq!(parse(&c, "(* (lambda) (phi))"), parse(&c, "(phi)"));
        assert!(parse(&c, "(D 0 (lambda))").is_zero());
        let z = Ctx::<Abstract>::new(
            4,
            RuleSet {
                cutoff: Some(Cutoff::Zero),
                ..RuleSet::NONE
            },
        );
        assert!(parse(&z, "(* (lambda) (phi))").is_zero());
    }

    #[test]
    fn total_derivatives_are_recognized() {
        let c = Ctx::<Abstract>::new(4, RuleSet::NONE);
        assert!(c.is_total_derivative(&parse(&c, "(D 0 (* (phi) (phi) (phibar)))")));
        assert!(c.is_total_derivative(&parse(&c, "(D ^mu (* (C I) (D mu (Cbar I))))")));
        assert!(!c.is_total_derivative(&parse(&c, "(* (phi) (D 0 (phibar)))")));
    }

    #[test]
    fn euler_derivative_of_kinetic_term() {
        let c = Ctx::<Abstract>::new(2, RuleSet::NONE);
        let lag = parse(&c, "(* 1/2 (D mu (phi)) (D ^mu (phi)))");
        let e = c.euler(&lag, &Atom::new(Gen::Phi, &[]), Side::Left);
        assert_eq!(e, parse(&c, "(* -1 (D ^mu (D mu (phi))))"));
        assert_eq!(grade_of(&e).unwrap().deg_field, 1);
    }

    #[test]
    fn region_rule_sets_are_consistent() {
        assert!(RuleSet::for_region(Region::R).check(Region::R).is_ok());
        assert!(RuleSet::for_region(Region::R).check(Region::M).is_err());
        assert!(RuleSet::NONE.check(Region::M).is_ok());
    }
}
