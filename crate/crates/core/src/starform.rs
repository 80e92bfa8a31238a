//! Exact star products `F ⋆ G = m ∘ exp(ħΓ_ω)(F ⊗ G)` on a finite set of
//! graded field variables, with `Γ_ω = Σ ω_ij ∂^R_i ⊗ ∂^L_j`.
//!
//! Fermionic convention: `ω_ij` may be nonzero only when `φ^i` and `φ^j`
//! have equal parity, so `Γ_ω` is even.  A linear odd differential
//! `δ = Σ K^a_b φ^b ∂^L_a` is then a graded ⋆-derivation iff
//! `Σ_c K^a_c ω_cb + (−1)^{ε_a} Σ_c ω_ac K^b_c = 0` for all `a, b`.

use crate::error::{Error, Result};
use crate::expr::poly::{q, Q};
use num_traits::{One, Zero};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

/// One field component per site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub name: &'static str,
    pub ghost: i32,
}

impl Component {
    pub fn odd(&self) -> bool {
        self.ghost.rem_euclid(2) == 1
    }
}

/// `sites × components` variables; variable `v` is component
/// `v % ncomp` at site `v / ncomp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    pub sites: usize,
    pub comps: Vec<Component>,
}

impl Space {
    pub fn scalar(sites: usize) -> Space {
        Space {
            sites,
            comps: vec![Component { name: "phi", ghost: 0 }],
        }
    }

    /// The gauge multiplet `(A, B, C, C̄)` on a periodic chain.
    pub fn gauge(sites: usize) -> Space {
        Space {
            sites,
            comps: vec![
                Component { name: "A", ghost: 0 },
                Component { name: "B", ghost: 0 },
                Component { name: "C", ghost: 1 },
                Component {
                    name: "Cbar",
                    ghost: -1,
                },
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.sites * self.comps.len()
    }

    pub fn var(&self, site: usize, comp: usize) -> usize {
        site * self.comps.len() + comp
    }

    pub fn comp(&self, v: usize) -> &Component {
        &self.comps[v % self.comps.len()]
    }

    pub fn odd(&self, v: usize) -> bool {
        self.comp(v).odd()
    }

    pub fn ghost(&self, v: usize) -> i32 {
        self.comp(v).ghost
    }
}

/// Square exact matrix indexed by the variables of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub space: Space,
    pub m: Vec<Vec<Q>>,
}

impl Kernel {
    pub fn zero(space: &Space) -> Kernel {
        let n = space.dim();
        Kernel {
            space: space.clone(),
            m: vec![vec![Q::zero(); n]; n],
        }
    }

    /// Rejects entries pairing variables of different parity.
    pub fn new(space: &Space, m: Vec<Vec<Q>>) -> Result<Kernel> {
        let n = space.dim();
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::SpaceMismatch(m.len(), n));
        }
        for (i, row) in m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if !x.is_zero() && space.odd(i) != space.odd(j) {
                    return Err(Error::GradingMismatch(format!(
                        "kernel entry ({i},{j}) pairs an even and an odd variable"
                    )));
                }
            }
        }
        Ok(Kernel {
            space: space.clone(),
            m,
        })
    }

    /// Whitespace-separated rationals (`3`, `-1/2`), one row per line;
    /// `#` starts a comment.
    pub fn from_text(space: &Space, text: &str) -> Result<Kernel> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<Q>()
                        .map_err(|e| Error::Parse(format!("kernel entry `{t}`: {e}")))
                })
                .collect::<Result<Vec<Q>>>()?;
            rows.push(row);
        }
        Kernel::new(space, rows)
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.m[i][j]
    }

    /// Antisymmetric part `ω_ij − ω_ji`.
    pub fn commutator(&self, i: usize, j: usize) -> Q {
        self.m[i][j] - self.m[j][i]
    }
}

/// Monomial `ħ^k φ^{v_1} ⋯ φ^{v_n}` with sorted variables; odd variables
/// occur at most once.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub hbar: u32,
    pub vars: Vec<u16>,
}

/// Polynomial in the graded variables of a space with coefficients
/// polynomial in `ħ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    pub space: Space,
    pub terms: BTreeMap<Mono, Q>,
}

/// Sort `vars` in place, returning the Koszul sign, or `None` if an odd
/// variable repeats.
fn sort_graded(space: &Space, vars: &mut [u16]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..vars.len() {
        let mut j = i;
        while j > 0 && vars[j - 1] > vars[j] {
            if space.odd(vars[j] as usize) && space.odd(vars[j - 1] as usize) {
                sign = -sign;
            }
            vars.swap(j - 1, j);
            j -= 1;
        }
    }
    for w in vars.windows(2) {
        if w[0] == w[1] && space.odd(w[0] as usize) {
            return None;
        }
    }
    Some(sign)
}

fn parity_sum(space: &Space, vars: &[u16]) -> usize {
    vars.iter().filter(|&&v| space.odd(v as usize)).count()
}

/// `∂/∂φ^v` of a monomial from the left (or right) as (coefficient,
/// remaining variables).
fn mono_deriv(space: &Space, vars: &[u16], v: u16, right: bool) -> Option<(Q, Vec<u16>)> {
    let pos = vars.iter().position(|&x| x == v)?;
    let count = vars.iter().filter(|&&x| x == v).count();
    let mut rest = vars.to_vec();
    rest.remove(pos);
    let mut c = q(count as i64);
    if space.odd(v as usize) {
        let passed = if right {
            parity_sum(space, &vars[pos + 1..])
        } else {
            parity_sum(space, &vars[..pos])
        };
        if passed % 2 == 1 {
            c = -c;
        }
    }
    Some((c, rest))
}

impl Functional {
    pub fn zero(space: &Space) -> Functional {
        Functional {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Space, c: Q) -> Functional {
        let mut f = Functional::zero(space);
        f.add_term(Mono { hbar: 0, vars: vec![] }, c);
        f
    }

    pub fn one(space: &Space) -> Functional {
        Functional::constant(space, Q::one())
    }

    pub fn var(space: &Space, v: usize) -> Functional {
        let mut f = Functional::zero(space);
        f.add_term(
            Mono {
                hbar: 0,
                vars: vec![v as u16],
            },
            Q::one(),
        );
        f
    }

    /// Monomial from an unsorted variable list.
    pub fn monomial(space: &Space, c: Q, hbar: u32, vars: &[u16]) -> Functional {
        let mut f = Functional::zero(space);
        let mut vs = vars.to_vec();
        if let Some(s) = sort_graded(space, &mut vs) {
            f.add_term(Mono { hbar, vars: vs }, c * q(s));
        }
        f
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_space(&self, other: &Functional) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(self.space.dim(), other.space.dim()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Functional) -> Result<Functional> {
        self.check_space(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Functional) -> Result<Functional> {
        self.add(&other.scale(q(-1)))
    }

    pub fn scale(&self, c: Q) -> Functional {
        let mut out = Functional::zero(&self.space);
        for (m, x) in &self.terms {
            out.add_term(m.clone(), *x * c);
        }
        out
    }

    /// Graded-commutative pointwise product.
    pub fn mul(&self, other: &Functional) -> Result<Functional> {
        self.check_space(other)?;
        let mut out = Functional::zero(&self.space);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut vars = m1.vars.clone();
                vars.extend_from_slice(&m2.vars);
                if let Some(s) = sort_graded(&self.space, &mut vars) {
                    out.add_term(
                        Mono {
                            hbar: m1.hbar + m2.hbar,
                            vars,
                        },
                        *c1 * *c2 * q(s),
                    );
                }
            }
        }
        Ok(out)
    }

    pub fn deriv(&self, v: usize, right: bool) -> Functional {
        let mut out = Functional::zero(&self.space);
        for (m, c) in &self.terms {
            if let Some((d, rest)) = mono_deriv(&self.space, &m.vars, v as u16, right) {
                out.add_term(
                    Mono {
                        hbar: m.hbar,
                        vars: rest,
                    },
                    *c * d,
                );
            }
        }
        out
    }

    /// Number of `ħ` factors, if homogeneous.
    pub fn deg_hbar(&self) -> Option<u32> {
        homogeneous(self.terms.keys().map(|m| m.hbar as usize)).map(|d| d as u32)
    }

    pub fn deg_field(&self) -> Option<usize> {
        homogeneous(self.terms.keys().map(|m| m.vars.len()))
    }

    /// `Deg = 2 deg_ħ + deg_φ`, if homogeneous.
    pub fn deg(&self) -> Option<usize> {
        homogeneous(self.terms.keys().map(|m| 2 * m.hbar as usize + m.vars.len()))
    }

    pub fn ghost(&self) -> Option<i32> {
        let g = self
            .terms
            .keys()
            .map(|m| m.vars.iter().map(|&v| self.space.ghost(v as usize)).sum::<i32>());
        homogeneous(g.map(|x| (x + 1000) as usize)).map(|x| x as i32 - 1000)
    }

    pub fn odd(&self) -> bool {
        self.terms.keys().any(|m| parity_sum(&self.space, &m.vars) % 2 == 1)
    }

    /// Set `ħ = 0`.
    pub fn classical(&self) -> Functional {
        let mut out = Functional::zero(&self.space);
        for (m, c) in &self.terms {
            if m.hbar == 0 {
                out.add_term(m.clone(), *c);
            }
        }
        out
    }

    /// The graded left derivation `Σ K^a_b φ^b ∂^L_a`; its parity is fixed
    /// by `K` through the Koszul signs of the reordering.
    pub fn apply_linear(&self, k: &Kernel) -> Result<Functional> {
        if k.space != self.space {
            return Err(Error::SpaceMismatch(k.space.dim(), self.space.dim()));
        }
        let n = self.space.dim();
        let mut out = Functional::zero(&self.space);
        for (m, c) in &self.terms {
            let mut seen = Vec::new();
            for &a in &m.vars {
                if seen.contains(&a) {
                    continue;
                }
                seen.push(a);
                let Some((d, rest)) = mono_deriv(&self.space, &m.vars, a, false) else {
                    continue;
                };
                for b in 0..n {
                    let kab = k.m[a as usize][b];
                    if kab.is_zero() {
                        continue;
                    }
                    // δ(φ^a · rest) = (Kφ)^a · rest
                    let mut vars = vec![b as u16];
                    vars.extend_from_slice(&rest);
                    if let Some(s) = sort_graded(&self.space, &mut vars) {
                        out.add_term(Mono { hbar: m.hbar, vars }, *c * d * kab * q(s));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn homogeneous(mut it: impl Iterator<Item = usize>) -> Option<usize> {
    let first = it.next().unwrap_or(0);
    it.all(|x| x == first).then_some(first)
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            if m.hbar > 0 {
                write!(f, "·ħ^{}", m.hbar)?;
            }
            for &v in &m.vars {
                let comp = self.space.comp(v as usize);
                write!(f, "·{}{}", comp.name, v as usize / self.space.comps.len())?;
            }
        }
        Ok(())
    }
}

/// `F ⋆ G = Σ_k ħ^k/k! m(Γ_ω^k(F ⊗ G))`; the series stops once no
/// derivative pairs remain.
pub fn star(f: &Functional, g: &Functional, w: &Kernel) -> Result<Functional> {
    f.check_space(g)?;
    if w.space != f.space {
        return Err(Error::SpaceMismatch(w.space.dim(), f.space.dim()));
    }
    let space = &f.space;
    let mut pairs: BTreeMap<(Mono, Mono), Q> = BTreeMap::new();
    for (m1, c1) in &f.terms {
        for (m2, c2) in &g.terms {
            pairs.insert((m1.clone(), m2.clone()), *c1 * *c2);
        }
    }
    let mut out = Functional::zero(space);
    let mut k: u32 = 0;
    let mut fact = Q::one();
    while !pairs.is_empty() {
        for ((l, r), c) in &pairs {
            let mut vars = l.vars.clone();
            vars.extend_from_slice(&r.vars);
            if let Some(s) = sort_graded(space, &mut vars) {
                out.add_term(
                    Mono {
                        hbar: l.hbar + r.hbar + k,
                        vars,
                    },
                    *c * q(s) / fact,
                );
            }
        }
        let mut next: BTreeMap<(Mono, Mono), Q> = BTreeMap::new();
        for ((l, r), c) in &pairs {
            let mut li: Vec<u16> = l.vars.clone();
            li.dedup();
            let mut rj: Vec<u16> = r.vars.clone();
            rj.dedup();
            for &i in &li {
                let Some((di, lrest)) = mono_deriv(space, &l.vars, i, true) else {
                    continue;
                };
                for &j in &rj {
                    let wij = w.m[i as usize][j as usize];
                    if wij.is_zero() {
                        continue;
                    }
                    let Some((dj, rrest)) = mono_deriv(space, &r.vars, j, false) else {
                        continue;
                    };
                    let key = (
                        Mono {
                            hbar: l.hbar,
                            vars: lrest.clone(),
                        },
                        Mono {
                            hbar: r.hbar,
                            vars: rrest,
                        },
                    );
                    let e = next.entry(key).or_insert_with(Q::zero);
                    *e += *c * di * dj * wij;
                }
            }
        }
        next.retain(|_, c| !c.is_zero());
        pairs = next;
        k += 1;
        fact *= q(k as i64);
    }
    Ok(out)
}

/// `[F, G]_⋆ = F ⋆ G − (−1)^{ε_F ε_G} G ⋆ F`.
pub fn star_commutator(f: &Functional, g: &Functional, w: &Kernel) -> Result<Functional> {
    let fg = star(f, g, w)?;
    let gf = star(g, f, w)?;
    if f.odd() && g.odd() {
        fg.add(&gf)
    } else {
        fg.sub(&gf)
    }
}

/// Forward difference matrix `(Du)_x = u_{x+1} − u_x` on a periodic chain.
pub fn forward_difference(n: usize) -> Vec<Vec<Q>> {
    let mut d = vec![vec![Q::zero(); n]; n];
    for x in 0..n {
        d[x][x] -= Q::one();
        d[x][(x + 1) % n] += Q::one();
    }
    d
}

/// The free BRST differential of the chain multiplet as the matrix of
/// `δφ^a = K^a_b φ^b`: `δA = D C`, `δC̄ = B`, `δB = δC = 0`.
pub fn chain_brst(space: &Space) -> Kernel {
    let n = space.sites;
    let d = forward_difference(n);
    let mut k = Kernel::zero(space);
    for x in 0..n {
        for y in 0..n {
            k.m[space.var(x, 0)][space.var(y, 2)] = d[x][y];
        }
        k.m[space.var(x, 3)][space.var(x, 1)] = Q::one();
    }
    k
}

/// Chain kernel with the block pattern
/// `[[W_v, D W_s, 0, 0], [W_s Dᵀ, 0, 0, 0], [0, 0, 0, −W_s], [0, 0, W_s, 0]]`
/// on `(A, B, C, C̄)`, compatible with [`chain_brst`] for any `W_v`, `W_s`.
pub fn chain_kernel(space: &Space, wv: &[Vec<Q>], ws: &[Vec<Q>]) -> Kernel {
    let n = space.sites;
    let d = forward_difference(n);
    let mut k = Kernel::zero(space);
    for x in 0..n {
        for y in 0..n {
            let mut dws = Q::zero();
            let mut wsdt = Q::zero();
            for z in 0..n {
                dws += d[x][z] * ws[z][y];
                wsdt += ws[x][z] * d[y][z];
            }
            k.m[space.var(x, 0)][space.var(y, 0)] = wv[x][y];
            k.m[space.var(x, 0)][space.var(y, 1)] = dws;
            k.m[space.var(x, 1)][space.var(y, 0)] = wsdt;
            k.m[space.var(x, 2)][space.var(y, 3)] = -ws[x][y];
            k.m[space.var(x, 3)][space.var(y, 2)] = ws[x][y];
        }
    }
    k
}

/// Entries of `Kω + (−1)^{ε_a} ωKᵀ` that fail to vanish.
pub fn intertwining_defect(k: &Kernel, w: &Kernel) -> Result<Vec<(usize, usize, Q)>> {
    if k.space != w.space {
        return Err(Error::SpaceMismatch(k.space.dim(), w.space.dim()));
    }
    let space = &k.space;
    let n = space.dim();
    for a in 0..n {
        for b in 0..n {
            if !k.m[a][b].is_zero() && space.ghost(b) != space.ghost(a) + 1 {
                return Err(Error::GradingMismatch(format!(
                    "δφ{a} contains φ{b}, which does not carry one more ghost number"
                )));
            }
        }
    }
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut s = Q::zero();
            let mut t = Q::zero();
            for c in 0..n {
                s += k.m[a][c] * w.m[c][b];
                t += w.m[a][c] * k.m[b][c];
            }
            let v = if space.odd(a) { s - t } else { s + t };
            if !v.is_zero() {
                out.push((a, b, v));
            }
        }
    }
    Ok(out)
}

/// Leibniz defect `δ(F⋆G) − δF⋆G − (−1)^{ε_F} F⋆δG` of the odd linear
/// differential `K`.
pub fn leibniz_defect(k: &Kernel, w: &Kernel, f: &Functional, g: &Functional) -> Result<Functional> {
    let lhs = star(f, g, w)?.apply_linear(k)?;
    let t1 = star(&f.apply_linear(k)?, g, w)?;
    let t2 = star(f, &g.apply_linear(k)?, w)?;
    let r = lhs.sub(&t1)?;
    if f.odd() {
        r.add(&t2)
    } else {
        r.sub(&t2)
    }
}

/// Compatibility report: the matrix verdict and the brute-force verdict on
/// all pairs of linear fields plus the supplied polynomial family.
#[derive(Clone, Debug, PartialEq)]
pub struct Compat {
    pub intertwines: bool,
    pub derivation: bool,
    /// A pair with nonzero Leibniz defect, rendered.
    pub witness: Option<String>,
}

pub fn check_derivation_compat(k: &Kernel, w: &Kernel, family: &[Functional]) -> Result<Compat> {
    let intertwines = intertwining_defect(k, w)?.is_empty();
    let space = &k.space;
    let n = space.dim();
    let mut witness = None;
    'outer: for a in 0..n {
        for b in 0..n {
            let d = leibniz_defect(k, w, &Functional::var(space, a), &Functional::var(space, b))?;
            if !d.is_zero() {
                witness = Some(format!("(φ{a}, φ{b}): {d}"));
                break 'outer;
            }
        }
    }
    if witness.is_none() {
        'fam: for (i, f) in family.iter().enumerate() {
            for g in family.iter().skip(i) {
                let d = leibniz_defect(k, w, f, g)?;
                if !d.is_zero() {
                    witness = Some(format!("({f}, {g}): {d}"));
                    break 'fam;
                }
            }
        }
    }
    Ok(Compat {
        intertwines,
        derivation: witness.is_none(),
        witness,
    })
}

/// Whether `f` vanishes on every `φ` with `Pφ = 0` (even variables only):
/// restrict to a basis of the kernel of `P` and test the resulting
/// polynomial for zero.
pub fn vanishes_on_kernel(f: &Functional, p: &[Vec<Q>]) -> Result<bool> {
    let space = &f.space;
    let n = space.dim();
    if (0..n).any(|v| space.odd(v)) {
        return Err(Error::GradingMismatch(
            "restriction to solutions needs even variables".into(),
        ));
    }
    let basis = null_space(p, n);
    // φ^v = Σ_k basis[k][v] t_k, expanded in the scalar space on |basis| sites
    let tspace = Space::scalar(basis.len().max(1));
    let mut total = Functional::zero(&tspace);
    for (m, c) in &f.terms {
        let mut prod = Functional::constant(&tspace, *c);
        for &v in &m.vars {
            let mut lin = Functional::zero(&tspace);
            for (k, b) in basis.iter().enumerate() {
                lin.add_term(
                    Mono {
                        hbar: 0,
                        vars: vec![k as u16],
                    },
                    b[v as usize],
                );
            }
            prod = prod.mul(&lin)?;
        }
        for (mm, cc) in prod.terms {
            total.add_term(
                Mono {
                    hbar: m.hbar,
                    vars: mm.vars,
                },
                cc,
            );
        }
    }
    Ok(total.is_zero())
}

/// Basis of `{x : Px = 0}` over the rationals.
pub fn null_space(p: &[Vec<Q>], n: usize) -> Vec<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = p.to_vec();
    let piv = crate::expr::normal::rref(&mut m, n);
    let pivot_cols: Vec<usize> = piv.iter().map(|&(_, c)| c).collect();
    let mut out = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let mut x = vec![Q::zero(); n];
        x[free] = Q::one();
        for &(r, c) in &piv {
            x[c] = -m[r][free];
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::poly::qf;

    fn scalar_kernel(n: usize, f: impl Fn(usize, usize) -> Q) -> Kernel {
        let s = Space::scalar(n);
        Kernel::new(&s, (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()).unwrap()
    }

    #[test]
    fn squares_expand_to_second_order() {
        let w = scalar_kernel(2, |i, j| q((3 * i + j + 1) as i64));
        let s = &w.space;
        let (pi, pj) = (Functional::var(s, 0), Functional::var(s, 1));
        let f = pi.mul(&pi).unwrap();
        let g = pj.mul(&pj).unwrap();
        let got = star(&f, &g, &w).unwrap();
        let wij = w.get(0, 1);
        // m(F,G) + 4ħω φ_iφ_j + 2ħ²ω²
        let mut want = f.mul(&g).unwrap();
        want = want.add(&Functional::monomial(s, q(4) * wij, 1, &[0, 1])).unwrap();
        want = want.add(&Functional::monomial(s, q(2) * wij * wij, 2, &[])).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn unit_and_classical_limit() {
        let w = scalar_kernel(3, |i, j| qf((i * 2 + j) as i64 - 2, 3));
        let s = &w.space;
        let f = Functional::monomial(s, q(5), 0, &[0, 1, 1]);
        assert_eq!(star(&Functional::one(s), &f, &w).unwrap(), f);
        assert_eq!(star(&f, &Functional::one(s), &w).unwrap(), f);
        let g = Functional::monomial(s, q(-2), 0, &[1, 2]);
        assert_eq!(star(&f, &g, &w).unwrap().classical(), f.mul(&g).unwrap());
    }

    #[test]
    fn odd_pair_anticommutator() {
        let s = Space::gauge(1);
        let mut w = Kernel::zero(&s);
        w.m[2][3] = q(-3);
        w.m[3][2] = q(5);
        let (c, cb) = (Functional::var(&s, 2), Functional::var(&s, 3));
        let anti = star(&c, &cb, &w).unwrap().add(&star(&cb, &c, &w).unwrap()).unwrap();
        assert_eq!(anti, Functional::monomial(&s, q(2), 1, &[]));
        assert_eq!(star_commutator(&c, &cb, &w).unwrap(), anti);
    }

    #[test]
    fn mixed_parity_kernel_rejected() {
        let s = Space::gauge(1);
        let mut m = vec![vec![Q::zero(); 4]; 4];
        m[0][2] = q(1);
        assert!(matches!(Kernel::new(&s, m), Err(Error::GradingMismatch(_))));
    }

    #[test]
    fn space_mismatch() {
        let w = scalar_kernel(2, |_, _| q(1));
        let other = Space::scalar(3);
        let f = Functional::var(&other, 0);
        assert!(matches!(star(&f, &f, &w), Err(Error::SpaceMismatch(..))));
    }

    #[test]
    fn kernel_text_round_trip() {
        let s = Space::scalar(2);
        let k = Kernel::from_text(&s, "1 -1/2  # row 0\n0 3\n").unwrap();
        assert_eq!(k.get(0, 1), qf(-1, 2));
        assert!(Kernel::from_text(&s, "1 2\n3\n").is_err());
    }

    #[test]
    fn zero_differential_is_compatible() {
        let s = Space::gauge(2);
        let w = chain_kernel(
            &s,
            &[vec![q(1), q(2)], vec![q(0), q(1)]],
            &[vec![q(1), q(-1)], vec![q(2), q(3)]],
        );
        let c = check_derivation_compat(&Kernel::zero(&s), &w, &[]).unwrap();
        assert!(c.intertwines && c.derivation);
    }

    #[test]
    fn chain_kernel_compatible_and_perturbation_detected() {
        let s = Space::gauge(3);
        let wv = vec![vec![q(1), q(0), q(2)], vec![q(-1), q(1), q(0)], vec![q(0), q(3), q(1)]];
        let ws = vec![vec![q(2), q(1), q(0)], vec![q(0), q(1), q(-2)], vec![q(1), q(0), q(1)]];
        let k = chain_brst(&s);
        let w = chain_kernel(&s, &wv, &ws);
        let fam = vec![
            Functional::monomial(&s, q(1), 0, &[0, 2, 3]),
            Functional::monomial(&s, q(2), 0, &[1, 4]),
        ];
        let c = check_derivation_compat(&k, &w, &fam).unwrap();
        assert!(c.intertwines && c.derivation, "{:?}", c.witness);
        let mut bad = w.clone();
        bad.m[s.var(0, 2)][s.var(1, 3)] += Q::one();
        let c = check_derivation_compat(&k, &bad, &fam).unwrap();
        assert!(!c.intertwines && !c.derivation);
    }

    #[test]
    fn grading_shift_enforced() {
        let s = Space::gauge(1);
        let mut k = Kernel::zero(&s);
        k.m[1][0] = q(1);
        assert!(matches!(
            intertwining_defect(&k, &Kernel::zero(&s)),
            Err(Error::GradingMismatch(_))
        ));
    }

    #[test]
    fn null_space_of_difference() {
        let d = forward_difference(4);
        let ns = null_space(&d, 4);
        assert_eq!(ns, vec![vec![q(1); 4]]);
    }
}
