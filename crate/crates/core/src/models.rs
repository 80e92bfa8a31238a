//! The scalar φ⁴ model and gauge-fixed Yang–Mills on a background.
//!
//! Lie pairings are component pairings `X·Y = X^I Y^I`, so with
//! `Tr(T_I T_J) = −½δ_{IJ}` the Yang–Mills density is `−¼ F^I_{μν} F^{Iμν}`.

use crate::error::{Error, Result};
use crate::expr::atom::{eta, Atom, Gen, Kind};
use crate::expr::euler::Side;
use crate::expr::grade::Grading;
use crate::expr::normal::Ctx;
use crate::expr::poly::{q, qf, Backend, Poly};
use crate::funcalc::{self, antibracket_signed, odd_derivation, pairs};
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoryKind {
    Scalar,
    Ym,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraMode {
    Abstract,
    Su2,
}

/// Deliberate corruptions used as negative controls.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mutations {
    /// Enter `−sΨ` instead of `sΨ` into the action.
    pub psi_sign: bool,
    /// Drop the `F̄^{μν}[A_μ, A_ν]` term of the Yang–Mills action.
    pub drop_fbar_cross: bool,
    /// Flip the sign of the `s₀ C̄‡` entry of the free BRST table.
    pub s0_table_sign: bool,
    /// Flip the sign of the second pairing in the anti-bracket.
    pub antibracket_sign: bool,
    /// Scale lattice point sources by 2.
    pub lattice_source_scale: bool,
}

impl Mutations {
    pub const NAMES: [&'static str; 5] = [
        "psi_sign",
        "drop_fbar_cross",
        "s0_table_sign",
        "antibracket_sign",
        "lattice_source_scale",
    ];

    pub fn single(name: &str) -> Option<Mutations> {
        let mut m = Mutations::default();
        match name {
            "psi_sign" => m.psi_sign = true,
            "drop_fbar_cross" => m.drop_fbar_cross = true,
            "s0_table_sign" => m.s0_table_sign = true,
            "antibracket_sign" => m.antibracket_sign = true,
            "lattice_source_scale" => m.lattice_source_scale = true,
            _ => return None,
        }
        Some(m)
    }
}

/// A theory built in a fixed normalization context.
#[derive(Clone, Debug)]
pub struct Theory<B: Backend> {
    pub kind: TheoryKind,
    pub mutations: Mutations,
    /// Gauge-invariant part (`S_YM`, or the whole scalar action).
    pub s_inv: Poly<B>,
    pub s_sc: Poly<B>,
    pub psi: Poly<B>,
    pub s_psi: Poly<B>,
    /// `S = S_inv + S_sc + sΨ`.
    pub s: Poly<B>,
    pub s0: Poly<B>,
    pub s_int: Poly<B>,
}

fn at<B: Backend>(ctx: &Ctx<B>, g: Gen, idx: &[u8]) -> Poly<B> {
    ctx.nf(&Atom::new(g, idx))
}

fn dat<B: Backend>(ctx: &Ctx<B>, g: Gen, idx: &[u8], ders: &[u8]) -> Poly<B> {
    ctx.nf(&Atom::new(g, idx).with_ders(ders))
}

/// Split a density into its part of field degree 2 and the rest.
pub fn split_quadratic<B: Backend>(s: &Poly<B>) -> (Poly<B>, Poly<B>) {
    let deg = |atoms: &[Atom]| Grading::of_monomial(atoms).deg_field;
    (s.filter(|a| deg(a) == 2), s.filter(|a| deg(a) != 2))
}

/// Undifferentiated BRST transformations of the fields,
/// `sA = ∇̄C + λ[A,C]`, `sC = −½λ[C,C]`, `sC̄ = B`, `sB = 0`.
pub fn brst_fields<B: Backend>(ctx: &Ctx<B>, a: &Atom) -> Option<Poly<B>> {
    let lam = at(ctx, Gen::Lambda, &[]);
    let c = at(ctx, Gen::C, &[]);
    match a.gen {
        Gen::A => {
            let mu = a.idx[0];
            Some(ctx.d(mu, &c).plus(&lam.mul(&at(ctx, Gen::A, &[mu]).lie(&c))))
        }
        Gen::C => Some(lam.mul(&c.lie(&c)).scale(qf(-1, 2))),
        Gen::Cbar => Some(at(ctx, Gen::B, &[])),
        Gen::B => Some(Poly::zero(1)),
        _ => None,
    }
}

/// `∇̄^μ A_μ`.
fn div_a<B: Backend>(ctx: &Ctx<B>) -> Poly<B> {
    let mut p = Poly::zero(1);
    for mu in 0..ctx.dim {
        p.add_assign(&ctx.d_up(mu, &at(ctx, Gen::A, &[mu])));
    }
    p
}

/// `Ψ = C̄·(∇̄^μ A_μ + ½B)`.
pub fn gauge_fermion<B: Backend>(ctx: &Ctx<B>) -> Poly<B> {
    let inner = div_a(ctx).plus(&at(ctx, Gen::B, &[]).scale(qf(1, 2)));
    at(ctx, Gen::Cbar, &[]).dot(&inner)
}

impl<B: Backend> Theory<B> {
    /// Scalar model around `φ̄`:
    /// `S₀ = −½(∂φ∂φ + (m² + λφ̄²/2)φ²)`, `S_int = −(λφ̄φ³/3! + λφ⁴/4!)`.
    pub fn scalar(ctx: &Ctx<B>) -> Theory<B> {
        let phi = at(ctx, Gen::Phi, &[]);
        let pb = at(ctx, Gen::Phibar, &[]);
        let m = at(ctx, Gen::Mass, &[]);
        let lam = at(ctx, Gen::Lambda, &[]);
        let phi2 = phi.mul(&phi);
        let mut s0 = Poly::zero(0);
        for mu in 0..ctx.dim {
            let d = ctx.d(mu, &phi);
            s0.add_scaled(&d.mul(&d), qf(-eta(mu), 2));
        }
        s0.add_scaled(&m.mul(&m).mul(&phi2), qf(-1, 2));
        s0.add_scaled(&lam.mul(&pb).mul(&pb).mul(&phi2), qf(-1, 4));
        let mut s_int = lam.mul(&pb).mul(&phi2).mul(&phi).scale(qf(-1, 6));
        s_int.add_scaled(&lam.mul(&phi2).mul(&phi2), qf(-1, 24));
        Theory {
            kind: TheoryKind::Scalar,
            mutations: Mutations::default(),
            s_inv: s0.plus(&s_int),
            s_sc: Poly::zero(0),
            psi: Poly::zero(0),
            s_psi: Poly::zero(0),
            s: s0.plus(&s_int),
            s0,
            s_int,
        }
    }

    /// Gauge-fixed Yang–Mills: `S_YM` with the cutoff on the commutator
    /// terms of the curvature, `S_sc = −sΦ^i Φ‡_i`, `Ψ = C̄(∇̄^μA_μ + ½B)`.
    pub fn ym(ctx: &Ctx<B>, mutations: Mutations) -> Theory<B> {
        let dim = ctx.dim;
        let lam = at(ctx, Gen::Lambda, &[]);
        let mut s_inv = Poly::zero(0);
        for mu in 0..dim {
            for nu in mu + 1..dim {
                let sgn = q(eta(mu) * eta(nu));
                let (am, an) = (at(ctx, Gen::A, &[mu]), at(ctx, Gen::A, &[nu]));
                let comm = am.lie(&an);
                let mut g = ctx.d(mu, &an);
                g.sub_assign(&ctx.d(nu, &am));
                g.add_assign(&lam.mul(&comm));
                // −¼ Σ_{μ,ν} counts each unordered pair twice
                s_inv.add_scaled(&g.dot(&g), -sgn / q(2));
                if !mutations.drop_fbar_cross {
                    s_inv.add_scaled(&at(ctx, Gen::Fbar, &[mu, nu]).dot(&comm), -sgn);
                }
            }
        }
        let mut s_sc = Poly::zero(0);
        for (phi, star) in pairs(dim) {
            let sphi = brst_fields(ctx, &phi).expect("field transformation");
            s_sc.sub_assign(&sphi.dot(&ctx.nf(&star)));
        }
        let psi = gauge_fermion(ctx);
        let s_psi = odd_derivation(ctx, &psi, &|a| brst_fields(ctx, a));
        let mut s = s_inv.plus(&s_sc);
        s.add_scaled(&s_psi, if mutations.psi_sign { q(-1) } else { q(1) });
        let (s0, s_int) = split_quadratic(&s);
        Theory {
            kind: TheoryKind::Ym,
            mutations,
            s_inv,
            s_sc,
            psi,
            s_psi,
            s,
            s0,
            s_int,
        }
    }

    /// Anti-bracket, honouring the `antibracket_sign` mutation.
    pub fn bracket(&self, ctx: &Ctx<B>, f: &Poly<B>, g: &Poly<B>) -> Result<Poly<B>> {
        antibracket_signed(ctx, f, g, self.mutations.antibracket_sign)
    }

    /// Pointwise `s = (S, −)`.
    pub fn s_apply(&self, ctx: &Ctx<B>, f: &Poly<B>) -> Poly<B> {
        funcalc::s_apply(ctx, &self.s, f)
    }

    /// `s₀` read off from the table of free BRST transformations.
    pub fn s0_apply(&self, ctx: &Ctx<B>, f: &Poly<B>) -> Result<Poly<B>> {
        if self.kind == TheoryKind::Scalar {
            return Ok(Poly::zero(f.nfree));
        }
        Ok(odd_derivation(ctx, f, &|a| self.s0_table(ctx, a)))
    }

    /// One row of the free BRST table on an undifferentiated generator.
    pub fn s0_table(&self, ctx: &Ctx<B>, a: &Atom) -> Option<Poly<B>> {
        let dim = ctx.dim;
        let boxed = |g: Gen| ctx.box_op(&at(ctx, g, &[]));
        match a.gen {
            Gen::A => Some(ctx.d(a.idx[0], &at(ctx, Gen::C, &[]))),
            Gen::B | Gen::C => Some(Poly::zero(1)),
            Gen::Cbar => Some(at(ctx, Gen::B, &[])),
            Gen::AStar => {
                let mu = a.idx[0];
                let mut r = p_lin(ctx, Gen::A, mu);
                r.sub_assign(&ctx.d(mu, &at(ctx, Gen::B, &[])));
                Some(r.scale(q(eta(mu))))
            }
            Gen::BStar => {
                let mut r = at(ctx, Gen::B, &[]).plus(&div_a(ctx));
                r.sub_assign(&at(ctx, Gen::CbarStar, &[]));
                Some(r)
            }
            Gen::CStar => {
                let mut r = boxed(Gen::Cbar).neg();
                for mu in 0..dim {
                    r.sub_assign(&ctx.d(mu, &at(ctx, Gen::AStar, &[mu])));
                }
                Some(r)
            }
            Gen::CbarStar => {
                let r = boxed(Gen::C);
                Some(if self.mutations.s0_table_sign { r.neg() } else { r })
            }
            _ => None,
        }
    }

    /// `(−1)^{ε_i} δ^R S₀/δΦ^i` restricted to the antifield-free part of `S₀`,
    /// i.e. `P̄_{ij}Φ^j`, with the fields replaced by `sub`.
    pub fn p_bar(&self, ctx: &Ctx<B>, i: &Atom, sub: &dyn Fn(&Atom) -> Option<Poly<B>>) -> Poly<B> {
        let s00 = self
            .s0
            .filter(|atoms| !atoms.iter().any(|a| a.gen.kind() == Kind::Antifield));
        let e = ctx.euler(&s00, i, Side::Right);
        let e = if i.gen.odd() { e.neg() } else { e };
        substitute_fields(ctx, &e, sub)
    }

    /// `K̂_i^j X_j` for the antifield-shaped input `x` (indexed like `Φ‡_j`).
    pub fn k_hat(&self, ctx: &Ctx<B>, i: Gen, x: &dyn Fn(&Atom) -> Poly<B>) -> Poly<B> {
        match i {
            Gen::C => {
                let mut r = Poly::zero(1);
                for mu in 0..ctx.dim {
                    r.sub_assign(&ctx.d(mu, &x(&Atom::new(Gen::AStar, &[mu]))));
                }
                r
            }
            Gen::B => x(&Atom::new(Gen::CbarStar, &[])),
            _ => Poly::zero(1),
        }
    }
}

/// `(P̄^lin X)_μ = ∇̄^ν(∇̄_ν X_μ − ∇̄_μ X_ν) + [F̄_{μν}, X^ν]` for a one-form
/// generator `g`.
pub fn p_lin<B: Backend>(ctx: &Ctx<B>, g: Gen, mu: u8) -> Poly<B> {
    let mut r = Poly::zero(1);
    for nu in 0..ctx.dim {
        let e = q(eta(nu));
        r.add_scaled(&dat(ctx, g, &[mu], &[nu, nu]), e);
        r.add_scaled(&dat(ctx, g, &[nu], &[nu, mu]), -e);
        r.add_scaled(&at(ctx, Gen::Fbar, &[mu, nu]).lie(&at(ctx, g, &[nu])), e);
    }
    r
}

/// `K^i_j X^j`: the field-shaped image `(K X)^A_μ = ∇̄_μ X^C`,
/// `(K X)^{C̄} = X^B`.
pub fn k_apply<B: Backend>(ctx: &Ctx<B>, i: &Atom, x: &dyn Fn(Gen) -> Poly<B>) -> Poly<B> {
    match i.gen {
        Gen::A => ctx.d(i.idx[0], &x(Gen::C)),
        Gen::Cbar => x(Gen::B),
        _ => Poly::zero(1),
    }
}

/// Replace dynamical field jets by jets of the given expressions
/// (`None` means zero).
pub fn substitute_fields<B: Backend>(ctx: &Ctx<B>, p: &Poly<B>, sub: &dyn Fn(&Atom) -> Option<Poly<B>>) -> Poly<B> {
    p.substitute(&mut |a| {
        if a.gen.kind() != Kind::DynField {
            return None;
        }
        let base = sub(&Atom::new(a.gen, &a.idx)).unwrap_or_else(|| Poly::zero(usize::from(a.gen.adjoint())));
        Some(ctx.d_prefix(&a.ders, base))
    })
}

/// Whether the candidate is `s`-closed modulo total derivatives.
pub fn cohomology_generator_closedness<B: Backend>(
    ctx: &Ctx<B>,
    theory: &Theory<B>,
    candidate: &Poly<B>,
) -> Result<bool> {
    if theory.kind != TheoryKind::Ym {
        return Err(Error::IncompatibleTheory {
            suite: "cohomology_closedness".into(),
            theory: "scalar".into(),
        });
    }
    Ok(ctx.is_total_derivative(&theory.s_apply(ctx, candidate)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::grade::grade_of;
    use crate::expr::{Abstract, Cutoff, Parser, RuleSet, Su2};

    fn nilpotent_on_fields<B: Backend>() {
        let ctx = Ctx::<B>::new(
            4,
            RuleSet {
                cutoff: Some(Cutoff::One),
                ..RuleSet::NONE
            },
        );
        let s = |p: &Poly<B>| odd_derivation(&ctx, p, &|a| brst_fields(&ctx, a));
        for text in ["(C @0)", "(A @0 2)", "(Cbar @0)", "(D 1 (A @0 0))"] {
            let p = Parser::new(&ctx).parse(text).unwrap();
            assert!(s(&s(&p)).is_zero(), "s² {text}");
        }
    }

    #[test]
    fn brst_is_nilpotent_where_the_cutoff_is_constant() {
        nilpotent_on_fields::<Abstract>();
        nilpotent_on_fields::<Su2>();
    }

    #[test]
    fn varying_cutoff_spoils_nilpotency_on_the_connection() {
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let s = |p: &Poly<Abstract>| odd_derivation(&ctx, p, &|a| brst_fields(&ctx, a));
        let a = Parser::new(&ctx).parse("(A @0 2)").unwrap();
        let want = Parser::new(&ctx)
            .parse("(* -1/2 (D 2 (lambda)) (C a) (C b) (comb a b @0))")
            .unwrap();
        assert_eq!(s(&s(&a)), want);
    }

    #[test]
    fn gauge_fermion_has_ghost_minus_one() {
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let g = grade_of(&gauge_fermion(&ctx)).unwrap();
        assert_eq!((g.ghost, g.odd, g.deg_field), (-1, true, 2));
    }

    #[test]
    fn free_part_is_quadratic() {
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let th = Theory::ym(&ctx, Mutations::default());
        assert_eq!(th.s0.plus(&th.s_int), th.s);
        assert_eq!(grade_of(&th.s0).unwrap().deg_field, 2);
        assert!(th
            .s_int
            .sorted_terms()
            .iter()
            .all(|(k, _)| Grading::of_monomial(Abstract::atoms(k)).deg_field >= 3));
        let sc = Theory::scalar(&ctx);
        assert_eq!(sc.s0.plus(&sc.s_int), sc.s);
    }

    #[test]
    fn scalar_free_differential_is_zero() {
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let th = Theory::scalar(&ctx);
        let phi = Parser::new(&ctx).parse("(phi)").unwrap();
        assert!(th.s0_apply(&ctx, &phi).unwrap().is_zero());
    }

    #[test]
    fn mutation_names_round_trip() {
        for name in Mutations::NAMES {
            assert!(Mutations::single(name).is_some(), "{name}");
        }
        assert!(Mutations::single("nosuch").is_none());
        assert!(Mutations::single("psi_sign").unwrap().psi_sign);
    }
}
