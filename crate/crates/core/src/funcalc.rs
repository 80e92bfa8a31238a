//! Functional calculus on local densities: functional derivatives, the
//! anti-bracket, BRST differentials, the gauge-fixing canonical
//! transformation and background-variation operators.
//!
//! Densities are [`Poly`]s without free Lie legs; equality of functionals is
//! equality modulo total derivatives ([`Ctx::equal_density`]).
//!
//! Sign conventions: a left derivative removes a generator after moving it
//! to the left end of each monomial, a right derivative after moving it to
//! the right end.  The anti-bracket is
//! `(F, G) = ∫ δ^R F/δΦ^i δ^L G/δΦ‡_i − δ^R F/δΦ‡_i δ^L G/δΦ^i`
//! and pointwise differentials are odd left derivations commuting with `∇̄`.

use crate::error::{Error, Result};
use crate::expr::atom::{Atom, Gen, Kind};
use crate::expr::euler::Side;
use crate::expr::grade::ghost_of;
use crate::expr::normal::Ctx;
use crate::expr::poly::{q, qf, Backend, Poly};
use rustc_hash::FxHashMap;

/// Field/antifield component pairs `(Φ^i, Φ‡_i)` of the gauge theory; the
/// scalar field has no antifield.
pub fn pairs(dim: u8) -> Vec<(Atom, Atom)> {
    let mut v = Vec::new();
    for mu in 0..dim {
        v.push((Atom::new(Gen::A, &[mu]), Atom::new(Gen::AStar, &[mu])));
    }
    for (f, s) in [(Gen::B, Gen::BStar), (Gen::C, Gen::CStar), (Gen::Cbar, Gen::CbarStar)] {
        v.push((Atom::new(f, &[]), Atom::new(s, &[])));
    }
    v
}

/// Functional derivative density of `f` with respect to one generator
/// component; an adjoint generator's Lie leg becomes the last free leg.
pub fn fderiv<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, gen: &Atom, side: Side) -> Result<Poly<B>> {
    match gen.gen.kind() {
        Kind::DynField | Kind::Antifield => {}
        Kind::Background if gen.gen == Gen::Phibar => {}
        _ => return Err(Error::UnknownGenerator(gen.gen.name())),
    }
    if gen.idx.len() != gen.gen.nidx() || gen.idx.iter().any(|&i| i >= ctx.dim) {
        return Err(Error::MalformedIndex(format!("bad component {gen}")));
    }
    Ok(ctx.euler(f, gen, side))
}

fn check_grade<B: Backend>(f: &Poly<B>) -> Result<i32> {
    if f.nfree != 0 {
        return Err(Error::MalformedIndex("functional with free Lie legs".into()));
    }
    ghost_of(f)
}

/// Anti-bracket density `(F, G)`.
pub fn antibracket<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, g: &Poly<B>) -> Result<Poly<B>> {
    antibracket_signed(ctx, f, g, false)
}

/// Anti-bracket with the sign of the second pairing optionally reversed
/// (used only as a negative control).
pub fn antibracket_signed<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, g: &Poly<B>, flip: bool) -> Result<Poly<B>> {
    check_grade(f)?;
    check_grade(g)?;
    let mut out = Poly::zero(0);
    let second = if flip { q(1) } else { q(-1) };
    for (phi, star) in pairs(ctx.dim) {
        let t1 = ctx.euler(f, &phi, Side::Right).mul(&ctx.euler(g, &star, Side::Left));
        out.add_assign(&contract_last(t1));
        let t2 = ctx.euler(f, &star, Side::Right).mul(&ctx.euler(g, &phi, Side::Left));
        out.add_scaled(&contract_last(t2), second);
    }
    Ok(out)
}

/// Contract the two legs of a two-leg polynomial (no-op for scalars).
fn contract_last<B: Backend>(p: Poly<B>) -> Poly<B> {
    if p.nfree == 2 {
        p.contract(0, 1)
    } else {
        p
    }
}

/// Pointwise BRST differential generated by `s_action`:
/// `sΦ = −δ^R S/δΦ‡`, `sΦ‡ = δ^R S/δΦ`, extended as an odd left derivation
/// commuting with `∇̄`.  Background and external atoms are invariant.  Its
/// integral equals `(S, F)`.
pub fn s_apply<B: Backend>(ctx: &Ctx<B>, s_action: &Poly<B>, f: &Poly<B>) -> Poly<B> {
    let mut memo: FxHashMap<Atom, Poly<B>> = FxHashMap::default();
    let mut on_bare = |a: &Atom| -> Poly<B> {
        memo.entry(a.clone())
            .or_insert_with(|| match a.gen.kind() {
                Kind::DynField => match a.gen.partner() {
                    Some(p) => ctx.euler(s_action, &Atom::new(p, &a.idx), Side::Right).neg(),
                    None => Poly::zero(0),
                },
                Kind::Antifield => {
                    let p = a.gen.partner().expect("antifield partner");
                    ctx.euler(s_action, &Atom::new(p, &a.idx), Side::Right)
                }
                _ => Poly::zero(usize::from(a.gen.adjoint())),
            })
            .clone()
    };
    f.derivation(true, &mut |a| {
        if !a.gen.is_field_like() {
            return None;
        }
        let base = on_bare(&Atom::new(a.gen, &a.idx));
        let r = ctx.d_prefix(&a.ders, base);
        (!r.is_zero()).then_some(r)
    })
}

/// Odd left derivation given by its values on undifferentiated generators.
pub fn odd_derivation<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, on: &dyn Fn(&Atom) -> Option<Poly<B>>) -> Poly<B> {
    f.derivation(true, &mut |a| {
        let base = on(&Atom::new(a.gen, &a.idx))?;
        let r = ctx.d_prefix(&a.ders, base);
        (!r.is_zero()).then_some(r)
    })
}

/// Which background a variation symbol moves.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Target {
    Gauge,
    Scalar,
}

/// A constant tangent vector `ā` (gauge) or `φ̄′` (scalar).  Distinct ids are
/// independent symbols.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variation {
    pub target: Target,
    pub id: u8,
    pub field_dependent: bool,
}

impl Variation {
    pub fn gauge(id: u8) -> Self {
        Variation {
            target: Target::Gauge,
            id,
            field_dependent: false,
        }
    }

    pub fn scalar(id: u8) -> Self {
        Variation {
            target: Target::Scalar,
            id,
            field_dependent: false,
        }
    }

    pub fn gen(&self) -> Gen {
        match self.target {
            Target::Gauge => Gen::Var(self.id),
            Target::Scalar => Gen::PhiVar(self.id),
        }
    }

    fn check<B: Backend>(&self, f: &Poly<B>) -> Result<()> {
        if self.field_dependent {
            return Err(Error::FieldDependentVariationUnsupported);
        }
        let wrong = f.atoms_iter().any(|a| match self.target {
            Target::Gauge => matches!(a.gen, Gen::Phi | Gen::Phibar),
            Target::Scalar => matches!(a.gen, Gen::A | Gen::Fbar),
        });
        if wrong {
            return Err(Error::TargetMismatch(format!(
                "{:?} variation applied to the other theory's fields",
                self.target
            )));
        }
        Ok(())
    }
}

/// `δ̄_v F`: even derivation moving the background.  For the gauge target
/// `δ̄ ∇̄_μ X = [ā_μ, X]` and `δ̄ F̄_{μν} = ∇̄_μ ā_ν − ∇̄_ν ā_μ`.
///
/// When the context reduces background jets on shell, `ā` must be on shell
/// too (the variation of the background equation is the linearized one).
pub fn bg_vary<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    v.check(f)?;
    if ctx.rules.bg_on_shell && !ctx.rules.var_on_shell && v.target == Target::Gauge {
        return Err(Error::RuleNotValidOnRegion {
            rule: "background on-shell with an off-shell variation",
            region: crate::error::Region::V,
        });
    }
    let var = v.gen();
    Ok(f.derivation(false, &mut |a| bg_vary_atom(ctx, a, var)))
}

fn bg_vary_atom<B: Backend>(ctx: &Ctx<B>, a: &Atom, var: Gen) -> Option<Poly<B>> {
    match var {
        Gen::PhiVar(_) => (a.gen == Gen::Phibar).then(|| ctx.nf(&Atom::new(var, &[]).with_ders(&a.ders))),
        _ => {
            if !a.gen.adjoint() {
                return None;
            }
            let mut out = Poly::zero(1);
            let n = a.ders.len();
            for i in 0..n {
                let inner = ctx.nf(&Atom::new(a.gen, &a.idx).with_ders(&a.ders[i + 1..]));
                let av = ctx.nf(&Atom::new(var, &[a.ders[i]]));
                out.add_assign(&ctx.d_prefix(&a.ders[..i], av.lie(&inner)));
            }
            if a.gen == Gen::Fbar {
                let (m, nu) = (a.idx[0], a.idx[1]);
                let mut own = ctx.nf(&Atom::new(var, &[nu]).with_ders(&[m]));
                own.sub_assign(&ctx.nf(&Atom::new(var, &[m]).with_ders(&[nu])));
                out.add_assign(&ctx.d_prefix(&a.ders, own));
            }
            (!out.is_zero()).then_some(out)
        }
    }
}

/// `δ_v F`: even derivation moving the dynamical partner (`A` or `φ`).
pub fn dyn_vary<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    v.check(f)?;
    let (field, var) = match v.target {
        Target::Gauge => (Gen::A, v.gen()),
        Target::Scalar => (Gen::Phi, v.gen()),
    };
    Ok(f.derivation(false, &mut |a| {
        (a.gen == field).then(|| ctx.nf(&Atom::new(var, &a.idx).with_ders(&a.ders)))
    }))
}

/// `𝒟_v = δ̄_v − δ_v`.
pub fn c_d<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    Ok(bg_vary(ctx, f, v)?.minus(&dyn_vary(ctx, f, v)?))
}

/// `𝒟⁰_v F = 𝒟_v F + (F, δ_v Ψ)`.
pub fn c_d0<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, psi: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    let dpsi = dyn_vary(ctx, psi, v)?;
    Ok(c_d(ctx, f, v)?.plus(&antibracket(ctx, f, &dpsi)?))
}

/// `𝒟̂_v F = 𝒟_v F − (F, 𝒟_v Ψ)`.
pub fn c_dhat<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, psi: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    let dpsi = c_d(ctx, psi, v)?;
    c_dhat_with(ctx, f, &dpsi, v)
}

/// [`c_dhat`] with `𝒟_v Ψ` precomputed.
pub fn c_dhat_with<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, dpsi: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    Ok(c_d(ctx, f, v)?.minus(&antibracket(ctx, f, dpsi)?))
}

/// The combination `𝒟_v S − δ_v S₀` standing for `s(δ̄_v Ψ)`; not an operator.
pub fn s_underline<B: Backend>(ctx: &Ctx<B>, s: &Poly<B>, s0: &Poly<B>, v: &Variation) -> Result<Poly<B>> {
    Ok(c_d(ctx, s, v)?.minus(&dyn_vary(ctx, s0, v)?))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `e^{±(−,Ψ)} F`.  The series stops once a term vanishes: each bracket with
/// the antifield-free `Ψ` lowers the antifield number by one.
pub fn gauge_fix_conjugate<B: Backend>(ctx: &Ctx<B>, f: &Poly<B>, psi: &Poly<B>, dir: Direction) -> Result<Poly<B>> {
    if psi.atoms_iter().any(|a| a.gen.kind() == Kind::Antifield) {
        return Err(Error::PsiContainsAntifields);
    }
    if !psi.is_zero() && ghost_of(psi)? != -1 {
        return Err(Error::GradingMismatch(
            "gauge-fixing fermion must have ghost number −1".into(),
        ));
    }
    let sign = match dir {
        Direction::Forward => 1,
        Direction::Inverse => -1,
    };
    let mut out = f.clone();
    let mut term = f.clone();
    let mut n = 0i64;
    loop {
        n += 1;
        term = antibracket(ctx, &term, psi)?.scale(qf(sign, n));
        if term.is_zero() {
            break;
        }
        out.add_assign(&term);
    }
    Ok(out)
}

/// A variation-valued expression; only the zero bracket is representable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VariationExpr {
    Zero,
}

/// `⟦v1, v2⟧` of constant vector fields.
pub fn lie_bracket(v1: &Variation, v2: &Variation) -> Result<VariationExpr> {
    if v1.field_dependent || v2.field_dependent {
        return Err(Error::FieldDependentVariationUnsupported);
    }
    Ok(VariationExpr::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Abstract, Parser, RuleSet};
    use crate::models::Theory;

    fn parse(ctx: &Ctx<Abstract>, text: &str) -> Poly<Abstract> {
        Parser::new(ctx).parse(text).unwrap()
    }

    #[test]
    fn background_variation_of_free_scalar_action() {
        // only the λφ̄²φ²/4 mass term sees the background
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let th = Theory::scalar(&ctx);
        let got = bg_vary(&ctx, &th.s0, &Variation::scalar(0)).unwrap();
        let want = parse(&ctx, "(* -1/2 (lambda) (phibar) (pvar0) (phi) (phi))");
        assert_eq!(got, want);
    }

    #[test]
    fn split_derivative_kills_functions_of_the_sum() {
        let ctx = Ctx::<Abstract>::new(2, RuleSet::NONE);
        let f = parse(
            &ctx,
            "(* (+ (phibar) (phi)) (+ (phibar) (phi)) (D 0 (+ (phibar) (phi))))",
        );
        assert!(c_d(&ctx, &f, &Variation::scalar(0)).unwrap().is_zero());
        let g = parse(&ctx, "(* (phibar) (phi))");
        assert!(!c_d(&ctx, &g, &Variation::scalar(0)).unwrap().is_zero());
    }

    #[test]
    fn variation_target_is_checked() {
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let phi = parse(&ctx, "(phi)");
        assert!(matches!(
            bg_vary(&ctx, &phi, &Variation::gauge(0)),
            Err(Error::TargetMismatch(_))
        ));
        let v = Variation {
            field_dependent: true,
            ..Variation::scalar(0)
        };
        assert!(matches!(
            dyn_vary(&ctx, &phi, &v),
            Err(Error::FieldDependentVariationUnsupported)
        ));
    }

    #[test]
    fn background_variation_moves_covariant_derivatives() {
        // δ̄ ∇̄_0 C = [ā_0, C]
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let got = bg_vary(&ctx, &parse(&ctx, "(D 0 (C @0))"), &Variation::gauge(0)).unwrap();
        assert_eq!(got, parse(&ctx, "(* (avar0 a 0) (C b) (comb a b @0))"));
    }

    #[test]
    fn antibracket_pairs_fields_with_antifields() {
        // (A_1A^1, A*^1·C) = 2 A_1·C
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        let f = parse(&ctx, "(* (A I 1) (A I ^1))");
        let g = parse(&ctx, "(* (A* I ^1) (C I))");
        let want = parse(&ctx, "(* 2 (A I 1) (C I))");
        assert_eq!(antibracket(&ctx, &f, &g).unwrap(), want);
        // no antifields on either side
        let h = parse(&ctx, "(* (C I) (Cbar I))");
        assert!(antibracket(&ctx, &f, &h).unwrap().is_zero());
    }
}
