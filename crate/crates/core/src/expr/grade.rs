//! Gradings of expressions.

use super::atom::{Atom, Kind};
use super::poly::{q, Backend, Poly, Q};
use crate::error::{Error, Result};
use num_traits::Zero;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Grading {
    pub ghost: i32,
    pub mass_dim: Q,
    pub odd: bool,
    pub deg_field: u32,
    pub deg_hbar: u32,
}

impl Grading {
    pub const ZERO: Grading = Grading {
        ghost: 0,
        mass_dim: Q::new_raw(0, 1),
        odd: false,
        deg_field: 0,
        deg_hbar: 0,
    };

    /// `Deg = 2 deg_ħ + deg_field`.
    pub fn deg(&self) -> u32 {
        2 * self.deg_hbar + self.deg_field
    }

    pub fn add(&self, o: &Grading) -> Grading {
        Grading {
            ghost: self.ghost + o.ghost,
            mass_dim: self.mass_dim + o.mass_dim,
            odd: self.odd ^ o.odd,
            deg_field: self.deg_field + o.deg_field,
            deg_hbar: self.deg_hbar + o.deg_hbar,
        }
    }

    pub fn of_atom(a: &Atom) -> Grading {
        let g = a.gen;
        let field = matches!(g.kind(), Kind::DynField | Kind::Antifield);
        Grading {
            ghost: g.ghost(),
            mass_dim: q(i64::from(g.mass_dim()) + a.order() as i64),
            odd: g.odd(),
            deg_field: u32::from(field),
            deg_hbar: 0,
        }
    }

    pub fn of_monomial(atoms: &[Atom]) -> Grading {
        atoms.iter().fold(Grading::ZERO, |g, a| g.add(&Grading::of_atom(a)))
    }
}

impl fmt::Display for Grading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ghost {} mass_dim {} {} deg_field {} deg_hbar {} Deg {}",
            self.ghost,
            self.mass_dim,
            if self.odd { "odd" } else { "even" },
            self.deg_field,
            self.deg_hbar,
            self.deg()
        )
    }
}

/// The common grading of all terms; the zero polynomial has grading zero.
pub fn grade_of<B: Backend>(p: &Poly<B>) -> Result<Grading> {
    let mut it = p
        .sorted_terms()
        .into_iter()
        .map(|(k, _)| Grading::of_monomial(B::atoms(k)));
    let Some(first) = it.next() else {
        return Ok(Grading::ZERO);
    };
    for g in it {
        if g != first {
            return Err(Error::MixedGrade(format!("[{first}] vs [{g}]")));
        }
    }
    Ok(first)
}

/// Ghost number and parity only; mass dimension and field degree may vary.
pub fn ghost_of<B: Backend>(p: &Poly<B>) -> Result<i32> {
    let mut ghost = None;
    for k in p.terms.keys() {
        let g: i32 = B::atoms(k).iter().map(|a| a.gen.ghost()).sum();
        match ghost {
            None => ghost = Some(g),
            Some(h) if h != g => return Err(Error::MixedGrade(format!("ghost {h} vs {g}"))),
            _ => {}
        }
    }
    Ok(ghost.unwrap_or(0))
}

pub fn is_odd<B: Backend>(p: &Poly<B>) -> bool {
    ghost_of(p).map(|g| g.rem_euclid(2) == 1).unwrap_or(false) && !p.terms.values().all(|c| c.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Abstract, Ctx, Parser, RuleSet};

    fn grading(text: &str) -> Result<Grading> {
        let ctx = Ctx::<Abstract>::new(4, RuleSet::NONE);
        grade_of(&Parser::new(&ctx).parse(text)?)
    }

    #[test]
    fn ghost_numbers_of_generators() {
        for (text, ghost, odd) in [
            ("(C @0)", 1, true),
            ("(Cbar @0)", -1, true),
            ("(C* @0)", -2, false),
            ("(A* @0 0)", -1, true),
            ("(B* @0)", -1, true),
            ("(Cbar* @0)", 0, false),
        ] {
            let g = grading(text).unwrap();
            assert_eq!((g.ghost, g.odd), (ghost, odd), "{text}");
        }
    }

    #[test]
    fn derivatives_raise_mass_dimension() {
        let g = grading("(* (phi) (D 0 (D 1 (phi))))").unwrap();
        assert_eq!(g.mass_dim, q(4));
        assert_eq!((g.deg_field, g.deg()), (2, 2));
        // background and external fields do not count towards the field degree
        assert_eq!(grading("(* (phibar) (lambda) (phi))").unwrap().deg_field, 1);
    }

    #[test]
    fn mixed_sums_are_rejected() {
        assert!(matches!(
            grading("(+ (phi) (* (phi) (phi)))"),
            Err(Error::MixedGrade(_))
        ));
        assert_eq!(grading("(+ (phi) (* -1 (phi)))").unwrap(), Grading::ZERO);
    }
}
