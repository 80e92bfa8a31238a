//! Symbolic local functionals: jet atoms, Lie tensors, normal forms,
//! Euler derivatives and the text format.

pub mod atom;
pub mod euler;
pub mod grade;
pub mod lie;
pub mod normal;
pub mod poly;
pub mod sexpr;

pub use atom::{Atom, Gen, Kind};
pub use euler::Side;
pub use grade::Grading;
pub use normal::{Ctx, Cutoff, RuleSet};
pub use poly::{q, qf, to_su2, Abstract, Backend, Poly, Su2, Q};
pub use sexpr::{print, Parser, Printable};
