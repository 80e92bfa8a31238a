//! Randomized invariants of the algebraic core and the lattice solver.

use bvcheck::expr::grade::{grade_of, is_odd};
use bvcheck::expr::{print, q, to_su2, Abstract, Ctx, Parser, Poly, RuleSet};
use bvcheck::funcalc::antibracket;
use bvcheck::lattice::{causal_future, Field, Grid, Lattice};
use bvcheck::starform::{star, star_commutator, Functional, Kernel, Space};
use proptest::prelude::*;
use std::sync::OnceLock;

/// Local densities without free Lie legs, each of fixed ghost number.
const POOL: &[&str] = &[
    "(* (A I 1) (A* I ^1))",
    "(* (C I) (C* I))",
    "(* (D 0 (C I)) (A* I ^0))",
    "(* (A a 0) (C b) (A* c ^0) (f a b c))",
    "(* (C a) (C b) (C* c) (f a b c))",
    "(* (Cbar I) (D ^mu (A I mu)))",
    "(* (B I) (Cbar* I))",
    "(* (D 1 (A I 2)) (D ^1 (A I ^2)))",
    "(* (Fbar a 0 1) (A b ^0) (A c ^1) (f a b c))",
    "(* (B I) (B I))",
    "(* (Cbar* I) (Cbar* I) (C J) (C* J))",
];

fn ctx() -> &'static Ctx<Abstract> {
    static CTX: OnceLock<Ctx<Abstract>> = OnceLock::new();
    CTX.get_or_init(|| Ctx::new(4, RuleSet::NONE))
}

fn pool(i: usize, c: i64) -> Poly<Abstract> {
    Parser::new(ctx()).parse(POOL[i]).unwrap().scale(q(c))
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn nonzero() -> impl Strategy<Value = i64> {
    prop_oneof![-3i64..=-1, 1i64..=3]
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn antibracket_graded_antisymmetry(i in 0..POOL.len(), j in 0..POOL.len(), a in nonzero(), b in nonzero()) {
        let c = ctx();
        let (f, g) = (pool(i, a), pool(j, b));
        let (ef, eg) = (is_odd(&f), is_odd(&g));
        // (F,G) = −(−1)^{(ε_F+1)(ε_G+1)} (G,F) up to total derivatives
        let mut sym = antibracket(c, &f, &g).unwrap();
        sym.add_scaled(&antibracket(c, &g, &f).unwrap(), if ef || eg { q(1) } else { q(-1) });
        prop_assert!(c.is_total_derivative(&sym), "{}", print(&c.normalize(&sym)));
    }

    #[test]
    fn antibracket_shifts_ghost_by_one(i in 0..POOL.len(), j in 0..POOL.len()) {
        let c = ctx();
        let (f, g) = (pool(i, 1), pool(j, 1));
        let br = antibracket(c, &f, &g).unwrap();
        if !br.is_zero() {
            let gh = |p: &Poly<Abstract>| grade_of(p).unwrap().ghost;
            prop_assert_eq!(gh(&br), gh(&f) + gh(&g) + 1);
        }
    }

    #[test]
    fn su2_evaluation_is_multiplicative(i in 0..POOL.len(), j in 0..POOL.len()) {
        let (f, g) = (pool(i, 1), pool(j, 1));
        prop_assert_eq!(to_su2(&f.mul(&g)), to_su2(&f).mul(&to_su2(&g)));
    }

    #[test]
    fn grading_is_additive(i in 0..POOL.len(), j in 0..POOL.len()) {
        let (f, g) = (pool(i, 1), pool(j, 1));
        let fg = f.mul(&g);
        if !fg.is_zero() {
            prop_assert_eq!(grade_of(&fg).unwrap(), grade_of(&f).unwrap().add(&grade_of(&g).unwrap()));
        }
    }

    #[test]
    fn printed_sums_parse_back(i in 0..POOL.len(), j in 0..POOL.len(), a in nonzero(), b in nonzero()) {
        let (f, g) = (pool(i, a), pool(j, b));
        prop_assume!(grade_of(&f).unwrap().ghost == grade_of(&g).unwrap().ghost);
        let sum = f.plus(&g);
        prop_assert_eq!(Parser::new(ctx()).parse(&print(&sum)).unwrap(), sum.clone());
        prop_assert_eq!(ctx().normalize(&sum), sum);
    }
}

// ------------------------------------------------------------ star product

fn kernel_strategy() -> impl Strategy<Value = (usize, Vec<i64>)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(-2i64..=2, n * n)))
}

fn kernel(n: usize, entries: &[i64]) -> (Space, Kernel) {
    let space = Space::scalar(n);
    let mut k = Kernel::zero(&space);
    for i in 0..n {
        for j in 0..n {
            k.m[i][j] = q(entries[i * n + j]);
        }
    }
    (space, k)
}

fn functional(space: &Space, monos: &[(i64, Vec<usize>)]) -> Functional {
    let n = space.dim();
    let mut f = Functional::zero(space);
    for (c, vars) in monos {
        let vars: Vec<u16> = vars.iter().map(|v| (v % n) as u16).collect();
        f = f.add(&Functional::monomial(space, q(*c), 0, &vars)).unwrap();
    }
    f
}

fn monos() -> impl Strategy<Value = Vec<(i64, Vec<usize>)>> {
    prop::collection::vec((nonzero(), prop::collection::vec(0usize..6, 0..=3)), 1..=3)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn star_is_associative((n, w) in kernel_strategy(), a in monos(), b in monos(), c in monos()) {
        let (space, k) = kernel(n, &w);
        let (f, g, h) = (functional(&space, &a), functional(&space, &b), functional(&space, &c));
        let left = star(&star(&f, &g, &k).unwrap(), &h, &k).unwrap();
        let right = star(&f, &star(&g, &h, &k).unwrap(), &k).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn star_commutator_is_antisymmetric((n, w) in kernel_strategy(), a in monos(), b in monos()) {
        let (space, k) = kernel(n, &w);
        let (f, g) = (functional(&space, &a), functional(&space, &b));
        let fg = star_commutator(&f, &g, &k).unwrap();
        let gf = star_commutator(&g, &f, &k).unwrap();
        prop_assert!(fg.add(&gf).unwrap().is_zero());
    }

    #[test]
    fn symmetric_kernel_gives_a_commutative_product((n, w) in kernel_strategy(), a in monos(), b in monos()) {
        let (space, k) = kernel(n, &w);
        let mut sym = k.clone();
        for i in 0..n {
            for j in 0..n {
                sym.m[i][j] = k.m[i][j] + k.m[j][i];
            }
        }
        let (f, g) = (functional(&space, &a), functional(&space, &b));
        prop_assert!(star_commutator(&f, &g, &sym).unwrap().is_zero());
    }
}

// ------------------------------------------------------------------ lattice

fn small_lattice() -> Lattice {
    Lattice::new(Grid::new(32, 48, 0.25, 0.125).unwrap(), 1.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn retarded_solution_is_linear_and_causal(
        n1 in 4usize..40, i1 in 0usize..32, n2 in 4usize..40, i2 in 0usize..32, a in -2.0f64..2.0, b in -2.0f64..2.0,
    ) {
        let lat = small_lattice();
        let bg = lat.solve_background(&vec![0.3; 32], &vec![0.0; 32]).unwrap();
        let pot = lat.potential(&bg);
        let (s1, s2) = (lat.point_source((n1, i1)), lat.point_source((n2, i2)));
        let u1 = lat.retarded(&pot, &s1).unwrap();
        let u2 = lat.retarded(&pot, &s2).unwrap();
        let mix = s1.zip(&s2, |x, y| a * x + b * y);
        let u = lat.retarded(&pot, &mix).unwrap();
        let sup = u1.zip(&u2, |x, y| a * x + b * y);
        prop_assert!(u.zip(&sup, |x, y| x - y).max_abs() <= 1e-9 * (1.0 + u.max_abs()));
        let grid = lat.grid;
        let fut = causal_future(&grid, &|n, i| (n, i) == (n1, i1) || (n, i) == (n2, i2));
        for n in 0..=grid.nt {
            for i in 0..grid.nx {
                if !fut[n * grid.nx + i] {
                    prop_assert_eq!(u.at(n, i), 0.0, "({}, {})", n, i);
                }
            }
        }
    }

    #[test]
    fn retarded_solution_inverts_the_operator(n0 in 1usize..40, k in 1.0f64..4.0) {
        let lat = small_lattice();
        let bg = lat.solve_background(&vec![0.5; 32], &vec![0.1; 32]).unwrap();
        let pot = lat.potential(&bg);
        let f = Field::from_fn(lat.grid, |t, x| if t >= lat.grid.t(n0) { (k * x + t).sin() } else { 0.0 });
        let u = lat.retarded(&pot, &f).unwrap();
        let pu = lat.apply(&pot, &u);
        let g = lat.grid;
        for n in 1..g.nt {
            for i in 0..g.nx {
                prop_assert!((pu.at(n, i) - f.at(n, i)).abs() <= 1e-8, "({}, {})", n, i);
            }
        }
    }
}
