//! Finite star-product suites on exact rational kernels.

use super::random::rng_for;
use super::{Config, Outcome};
use crate::error::Result;
use crate::expr::poly::{q, Q};
use crate::starform::{
    chain_brst, chain_kernel, check_derivation_compat, null_space, star, star_commutator, vanishes_on_kernel,
    Functional, Kernel, Space,
};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub(super) fn run(id: &str, cfg: &Config) -> Result<Outcome> {
    match id {
        "star_commutator" => star_commutator_suite(cfg),
        "star_assoc" => star_assoc(cfg),
        "star_derivation" => star_derivation(cfg),
        _ => unreachable!("not a star suite: {id}"),
    }
}

fn small_q(rng: &mut ChaCha8Rng) -> Q {
    Q::new(rng.gen_range(-3..=3), rng.gen_range(1..=2))
}

fn int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<Q>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| q(rng.gen_range(-2..=2))).collect())
        .collect()
}

/// Random kernel with entries only between variables of equal parity.
fn random_kernel(rng: &mut ChaCha8Rng, space: &Space) -> Kernel {
    let n = space.dim();
    let mut k = Kernel::zero(space);
    for i in 0..n {
        for j in 0..n {
            if space.odd(i) == space.odd(j) && rng.gen_bool(0.7) {
                k.m[i][j] = small_q(rng);
            }
        }
    }
    k
}

/// Sum of one to three monomials of field degree `deg` with integer
/// coefficients; repeated odd variables simply drop out.
fn random_poly(rng: &mut ChaCha8Rng, space: &Space, deg: usize) -> Functional {
    let n = space.dim();
    let mut f = Functional::zero(space);
    for _ in 0..rng.gen_range(1..=3) {
        let vars: Vec<u16> = (0..deg).map(|_| rng.gen_range(0..n) as u16).collect();
        let c = q(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
        f = f.add(&Functional::monomial(space, c, 0, &vars)).expect("same space");
    }
    f
}

/// Like [`random_poly`] but keeping only monomials of one parity, as the
/// graded Leibniz rule needs.
fn random_homogeneous(rng: &mut ChaCha8Rng, space: &Space, deg: usize) -> Functional {
    let n = space.dim();
    let mut f = Functional::zero(space);
    let mut parity = None;
    for _ in 0..rng.gen_range(1..=3) {
        let vars: Vec<u16> = (0..deg).map(|_| rng.gen_range(0..n) as u16).collect();
        let m = Functional::monomial(space, q(rng.gen_range(1..=3)), 0, &vars);
        if m.is_zero() || *parity.get_or_insert(m.odd()) != m.odd() {
            continue;
        }
        f = f.add(&m).expect("same space");
    }
    f
}

fn random_poly_in(rng: &mut ChaCha8Rng, space: &Space, lo: usize, hi: usize) -> Functional {
    let deg = rng.gen_range(lo..=hi);
    random_poly(rng, space, deg)
}

fn random_space(rng: &mut ChaCha8Rng, k: u64) -> Space {
    if k % 3 == 2 {
        Space::gauge(1)
    } else {
        Space::scalar(rng.gen_range(2..=6))
    }
}

fn failure(first: &mut Option<String>, msg: impl FnOnce() -> String) {
    if first.is_none() {
        *first = Some(msg());
    }
}

fn verdict(first: Option<String>, detail: String) -> Outcome {
    let pass = first.is_none();
    Outcome::exact(pass, first.unwrap_or_default(), detail)
}

fn star_commutator_suite(cfg: &Config) -> Result<Outcome> {
    let trials = 20;
    let mut first = None;
    for k in 0..trials {
        let mut rng = rng_for(cfg.seed, "star_commutator", k);
        let space = random_space(&mut rng, k);
        let w = random_kernel(&mut rng, &space);
        let n = space.dim();
        let probe = random_poly_in(&mut rng, &space, 1, 3);
        for i in 0..n {
            for j in 0..n {
                let (fi, fj) = (Functional::var(&space, i), Functional::var(&space, j));
                let c = star_commutator(&fi, &fj, &w)?;
                let both_odd = space.odd(i) && space.odd(j);
                let expect = if both_odd {
                    w.m[i][j] + w.m[j][i]
                } else {
                    w.commutator(i, j)
                };
                let want = Functional::monomial(&space, expect, 1, &[]);
                if c != want {
                    failure(&mut first, || format!("[φ{i}, φ{j}]⋆ = {c}, expected {want}"));
                }
                if !star_commutator(&c, &probe, &w)?.is_zero() {
                    failure(&mut first, || format!("[φ{i}, φ{j}]⋆ is not central against {probe}"));
                }
            }
        }
        let one = Functional::one(&space);
        if star(&one, &probe, &w)? != probe || star(&probe, &one, &w)? != probe {
            failure(&mut first, || format!("1 is not a unit for {probe}"));
        }
        let other = random_poly_in(&mut rng, &space, 1, 3);
        if star(&probe, &other, &w)?.classical() != probe.mul(&other)? {
            failure(&mut first, || {
                format!("classical limit of {probe} ⋆ {other} is not the product")
            });
        }
    }
    Ok(verdict(first, format!("{trials} kernels")))
}

/// The ideal check on a scalar space: `ω = V M Vᵀ` with the columns of `V`
/// spanning `ker P`, so `Pω = ωPᵀ = 0`.
fn ideal_trial(rng: &mut ChaCha8Rng, first: &mut Option<String>) -> Result<()> {
    let n = rng.gen_range(2..=4);
    let r = rng.gen_range(1..n.min(3));
    let p = loop {
        let p = int_matrix(rng, n - r, n);
        if null_space(&p, n).len() == r {
            break p;
        }
    };
    let v = null_space(&p, n);
    let mm = int_matrix(rng, r, r);
    let space = Space::scalar(n);
    let mut w = Kernel::zero(&space);
    for i in 0..n {
        for j in 0..n {
            let mut s = Q::zero();
            for a in 0..r {
                for b in 0..r {
                    s += v[a][i] * mm[a][b] * v[b][j];
                }
            }
            w.m[i][j] = s;
        }
    }
    let row = rng.gen_range(0..n - r);
    let mut pphi = Functional::zero(&space);
    for (x, c) in p[row].iter().enumerate() {
        pphi = pphi.add(&Functional::var(&space, x).scale(*c))?;
    }
    let g = random_poly_in(rng, &space, 0, 2);
    let f = g.mul(&pphi)?;
    let h = random_poly_in(rng, &space, 1, 3);
    for (label, x) in [("F⋆H", star(&f, &h, &w)?), ("H⋆F", star(&h, &f, &w)?)] {
        if !vanishes_on_kernel(&x, &p)? {
            failure(first, || format!("{label} = {x} leaves the ideal"));
        }
    }
    // control: a linear field that is not constant on ker P
    let control = (0..n)
        .find(|&x| v.iter().any(|b| !b[x].is_zero()))
        .expect("nonzero kernel");
    if vanishes_on_kernel(&Functional::var(&space, control), &p)? {
        failure(first, || format!("φ{control} unexpectedly vanishes on ker P"));
    }
    Ok(())
}

fn star_assoc(cfg: &Config) -> Result<Outcome> {
    let trials = cfg.trials.star_assoc as u64;
    let mut first = None;
    for k in 0..trials {
        let mut rng = rng_for(cfg.seed, "star_assoc", k);
        let space = random_space(&mut rng, k);
        let w = random_kernel(&mut rng, &space);
        let degs: Vec<usize> = (0..3).map(|_| rng.gen_range(0..=3)).collect();
        let f = random_poly(&mut rng, &space, degs[0]);
        let g = random_poly(&mut rng, &space, degs[1]);
        let h = random_poly(&mut rng, &space, degs[2]);
        let left = star(&star(&f, &g, &w)?, &h, &w)?;
        let right = star(&f, &star(&g, &h, &w)?, &w)?;
        if left != right {
            let d = left.sub(&right)?;
            failure(&mut first, || {
                format!("(F⋆G)⋆H − F⋆(G⋆H) = {d} for F = {f}, G = {g}, H = {h}")
            });
        }
        let fg = star(&f, &g, &w)?;
        if !fg.is_zero() && !f.is_zero() && !g.is_zero() && fg.deg() != Some(degs[0] + degs[1]) {
            failure(&mut first, || format!("Deg({f} ⋆ {g}) = {:?}", fg.deg()));
        }
    }
    let ideal_trials = 10;
    for k in 0..ideal_trials {
        let mut rng = rng_for(cfg.seed, "star_assoc/ideal", k);
        ideal_trial(&mut rng, &mut first)?;
    }
    Ok(verdict(first, format!("{trials} triples, {ideal_trials} ideal checks")))
}

fn star_derivation(cfg: &Config) -> Result<Outcome> {
    let trials = cfg.trials.star_derivation as u64;
    let mut first = None;
    let mut negatives = 0;
    for k in 0..trials {
        let mut rng = rng_for(cfg.seed, "star_derivation", k);
        let space = Space::gauge(rng.gen_range(2..=3));
        let n = space.sites;
        let wv: Vec<Vec<Q>> = (0..n).map(|_| (0..n).map(|_| small_q(&mut rng)).collect()).collect();
        // circulant W_s, with W_v = −W_s on every other trial
        let c: Vec<Q> = (0..n).map(|_| small_q(&mut rng)).collect();
        let ws: Vec<Vec<Q>> = (0..n).map(|x| (0..n).map(|y| c[(y + n - x) % n]).collect()).collect();
        let wv = if k % 2 == 0 {
            ws.iter().map(|r| r.iter().map(|x| -*x).collect()).collect()
        } else {
            wv
        };
        let mut w = chain_kernel(&space, &wv, &ws);
        let perturb = k % 4 == 3;
        if perturb {
            negatives += 1;
            // an entry outside the freely choosable A-A and C̄-C̄ blocks
            let blocks = [(0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2)];
            let (ca, cb) = blocks[rng.gen_range(0..blocks.len())];
            let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
            w.m[space.var(x, ca)][space.var(y, cb)] += Q::from_integer(1);
        }
        let kk = chain_brst(&space);
        let family: Vec<Functional> = (2..=3).map(|d| random_homogeneous(&mut rng, &space, d)).collect();
        let compat = check_derivation_compat(&kk, &w, &family)?;
        if compat.intertwines != compat.derivation {
            failure(&mut first, || {
                format!(
                    "trial {k}: matrix verdict {} but Leibniz verdict {} ({:?})",
                    compat.intertwines, compat.derivation, compat.witness
                )
            });
        }
        if compat.derivation == perturb {
            failure(&mut first, || {
                format!(
                    "trial {k}: expected compatible = {}, got {}",
                    !perturb, compat.derivation
                )
            });
        }
    }
    let space = Space::gauge(2);
    let w = chain_kernel(
        &space,
        &[vec![q(1), q(0)], vec![q(0), q(1)]],
        &[vec![q(1), q(0)], vec![q(0), q(1)]],
    );
    let zero = check_derivation_compat(&Kernel::zero(&space), &w, &[])?;
    if !(zero.intertwines && zero.derivation) {
        failure(&mut first, || "K = 0 is not a derivation".into());
    }
    Ok(verdict(first, format!("{trials} kernels, {negatives} incompatible")))
}
