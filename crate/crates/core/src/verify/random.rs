//! Seeded random local functionals, emitted as expression text so the same
//! instance can be read into either Lie backend.

use crate::expr::atom::Gen;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GENS: [Gen; 8] = [
    Gen::A,
    Gen::B,
    Gen::C,
    Gen::Cbar,
    Gen::AStar,
    Gen::BStar,
    Gen::CStar,
    Gen::CbarStar,
];
const LABELS: [&str; 5] = ["I", "J", "K", "L", "M"];

/// Bounds for [`functional`].
#[derive(Copy, Clone, Debug)]
pub struct Shape {
    pub dim: u8,
    pub max_degree: usize,
    pub max_ders: usize,
}

/// Deterministic generator for trial `k` of a suite seeded with `seed`.
pub fn rng_for(seed: u64, suite: &str, k: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in suite.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn atom_text(rng: &mut ChaCha8Rng, g: Gen, label: &str, dim: u8, nders: usize) -> String {
    let mut s = format!("({} {label}", g.name());
    if g.nidx() == 1 {
        let mu = rng.gen_range(0..dim);
        if g.upper() {
            s += &format!(" ^{mu}");
        } else {
            s += &format!(" {mu}");
        }
    }
    s.push(')');
    if nders == 0 {
        return s;
    }
    let ders: Vec<String> = (0..nders).map(|_| rng.gen_range(0..dim).to_string()).collect();
    format!("(D {} {s})", ders.join(" "))
}

/// One monomial `c · test_k · (Lie contraction of 1..=max_degree fields)`,
/// with its ghost number.
fn monomial(rng: &mut ChaCha8Rng, shape: &Shape, test: u8) -> (String, i32) {
    let n = rng.gen_range(1..=shape.max_degree);
    let gens: Vec<Gen> = (0..n).map(|_| *GENS.choose(rng).unwrap()).collect();
    let mut ders = vec![0usize; n];
    for _ in 0..rng.gen_range(0..=shape.max_ders) {
        ders[rng.gen_range(0..n)] += 1;
    }
    let mut parts = vec![];
    let c: i64 = *[-3, -2, -1, 1, 2, 3].choose(rng).unwrap();
    if c != 1 {
        parts.push(c.to_string());
    }
    parts.push(format!("(test{test})"));
    let labels: Vec<&str> = match n {
        1 => {
            let a = rng.gen_range(0..shape.dim - 1);
            let b = rng.gen_range(a + 1..shape.dim);
            parts.push(format!("(Fbar I {a} {b})"));
            vec!["I"]
        }
        2 => vec!["I", "I"],
        3 => {
            parts.push("(f I J K)".into());
            vec!["I", "J", "K"]
        }
        _ => {
            if rng.gen_bool(0.5) {
                parts.push("(f I J M) (f K L M)".into());
            } else {
                parts.push("(delta I J) (delta K L)".into());
            }
            LABELS[..4].to_vec()
        }
    };
    for (i, g) in gens.iter().enumerate() {
        parts.push(atom_text(rng, *g, labels[i], shape.dim, ders[i]));
    }
    let ghost = gens.iter().map(|g| g.ghost()).sum();
    (format!("(* {})", parts.join(" ")), ghost)
}

/// A ghost-homogeneous sum of one or two monomials against the test
/// function `test_k`.
pub fn functional(rng: &mut ChaCha8Rng, shape: &Shape, test: u8) -> String {
    let (m1, g1) = monomial(rng, shape, test);
    if rng.gen_bool(0.5) {
        for _ in 0..20 {
            let (m2, g2) = monomial(rng, shape, test);
            if g2 == g1 {
                return format!("(+ {m1} {m2})");
            }
        }
    }
    m1
}
