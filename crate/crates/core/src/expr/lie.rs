//! Invariant tensors of an arbitrary Lie algebra with an invariant metric.
//!
//! A tensor built from structure constants and metric contractions without
//! loops is a forest of trivalent trees.  Each tree with root leg `r` is
//! stored as a Lie word `W` in the remaining legs, meaning `⟨e_r, W⟩`.
//! Words use Polish notation: [`BR`] followed by two subwords, or a leg.
//!
//! The canonical basis of one tree with legs `l_min < … < l_max` is the set
//! of left-normed combs `[[…[l_min, m_1], m_2]…, m_k]` rooted at `l_max`, with
//! `m_i` ranging over orderings of the middle legs.  Coordinates are read off
//! by expanding the word in the free associative algebra and keeping the
//! monomials that start with `l_min`.  Only antisymmetry, Jacobi and
//! invariance of the metric are used.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

pub const BR: u8 = u8::MAX;

pub type Word = SmallVec<[u8; 12]>;

/// `⟨e_root, word⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub root: u8,
    pub word: Word,
}

/// Canonical forest: blocks sorted by smallest leg, each encoded as its
/// length followed by the comb `[l_min, m_1, …, m_k, l_max]`.
pub type ForestKey = SmallVec<[u8; 16]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopContraction;

fn subword_len(w: &[u8]) -> usize {
    let mut need = 1usize;
    let mut i = 0;
    while need > 0 {
        if w[i] == BR {
            need += 2;
        }
        need -= 1;
        i += 1;
    }
    i
}

pub fn split(w: &[u8]) -> (&[u8], &[u8]) {
    debug_assert_eq!(w[0], BR);
    let n = subword_len(&w[1..]);
    (&w[1..1 + n], &w[1 + n..])
}

pub fn contains(w: &[u8], leg: u8) -> bool {
    w.contains(&leg)
}

pub fn bracket(u: &[u8], v: &[u8]) -> Word {
    let mut w = Word::with_capacity(1 + u.len() + v.len());
    w.push(BR);
    w.extend_from_slice(u);
    w.extend_from_slice(v);
    w
}

impl Block {
    pub fn legs(&self) -> impl Iterator<Item = u8> + '_ {
        std::iter::once(self.root).chain(self.word.iter().copied().filter(|&x| x != BR))
    }

    pub fn has(&self, leg: u8) -> bool {
        self.root == leg || contains(&self.word, leg)
    }

    /// Re-express `⟨e_root, W⟩` as `sign · ⟨e_a, W'⟩`.
    pub fn reroot(&self, a: u8) -> (i64, Word) {
        if self.root == a {
            return (1, self.word.clone());
        }
        let mut sign = 1;
        let mut x: Word = SmallVec::from_slice(&[self.root]);
        let mut y: Word = self.word.clone();
        while !(y.len() == 1 && y[0] == a) {
            let (u, v) = split(&y);
            let (nx, ny) = if contains(v, a) {
                (bracket(&x, u), Word::from_slice(v))
            } else {
                sign = -sign;
                (bracket(&x, v), Word::from_slice(u))
            };
            x = nx;
            y = ny;
        }
        (sign, x)
    }
}

/// `⟨X, Y⟩` written as a rooted block, by `⟨X,[U,V]⟩ = ⟨[X,U],V⟩`.
fn pair(mut x: Word, y: &[u8]) -> Block {
    let mut y = Word::from_slice(y);
    while y.len() > 1 {
        let (u, v) = split(&y);
        x = bracket(&x, u);
        y = Word::from_slice(v);
    }
    Block { root: y[0], word: x }
}

/// Contract legs `a` and `b` with the invariant metric.
pub fn glue(blocks: &mut Vec<Block>, a: u8, b: u8) -> Result<i64, LoopContraction> {
    let ia = blocks.iter().position(|bl| bl.has(a)).expect("leg a present");
    let ib = blocks.iter().position(|bl| bl.has(b)).expect("leg b present");
    if ia == ib {
        return Err(LoopContraction);
    }
    let (sa, wa) = blocks[ia].reroot(a);
    let (sb, wb) = blocks[ib].reroot(b);
    let merged = pair(wa, &wb);
    let (hi, lo) = if ia > ib { (ia, ib) } else { (ib, ia) };
    blocks.swap_remove(hi);
    blocks.swap_remove(lo);
    blocks.push(merged);
    Ok(sa * sb)
}

pub fn relabel(blocks: &mut [Block], map: &[u8]) {
    for b in blocks.iter_mut() {
        b.root = map[b.root as usize];
        for x in b.word.iter_mut() {
            if *x != BR {
                *x = map[*x as usize];
            }
        }
    }
}

/// Expansion of a Lie word in the free associative algebra.
fn expand(w: &[u8]) -> Vec<(i64, Word)> {
    if w.len() == 1 {
        return vec![(1, Word::from_slice(w))];
    }
    let (u, v) = split(w);
    let eu = expand(u);
    let ev = expand(v);
    let mut out = Vec::with_capacity(2 * eu.len() * ev.len());
    for (cu, mu) in &eu {
        for (cv, mv) in &ev {
            let mut m = mu.clone();
            m.extend_from_slice(mv);
            out.push((cu * cv, m));
            let mut m2 = mv.clone();
            m2.extend_from_slice(mu);
            out.push((-cu * cv, m2));
        }
    }
    out
}

/// Coordinates of one tree in the comb basis (each comb includes the root).
pub fn canon_block(b: &Block) -> Vec<(i64, Word)> {
    let max = b.legs().max().unwrap();
    let (s, w) = b.reroot(max);
    let min = w.iter().copied().filter(|&x| x != BR).min().unwrap();
    let mut acc: FxHashMap<Word, i64> = FxHashMap::default();
    for (c, mut m) in expand(&w) {
        if m[0] == min {
            m.push(max);
            *acc.entry(m).or_insert(0) += s * c;
        }
    }
    let mut v: Vec<(i64, Word)> = acc.into_iter().filter(|(_, c)| *c != 0).map(|(m, c)| (c, m)).collect();
    v.sort_by(|a, b| a.1.cmp(&b.1));
    v
}

/// Canonical coordinates of a whole forest.
pub fn canon_forest(blocks: &[Block]) -> Vec<(i64, ForestKey)> {
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let mins: Vec<u8> = blocks.iter().map(|b| b.legs().min().unwrap()).collect();
    order.sort_by_key(|&i| mins[i]);
    let mut acc: Vec<(i64, ForestKey)> = vec![(1, ForestKey::new())];
    for i in order {
        let cb = canon_block(&blocks[i]);
        if cb.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(acc.len() * cb.len());
        for (c0, k0) in &acc {
            for (c1, comb) in &cb {
                let mut k = k0.clone();
                k.push(comb.len() as u8);
                k.extend_from_slice(comb);
                next.push((c0 * c1, k));
            }
        }
        acc = next;
    }
    acc
}

/// Blocks of a canonical forest.
pub fn blocks_of(key: &ForestKey) -> Vec<Block> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < key.len() {
        let n = key[i] as usize;
        let comb = &key[i + 1..i + 1 + n];
        let mut w: Word = SmallVec::from_slice(&comb[..1]);
        for &m in &comb[1..n - 1] {
            w = bracket(&w, &[m]);
        }
        out.push(Block {
            root: comb[n - 1],
            word: w,
        });
        i += n + 1;
    }
    out
}

/// Levi-Civita symbol on `{0,1,2}`.
pub fn eps(a: u8, b: u8, c: u8) -> i64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Evaluate a Lie word with su(2) structure constants on component
/// assignments of its legs, returning the resulting vector.
pub fn eval_word_su2(w: &[u8], comps: &[u8]) -> [i64; 3] {
    if w.len() == 1 {
        let mut v = [0; 3];
        v[comps[w[0] as usize] as usize] = 1;
        return v;
    }
    let (u, v) = split(w);
    let x = eval_word_su2(u, comps);
    let y = eval_word_su2(v, comps);
    let mut out = [0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..3 {
            for k in 0..3 {
                *o += eps(i as u8, j as u8, k as u8) * x[j] * y[k];
            }
        }
    }
    out
}

/// Value of a forest for a given component assignment of all legs.
pub fn eval_forest_su2(blocks: &[Block], comps: &[u8]) -> i64 {
    blocks
        .iter()
        .map(|b| eval_word_su2(&b.word, comps)[comps[b.root as usize] as usize])
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(a: u8, b: u8, c: u8) -> Block {
        Block {
            root: a,
            word: bracket(&[b], &[c]),
        }
    }

    fn all_assignments(n: usize) -> Vec<Vec<u8>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..3u8).map(move |c| {
                        let mut w = v.clone();
                        w.push(c);
                        w
                    })
                })
                .collect();
        }
        out
    }

    fn canon_eval(blocks: &[Block], comps: &[u8]) -> i64 {
        canon_forest(blocks)
            .iter()
            .map(|(c, k)| c * eval_forest_su2(&blocks_of(k), comps))
            .sum()
    }

    #[test]
    fn reroot_preserves_value() {
        let b = Block {
            root: 0,
            word: bracket(&bracket(&[1], &[2]), &[3]),
        };
        for a in 1..4 {
            let (s, w) = b.reroot(a);
            let nb = Block { root: a, word: w };
            for comps in all_assignments(4) {
                assert_eq!(
                    eval_forest_su2(std::slice::from_ref(&b), &comps),
                    s * eval_forest_su2(std::slice::from_ref(&nb), &comps)
                );
            }
        }
    }

    #[test]
    fn glued_tree_matches_su2_sum() {
        // Σ_x f^{0 1 x} f^{x 2 3}
        let mut bl = vec![f(0, 1, 4), f(5, 2, 3)];
        let s = glue(&mut bl, 4, 5).unwrap();
        for comps in all_assignments(4) {
            let mut c6 = comps.clone();
            c6.extend([0, 0]);
            let summed: i64 = (0..3)
                .map(|x| {
                    let mut c = comps.clone();
                    c.extend([x, x]);
                    eval_forest_su2(&[f(0, 1, 4), f(5, 2, 3)], &c)
                })
                .sum();
            assert_eq!(summed, s * eval_forest_su2(&bl, &c6));
            assert_eq!(summed, s * canon_eval(&bl, &c6));
        }
    }

    #[test]
    fn jacobi_cancels() {
        // [[a,b],c] + [[b,c],a] + [[c,a],b] rooted at 3.
        let ws = [
            bracket(&bracket(&[0], &[1]), &[2]),
            bracket(&bracket(&[1], &[2]), &[0]),
            bracket(&bracket(&[2], &[0]), &[1]),
        ];
        let mut acc: FxHashMap<ForestKey, i64> = FxHashMap::default();
        for w in ws {
            for (c, k) in canon_forest(&[Block { root: 3, word: w }]) {
                *acc.entry(k).or_insert(0) += c;
            }
        }
        assert!(acc.values().all(|&c| c == 0));
    }

    #[test]
    fn antisymmetry_and_basis_size() {
        let a = canon_forest(&[f(2, 0, 1)]);
        let b = canon_forest(&[f(2, 1, 0)]);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].1, b[0].1);
        assert_eq!(a[0].0, -b[0].0);
        // five legs: (5-2)! = 6 independent combs
        let w = bracket(&bracket(&bracket(&[3], &[0]), &[2]), &[1]);
        let c = canon_forest(&[Block { root: 4, word: w }]);
        assert!(c.len() <= 6);
    }

    #[test]
    fn loop_is_reported() {
        let mut bl = vec![f(0, 1, 2)];
        assert_eq!(glue(&mut bl, 1, 2), Err(LoopContraction));
    }
}
