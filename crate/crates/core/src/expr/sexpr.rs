//! Prefix text format for expressions.
//!
//! ```text
//! expr  := number | (+ expr…) | (- expr…) | (* expr…) | (D idx… expr)
//!        | (GEN lie? idx…) | (f l l l) | (comb l… l) | (delta l l)
//!        | (g idx idx) | (e @k %c) | (OP expr)
//! idx   := 0..9 | mu        lower index,  ^0 | ^mu  upper index
//! lie   := I | @k | %c      summed label, k-th free leg, su(2) component
//! ```
//!
//! A label occurring twice under a product (or derivative) is summed there;
//! spacetime pairs must have opposite positions.  Free spacetime labels are
//! rejected; free Lie legs must be named `@0, @1, …`.

use super::atom::{eta, Atom, Gen};
use super::grade::ghost_of;
use super::lie::{self, Block, Word};
use super::normal::Ctx;
use super::poly::{q, AKey, Abstract, Backend, Poly, SKey, Su2, Q};
use crate::error::{Error, Result};
use num_traits::One;
use rustc_hash::FxHashMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub enum Sx {
    Sym(String),
    List(Vec<Sx>),
}

pub fn read(text: &str) -> Result<Sx> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    let mut pos = 0;
    let sx = read_one(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(Error::Parse(format!(
            "trailing input after expression: `{}`",
            toks[pos]
        )));
    }
    Ok(sx)
}

fn read_one(toks: &[String], pos: &mut usize) -> Result<Sx> {
    let Some(t) = toks.get(*pos) else {
        return Err(Error::Parse("unexpected end of input".into()));
    };
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match toks.get(*pos).map(String::as_str) {
                    None => return Err(Error::Parse("unbalanced `(`".into())),
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sx::List(items));
                    }
                    _ => items.push(read_one(toks, pos)?),
                }
            }
        }
        ")" => Err(Error::Parse("unexpected `)`".into())),
        s => Ok(Sx::Sym(s.to_string())),
    }
}

fn parse_rational(s: &str) -> Option<Q> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.parse().ok()?;
        let d: i64 = d.parse().ok()?;
        if d == 0 {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        s.parse::<i64>().ok().map(Q::from_integer)
    }
}

/// Spacetime index occurrence.
#[derive(Clone, Debug)]
enum Ix {
    Num(u8, bool),
    Label(String, bool),
}

fn parse_ix(s: &str, dim: u8) -> Result<Ix> {
    let (upper, body) = match s.strip_prefix('^') {
        Some(b) => (true, b),
        None => (false, s),
    };
    if body.is_empty() {
        return Err(Error::MalformedIndex(format!("empty index `{s}`")));
    }
    if body.chars().all(|c| c.is_ascii_digit()) {
        let v: u8 = body
            .parse()
            .map_err(|_| Error::MalformedIndex(format!("index `{s}` out of range")))?;
        if v >= dim {
            return Err(Error::MalformedIndex(format!("index {v} not below dimension {dim}")));
        }
        Ok(Ix::Num(v, upper))
    } else if body.chars().all(|c| c.is_alphanumeric() || c == '_') {
        Ok(Ix::Label(body.to_string(), upper))
    } else {
        Err(Error::MalformedIndex(format!("bad spacetime index `{s}`")))
    }
}

/// Labelled intermediate value: free Lie legs carry names.
struct Lp<B: Backend> {
    poly: Poly<B>,
    legs: Vec<String>,
}

/// Hook for operator heads such as `s0`; receives the evaluated argument.
pub type OpHook<'a, B> = dyn Fn(&str, &Poly<B>) -> Option<Result<Poly<B>>> + 'a;

pub struct Parser<'a, B: Backend> {
    pub ctx: &'a Ctx<B>,
    pub ops: Option<&'a OpHook<'a, B>>,
}

type Env = FxHashMap<String, u8>;

impl<'a, B: Backend> Parser<'a, B> {
    pub fn new(ctx: &'a Ctx<B>) -> Self {
        Parser { ctx, ops: None }
    }

    pub fn parse(&self, text: &str) -> Result<Poly<B>> {
        let sx = read(text)?;
        self.eval_top(&sx)
    }

    pub fn eval_top(&self, sx: &Sx) -> Result<Poly<B>> {
        let free = self.free_labels(sx)?;
        if let Some((l, _)) = free.first() {
            return Err(Error::MalformedIndex(format!("free spacetime label `{l}`")));
        }
        let lp = self.eval(sx, &Env::default())?;
        let mut order = Vec::with_capacity(lp.legs.len());
        for k in 0..lp.legs.len() {
            let name = format!("@{k}");
            match lp.legs.iter().position(|l| *l == name) {
                Some(i) => order.push(i),
                None => {
                    return Err(Error::MalformedIndex(format!(
                        "free Lie legs must be @0..@{}; found {:?}",
                        lp.legs.len().saturating_sub(1),
                        lp.legs
                    )))
                }
            }
        }
        Ok(B::permute_free(&lp.poly, &order))
    }

    /// Spacetime labels of `sx` not summed inside it.
    fn free_labels(&self, sx: &Sx) -> Result<Vec<(String, bool)>> {
        let Sx::List(items) = sx else { return Ok(vec![]) };
        let Some(Sx::Sym(head)) = items.first() else {
            return Err(Error::Parse("expected an operator symbol".into()));
        };
        let mut groups: Vec<Vec<(String, bool)>> = Vec::new();
        match head.as_str() {
            "+" | "-" => {
                let mut first: Option<Vec<(String, bool)>> = None;
                for it in &items[1..] {
                    let mut f = self.free_labels(it)?;
                    f.sort();
                    match &first {
                        None => first = Some(f),
                        Some(g) if *g != f => {
                            return Err(Error::MalformedIndex(format!(
                                "sum of terms with free labels {g:?} and {f:?}"
                            )));
                        }
                        _ => {}
                    }
                }
                return Ok(first.unwrap_or_default());
            }
            "*" => {
                for it in &items[1..] {
                    groups.push(self.free_labels(it)?);
                }
            }
            "D" => {
                let n = items.len();
                if n < 3 {
                    return Err(Error::Parse("D needs indices and an expression".into()));
                }
                for it in &items[1..n - 1] {
                    groups.push(self.ix_labels(it)?);
                }
                groups.push(self.free_labels(&items[n - 1])?);
            }
            "f" | "comb" | "delta" | "e" => return Ok(vec![]),
            _ => {
                if Gen::from_name(head).is_some() || head == "g" {
                    let skip = match Gen::from_name(head) {
                        Some(g) if g.adjoint() => 2,
                        _ => 1,
                    };
                    for it in items.iter().skip(skip) {
                        groups.push(self.ix_labels(it)?);
                    }
                } else {
                    // operator with a single argument
                    for it in &items[1..] {
                        groups.push(self.free_labels(it)?);
                    }
                }
            }
        }
        pair_labels(groups).map(|(_, free)| free)
    }

    fn ix_labels(&self, it: &Sx) -> Result<Vec<(String, bool)>> {
        match it {
            Sx::Sym(s) => match parse_ix(s, self.ctx.dim)? {
                Ix::Label(l, up) => Ok(vec![(l, up)]),
                Ix::Num(..) => Ok(vec![]),
            },
            _ => Err(Error::MalformedIndex("index must be a symbol".into())),
        }
    }

    fn ix_value(&self, it: &Sx, env: &Env) -> Result<(u8, bool)> {
        let Sx::Sym(s) = it else {
            return Err(Error::MalformedIndex("index must be a symbol".into()));
        };
        match parse_ix(s, self.ctx.dim)? {
            Ix::Num(v, up) => Ok((v, up)),
            Ix::Label(l, up) => env
                .get(&l)
                .map(|&v| (v, up))
                .ok_or_else(|| Error::MalformedIndex(format!("free spacetime label `{l}`"))),
        }
    }

    fn eval(&self, sx: &Sx, env: &Env) -> Result<Lp<B>> {
        match sx {
            Sx::Sym(s) => {
                let c = parse_rational(s).ok_or_else(|| Error::Parse(format!("unknown symbol `{s}`")))?;
                Ok(Lp {
                    poly: Poly::constant(c),
                    legs: vec![],
                })
            }
            Sx::List(items) => {
                let Some(Sx::Sym(head)) = items.first() else {
                    return Err(Error::Parse("expected an operator symbol".into()));
                };
                // labels summed at this node
                let summed = self.summed_here(sx)?;
                if !summed.is_empty() {
                    let mut total: Option<Lp<B>> = None;
                    let n = summed.len() as u32;
                    for mut code in 0..(self.ctx.dim as u32).pow(n) {
                        let mut e = env.clone();
                        for l in &summed {
                            e.insert(l.clone(), (code % self.ctx.dim as u32) as u8);
                            code /= self.ctx.dim as u32;
                        }
                        let v = self.eval_node(head, items, &e)?;
                        total = Some(match total {
                            None => v,
                            Some(t) => add_lp(t, v)?,
                        });
                    }
                    return Ok(total.unwrap());
                }
                self.eval_node(head, items, env)
            }
        }
    }

    fn summed_here(&self, sx: &Sx) -> Result<Vec<String>> {
        let Sx::List(items) = sx else { return Ok(vec![]) };
        let Some(Sx::Sym(head)) = items.first() else {
            return Ok(vec![]);
        };
        let mut groups = Vec::new();
        match head.as_str() {
            "*" => {
                for it in &items[1..] {
                    groups.push(self.free_labels(it)?);
                }
            }
            "D" => {
                let n = items.len();
                for it in &items[1..n - 1] {
                    groups.push(self.ix_labels(it)?);
                }
                groups.push(self.free_labels(&items[n - 1])?);
            }
            "+" | "-" | "f" | "comb" | "delta" | "e" => return Ok(vec![]),
            _ => {
                if let Some(g) = Gen::from_name(head) {
                    let skip = if g.adjoint() { 2 } else { 1 };
                    for it in items.iter().skip(skip) {
                        groups.push(self.ix_labels(it)?);
                    }
                } else if head == "g" {
                    for it in items.iter().skip(1) {
                        groups.push(self.ix_labels(it)?);
                    }
                } else {
                    return Ok(vec![]);
                }
            }
        }
        pair_labels(groups).map(|(s, _)| s)
    }

    fn eval_node(&self, head: &str, items: &[Sx], env: &Env) -> Result<Lp<B>> {
        let args = &items[1..];
        match head {
            "+" => {
                let mut acc: Option<Lp<B>> = None;
                let mut ghost = None;
                for a in args {
                    let v = self.eval(a, env)?;
                    let g = ghost_of(&v.poly)?;
                    if !v.poly.is_zero() {
                        match ghost {
                            None => ghost = Some(g),
                            Some(h) if h != g => {
                                return Err(Error::MixedGrade(format!("sum of ghost numbers {h} and {g}")));
                            }
                            _ => {}
                        }
                    }
                    acc = Some(match acc {
                        None => v,
                        Some(t) => add_lp(t, v)?,
                    });
                }
                acc.ok_or_else(|| Error::Parse("empty sum".into()))
            }
            "-" => {
                if args.is_empty() {
                    return Err(Error::Parse("empty difference".into()));
                }
                let first = self.eval(&args[0], env)?;
                if args.len() == 1 {
                    return Ok(Lp {
                        poly: first.poly.neg(),
                        legs: first.legs,
                    });
                }
                let mut acc = first;
                for a in &args[1..] {
                    let v = self.eval(a, env)?;
                    if !acc.poly.is_zero() && !v.poly.is_zero() && ghost_of(&acc.poly)? != ghost_of(&v.poly)? {
                        return Err(Error::MixedGrade(
                            "difference of terms with different ghost numbers".into(),
                        ));
                    }
                    acc = add_lp(
                        acc,
                        Lp {
                            poly: v.poly.neg(),
                            legs: v.legs,
                        },
                    )?;
                }
                Ok(acc)
            }
            "*" => {
                let mut acc = Lp {
                    poly: Poly::one(),
                    legs: vec![],
                };
                for a in args {
                    let v = self.eval(a, env)?;
                    acc = Lp {
                        poly: acc.poly.mul(&v.poly),
                        legs: acc.legs.into_iter().chain(v.legs).collect(),
                    };
                }
                contract_pairs(acc)
            }
            "D" => {
                let n = args.len();
                let inner = self.eval(&args[n - 1], env)?;
                let mut p = inner.poly;
                for ix in args[..n - 1].iter().rev() {
                    let (v, up) = self.ix_value(ix, env)?;
                    p = self.ctx.d(v, &p);
                    if up {
                        p = p.scale(q(eta(v)));
                    }
                }
                contract_pairs(Lp {
                    poly: p,
                    legs: inner.legs,
                })
            }
            "f" | "comb" | "delta" => {
                let labels: Vec<String> = args
                    .iter()
                    .map(|a| match a {
                        Sx::Sym(s) => Ok(s.clone()),
                        _ => Err(Error::MalformedIndex("Lie label must be a symbol".into())),
                    })
                    .collect::<Result<_>>()?;
                let need_ok = match head {
                    "f" => labels.len() == 3,
                    "delta" => labels.len() == 2,
                    _ => labels.len() >= 2,
                };
                if !need_ok {
                    return Err(Error::MalformedIndex(format!("wrong number of legs for `{head}`")));
                }
                let n = labels.len() as u8;
                let block = if head == "f" {
                    Block {
                        root: 0,
                        word: lie::bracket(&[1], &[2]),
                    }
                } else {
                    let mut w: Word = Word::from_slice(&[0]);
                    for m in 1..n - 1 {
                        w = lie::bracket(&w, &[m]);
                    }
                    Block { root: n - 1, word: w }
                };
                let poly = B::tensor(&[block], labels.len());
                contract_pairs(Lp { poly, legs: labels })
            }
            "e" => {
                if args.len() != 2 {
                    return Err(Error::MalformedIndex("(e @k %c) takes a leg and a component".into()));
                }
                let (Sx::Sym(l), Sx::Sym(c)) = (&args[0], &args[1]) else {
                    return Err(Error::MalformedIndex("bad component selector".into()));
                };
                let c = parse_comp(c)?;
                let poly = B::fixed_component(None, c).ok_or_else(|| {
                    Error::MalformedIndex(format!("fixed components need the su2 backend ({})", B::NAME))
                })?;
                Ok(Lp {
                    poly,
                    legs: vec![l.clone()],
                })
            }
            "g" => {
                if args.len() != 2 {
                    return Err(Error::MalformedIndex("metric takes two indices".into()));
                }
                let (a, ua) = self.ix_value(&args[0], env)?;
                let (b, ub) = self.ix_value(&args[1], env)?;
                let v = if a != b {
                    0
                } else if ua == ub {
                    eta(a)
                } else {
                    1
                };
                Ok(Lp {
                    poly: Poly::constant(q(v)),
                    legs: vec![],
                })
            }
            _ => {
                if let Some(gen) = Gen::from_name(head) {
                    return self.eval_atom(gen, args, env);
                }
                if args.len() == 1 {
                    if let Some(hook) = self.ops {
                        let inner = self.eval(&args[0], env)?;
                        if let Some(r) = hook(head, &inner.poly) {
                            return Ok(Lp {
                                poly: r?,
                                legs: inner.legs,
                            });
                        }
                    }
                }
                Err(Error::Parse(format!("unknown head `{head}`")))
            }
        }
    }

    fn eval_atom(&self, gen: Gen, args: &[Sx], env: &Env) -> Result<Lp<B>> {
        let lie_slots = usize::from(gen.adjoint());
        if args.len() != lie_slots + gen.nidx() {
            return Err(Error::MalformedIndex(format!(
                "{} takes {} Lie and {} spacetime indices",
                gen.name(),
                lie_slots,
                gen.nidx()
            )));
        }
        let mut idx = Vec::new();
        let mut factor = 1;
        for a in &args[lie_slots..] {
            let (v, up) = self.ix_value(a, env)?;
            if up != gen.upper() {
                factor *= eta(v);
            }
            idx.push(v);
        }
        let atom = Atom::new(gen, &idx);
        if lie_slots == 0 {
            return Ok(Lp {
                poly: self.ctx.nf(&atom).scale(q(factor)),
                legs: vec![],
            });
        }
        let Sx::Sym(label) = &args[0] else {
            return Err(Error::MalformedIndex("Lie label must be a symbol".into()));
        };
        if label.starts_with('%') {
            let c = parse_comp(label)?;
            let nf = self.ctx.nf(&atom);
            let e = B::fixed_component(None, c)
                .ok_or_else(|| Error::MalformedIndex(format!("fixed components need the su2 backend ({})", B::NAME)))?;
            let poly = nf.mul(&e).contract(0, 1).scale(q(factor));
            return Ok(Lp { poly, legs: vec![] });
        }
        Ok(Lp {
            poly: self.ctx.nf(&atom).scale(q(factor)),
            legs: vec![label.clone()],
        })
    }
}

fn parse_comp(s: &str) -> Result<u8> {
    s.strip_prefix('%')
        .and_then(|c| c.parse::<u8>().ok())
        .filter(|&c| c < 3)
        .ok_or_else(|| Error::MalformedIndex(format!("bad component `{s}`")))
}

/// Split label occurrences across groups into summed pairs and free ones.
fn pair_labels(groups: Vec<Vec<(String, bool)>>) -> Result<(Vec<String>, Vec<(String, bool)>)> {
    let mut occ: FxHashMap<String, Vec<bool>> = FxHashMap::default();
    let mut order = Vec::new();
    for g in groups {
        for (l, up) in g {
            if !occ.contains_key(&l) {
                order.push(l.clone());
            }
            occ.entry(l).or_default().push(up);
        }
    }
    let mut summed = Vec::new();
    let mut free = Vec::new();
    for l in order {
        let ups = &occ[&l];
        match ups.len() {
            1 => free.push((l, ups[0])),
            2 if ups[0] != ups[1] => summed.push(l),
            2 => {
                return Err(Error::MalformedIndex(format!(
                    "label `{l}` summed with equal positions"
                )))
            }
            _ => return Err(Error::MalformedIndex(format!("label `{l}` occurs more than twice"))),
        }
    }
    Ok((summed, free))
}

fn add_lp<B: Backend>(a: Lp<B>, b: Lp<B>) -> Result<Lp<B>> {
    let mut sa = a.legs.clone();
    let mut sb = b.legs.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return Err(Error::MalformedIndex(format!(
            "sum of terms with Lie legs {:?} and {:?}",
            a.legs, b.legs
        )));
    }
    let perm: Vec<usize> = a
        .legs
        .iter()
        .map(|l| b.legs.iter().position(|x| x == l).unwrap())
        .collect();
    let bp = B::permute_free(&b.poly, &perm);
    let mut poly = a.poly;
    if poly.is_zero() {
        poly.nfree = bp.nfree;
    }
    poly.add_assign(&bp);
    Ok(Lp { poly, legs: a.legs })
}

fn contract_pairs<B: Backend>(mut lp: Lp<B>) -> Result<Lp<B>> {
    loop {
        let mut found = None;
        'outer: for i in 0..lp.legs.len() {
            for j in i + 1..lp.legs.len() {
                if lp.legs[i] == lp.legs[j] {
                    found = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = found else { break };
        if lp.legs[i].starts_with('@') {
            return Err(Error::MalformedIndex(format!("free leg {} used twice", lp.legs[i])));
        }
        if lp.legs.iter().filter(|l| **l == lp.legs[i]).count() > 2 {
            return Err(Error::MalformedIndex(format!(
                "Lie label `{}` occurs more than twice",
                lp.legs[i]
            )));
        }
        lp.poly = lp.poly.contract(i, j);
        lp.legs.remove(j);
        lp.legs.remove(i);
    }
    Ok(lp)
}

// ------------------------------------------------------------- printing

pub trait Printable: Backend {
    /// Factors of one term other than the coefficient.
    fn factors(k: &Self::Key) -> Vec<String>;
}

fn atom_text(a: &Atom, lie: Option<&str>) -> String {
    let mut s = format!("({}", a.gen.name());
    if let Some(l) = lie {
        s.push(' ');
        s.push_str(l);
    }
    for &i in &a.idx {
        if a.gen.upper() {
            let _ = write!(s, " ^{i}");
        } else {
            let _ = write!(s, " {i}");
        }
    }
    s.push(')');
    if a.ders.is_empty() {
        return s;
    }
    let mut d = String::from("(D");
    for x in &a.ders {
        let _ = write!(d, " {x}");
    }
    let _ = write!(d, " {s})");
    d
}

impl Printable for Su2 {
    fn factors(k: &SKey) -> Vec<String> {
        let mut out: Vec<String> = k
            .atoms
            .iter()
            .map(|a| {
                if a.gen.adjoint() {
                    atom_text(a, Some(&format!("%{}", a.comp)))
                } else {
                    atom_text(a, None)
                }
            })
            .collect();
        for (i, c) in k.free.iter().enumerate() {
            out.push(format!("(e @{i} %{c})"));
        }
        out
    }
}

impl Printable for Abstract {
    fn factors(k: &AKey) -> Vec<String> {
        let n = k.n_adj();
        let label = |l: u8| {
            if (l as usize) < n {
                format!("a{l}")
            } else {
                format!("@{}", l as usize - n)
            }
        };
        let mut out = Vec::new();
        let mut leg = 0u8;
        for a in &k.atoms {
            if a.gen.adjoint() {
                out.push(atom_text(a, Some(&label(leg))));
                leg += 1;
            } else {
                out.push(atom_text(a, None));
            }
        }
        let mut i = 0;
        while i < k.forest.len() {
            let len = k.forest[i] as usize;
            let comb = &k.forest[i + 1..i + 1 + len];
            let mut s = String::from("(comb");
            for &l in comb {
                let _ = write!(s, " {}", label(l));
            }
            s.push(')');
            out.push(s);
            i += len + 1;
        }
        out
    }
}

pub fn print_rational(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn print<B: Printable>(p: &Poly<B>) -> String {
    let terms = p.sorted_terms();
    if terms.is_empty() {
        return "0".into();
    }
    let rendered: Vec<String> = terms
        .into_iter()
        .map(|(k, c)| {
            let mut f = Vec::new();
            if !c.is_one() {
                f.push(print_rational(c));
            }
            f.extend(B::factors(k));
            match f.len() {
                0 => "1".to_string(),
                1 => f.pop().unwrap(),
                _ => format!("(* {})", f.join(" ")),
            }
        })
        .collect();
    if rendered.len() == 1 {
        rendered.into_iter().next().unwrap()
    } else {
        format!("(+ {})", rendered.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::RuleSet;

    fn ctx() -> Ctx<Abstract> {
        Ctx::new(4, RuleSet::NONE)
    }

    #[test]
    fn printed_form_parses_back() {
        let c = ctx();
        for text in [
            "(* 3/2 (phi) (D 0 (phi)))",
            "(* (A I 0) (A I ^0))",
            "(* (Fbar a 0 1) (D 2 (A b 3)) (C c) (f a b c))",
            "(+ (* (C I) (C* I)) (* -1 (B J) (Cbar J)))",
            "(D 1 (A @0 2))",
        ] {
            let p = Parser::new(&c).parse(text).unwrap();
            let again = Parser::new(&c).parse(&print(&p)).unwrap();
            assert_eq!(p, again, "{text}");
        }
    }

    #[test]
    fn odd_square_vanishes() {
        let c = ctx();
        assert!(Parser::new(&c).parse("(* (C I) (C I))").unwrap().is_zero());
        assert!(!Parser::new(&c).parse("(* (B I) (B I))").unwrap().is_zero());
    }

    #[test]
    fn repeated_spacetime_pairs_need_opposite_positions() {
        let c = ctx();
        let lower = Parser::new(&c).parse("(* (D mu (phi)) (D mu (phi)))");
        assert!(lower.is_err());
        let mixed = Parser::new(&c).parse("(* (D mu (phi)) (D ^mu (phi)))").unwrap();
        let summed = Parser::new(&c).parse("(+ (* -1 (D 0 (phi)) (D 0 (phi))) (* (D 1 (phi)) (D 1 (phi))) (* (D 2 (phi)) (D 2 (phi))) (* (D 3 (phi)) (D 3 (phi))))").unwrap();
        assert_eq!(mixed, summed);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let c = ctx();
        for bad in [
            "(* (phi) (phi)",
            ")",
            "(phi))",
            "(A mu)",
            "(* (A @0 0) (C @0))",
            "(nosuch)",
            "(+ (phi) (C I))",
        ] {
            assert!(Parser::new(&c).parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn reader_tokenizes_nested_lists() {
        let sx = read("(a (b c) d)").unwrap();
        let sym = |s: &str| Sx::Sym(s.into());
        assert_eq!(
            sx,
            Sx::List(vec![sym("a"), Sx::List(vec![sym("b"), sym("c")]), sym("d")])
        );
    }
}
