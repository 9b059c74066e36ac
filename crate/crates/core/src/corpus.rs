//! Seeded generators for formulas, trees, regular trees, nd-trees and
//! transducers, plus exhaustive enumeration of small finite trees.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sup::{ND, ND_BOT};
use crate::syntax::{Address, Dir, Equation, FiniteTree, Formula, Letter, Node, RegularTree, Valuation, Var};
use crate::transducer::{Rhs, Transducer};

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All finite trees with at most `max_nodes` nodes over `letters`, the
/// empty tree included, smallest first.
pub fn all_trees(max_nodes: usize, letters: &[Letter]) -> Vec<FiniteTree> {
    let mut by_size: Vec<Vec<FiniteTree>> = vec![vec![FiniteTree::empty()]];
    for n in 1..=max_nodes {
        let mut out = Vec::new();
        for l in 0..n {
            let r = n - 1 - l;
            for a in letters {
                for lt in &by_size[l] {
                    for rt in &by_size[r] {
                        out.push(FiniteTree::node(a.clone(), lt.clone(), rt.clone()));
                    }
                }
            }
        }
        by_size.push(out);
    }
    by_size.into_iter().flatten().collect()
}

#[derive(Clone, Debug)]
pub struct FormulaConfig {
    pub letters: Vec<String>,
    /// Variable pool; quantifiers draw bound names from it.
    pub vars: Vec<String>,
    pub max_qdepth: usize,
    pub max_k: usize,
    /// Maximum number of connectives and atoms.
    pub max_size: usize,
    /// Cap on free plus bound variables at every quantifier.
    pub scope_cap: usize,
    pub sentence: bool,
}

impl FormulaConfig {
    pub fn small() -> FormulaConfig {
        FormulaConfig {
            letters: vec!["a".into(), "b".into()],
            vars: vec!["X".into(), "Y".into(), "Z".into()],
            max_qdepth: 3,
            max_k: 2,
            max_size: 9,
            scope_cap: 2,
            sentence: false,
        }
    }
}

/// Largest `|free| + |bound|` over the quantifiers of `f`.
pub fn scope_width(f: &Formula) -> usize {
    let mut w = 0;
    f.visit(&mut |g| match g.node() {
        Node::Efin(_, _) => w = w.max(g.free_vars().len() + 1),
        Node::U(xs, _) => w = w.max(g.free_vars().len() + xs.len()),
        _ => {}
    });
    w
}

fn gen_formula(rng: &mut CorpusRng, cfg: &FormulaConfig, scope: &[String], qdepth: usize, size: usize) -> Formula {
    let pick = |rng: &mut CorpusRng, from: &[String]| from.choose(rng).unwrap().clone();
    let must_quantify = scope.is_empty() && cfg.sentence;
    let atom_ok = !must_quantify && size <= 1 || (!must_quantify && rng.gen_bool(0.3));
    if atom_ok || (qdepth == 0 && size <= 2 && !must_quantify) {
        let vars: &[String] = if scope.is_empty() || (!cfg.sentence && rng.gen_bool(0.2)) { &cfg.vars } else { scope };
        let x = pick(rng, vars);
        let y = pick(rng, vars);
        return match rng.gen_range(0..4) {
            0 | 1 => Formula::letter(&pick(rng, &cfg.letters), &x),
            2 => Formula::child(if rng.gen_bool(0.5) { Dir::L } else { Dir::R }, &x, &y),
            _ => Formula::subset(&x, &y),
        };
    }
    let choice = if qdepth > 0 && (must_quantify || rng.gen_bool(0.45)) { 2 } else { rng.gen_range(0..2) };
    match choice {
        0 if size >= 2 => Formula::not(gen_formula(rng, cfg, scope, qdepth, size - 1)),
        0 | 1 if size >= 3 => {
            let l = rng.gen_range(1..size - 1);
            let a = gen_formula(rng, cfg, scope, qdepth, l);
            let b = gen_formula(rng, cfg, scope, qdepth, size - 1 - l);
            Formula::and(a, b)
        }
        2 if qdepth > 0 => {
            // 0 means Efin; wide U tuples are the costly case for brute force
            let k = match rng.gen_range(0..20) {
                0..=10 => 0,
                11..=16 => 1.min(cfg.max_k),
                _ => cfg.max_k,
            };
            let mut pool = cfg.vars.clone();
            pool.shuffle(rng);
            let bound: Vec<String> = pool.into_iter().take(k.max(1)).collect();
            let mut inner: Vec<String> = scope.iter().filter(|v| !bound.contains(v)).cloned().collect();
            inner.extend(bound.iter().cloned());
            let body = gen_formula(rng, cfg, &inner, qdepth - 1, size.saturating_sub(1).max(1));
            if k == 0 {
                Formula::efin(&bound[0], body)
            } else {
                let vars: Vec<Var> = bound.iter().map(|v| Var::new(v)).collect();
                Formula::u_vars(vars, body).expect("distinct bound variables")
            }
        }
        _ => gen_formula(rng, cfg, scope, qdepth, 1),
    }
}

/// A random formula within the configuration's bounds.
pub fn random_formula(rng: &mut CorpusRng, cfg: &FormulaConfig) -> Formula {
    loop {
        let size = rng.gen_range(1..=cfg.max_size);
        let f = gen_formula(rng, cfg, &[], cfg.max_qdepth, size);
        if f.quantifier_depth() <= cfg.max_qdepth && scope_width(&f) <= cfg.scope_cap && (!cfg.sentence || f.is_sentence())
        {
            return f;
        }
    }
}

/// `count` distinct formulas, with at least one of every quantifier depth
/// up to the maximum when attainable.
pub fn formula_corpus(seed: u64, cfg: &FormulaConfig, count: usize) -> Vec<Formula> {
    let mut r = rng(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut depths = vec![0usize; cfg.max_qdepth + 1];
    let quota = count / (2 * (cfg.max_qdepth + 1)).max(1);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        let f = random_formula(&mut r, cfg);
        let d = f.quantifier_depth();
        // keep drawing until every depth has its quota, then accept anything
        let starved = depths.iter().any(|&c| c < quota) && depths[d] >= quota && tries < 50 * count;
        if starved || !seen.insert(f.to_string()) {
            continue;
        }
        depths[d] += 1;
        out.push(f);
    }
    out
}

/// Random valuation of `vars` over the domain of `t`.
pub fn random_valuation(rng: &mut CorpusRng, vars: &[Var], t: &FiniteTree) -> Valuation {
    let addrs: Vec<Address> = t.addresses();
    vars.iter()
        .map(|x| {
            let set = addrs.iter().filter(|_| rng.gen_bool(0.35)).cloned().collect();
            (x.clone(), set)
        })
        .collect()
}

pub fn random_tree(rng: &mut CorpusRng, letters: &[Letter], max_nodes: usize) -> FiniteTree {
    let n = rng.gen_range(0..=max_nodes);
    gen_tree(rng, letters, n)
}

fn gen_tree(rng: &mut CorpusRng, letters: &[Letter], n: usize) -> FiniteTree {
    if n == 0 {
        return FiniteTree::empty();
    }
    let l = rng.gen_range(0..n);
    let a = letters.choose(rng).unwrap().clone();
    let left = gen_tree(rng, letters, l);
    let right = gen_tree(rng, letters, n - 1 - l);
    FiniteTree::node(a, left, right)
}

/// Random regular tree with at most `max_states` states; each child is
/// absent with probability `bot`.
pub fn random_regular(rng: &mut CorpusRng, letters: &[Letter], max_states: usize, bot: f64) -> RegularTree {
    let n = rng.gen_range(1..=max_states);
    let child = |rng: &mut CorpusRng| if rng.gen_bool(bot) { None } else { Some(rng.gen_range(0..n)) };
    let eqs = (0..n)
        .map(|_| {
            let letter = letters.choose(rng).unwrap().clone();
            Equation::Node { letter, left: child(rng), right: child(rng) }
        })
        .collect();
    RegularTree::from_eqs(eqs, 0)
}

/// Random regular tree whose letters also include `nd` and sometimes
/// `nd_bot`, the shape read as a derivation grammar by the SUP module.
pub fn random_nd_tree(rng: &mut CorpusRng, letters: &[Letter], max_states: usize) -> RegularTree {
    let nd = Letter::atom(ND);
    let nd_bot = Letter::atom(ND_BOT);
    let n = rng.gen_range(1..=max_states);
    let eqs = (0..n)
        .map(|i| {
            let roll = rng.gen_range(0..20);
            let letter = if i == 0 || roll < 8 {
                nd.clone()
            } else if roll == 8 {
                nd_bot.clone()
            } else {
                letters.choose(rng).unwrap().clone()
            };
            let child = |rng: &mut CorpusRng| if rng.gen_bool(0.3) { None } else { Some(rng.gen_range(0..n)) };
            Equation::Node { letter, left: child(rng), right: child(rng) }
        })
        .collect();
    RegularTree::from_eqs(eqs, 0)
}

/// Random valid transducer. Bare state leaves at rule roots only call
/// later states, so there is no epsilon cycle.
pub fn random_transducer(
    rng: &mut CorpusRng,
    input: &[Letter],
    output: &[Letter],
    max_states: usize,
) -> Transducer {
    let n = rng.gen_range(1..=max_states);
    let states = (0..n).map(|i| format!("q{i}")).collect();
    let mut t = Transducer::new(states, 0, input.iter().cloned().collect());
    for q in 0..n {
        for a in input {
            let rhs = if q + 1 < n && rng.gen_bool(0.2) {
                let d = if rng.gen_bool(0.5) { Dir::L } else { Dir::R };
                Rhs::call(rng.gen_range(q + 1..n), d)
            } else {
                let a = output.choose(rng).unwrap().clone();
                Rhs::out(a, gen_rhs(rng, output, n, 2, true), gen_rhs(rng, output, n, 2, true))
            };
            t.set(q, Some(a.clone()), rhs);
        }
        t.set(q, None, gen_rhs(rng, output, n, 2, false));
    }
    t
}

fn gen_rhs(rng: &mut CorpusRng, output: &[Letter], n: usize, budget: usize, calls: bool) -> Rhs {
    if budget == 0 || rng.gen_bool(0.3) {
        return if calls && rng.gen_bool(0.7) {
            Rhs::call(rng.gen_range(0..n), if rng.gen_bool(0.5) { Dir::L } else { Dir::R })
        } else {
            Rhs::bot()
        };
    }
    let a = output.choose(rng).unwrap().clone();
    let l = gen_rhs(rng, output, n, budget - 1, calls);
    let r = gen_rhs(rng, output, n, budget - 1, calls);
    Rhs::out(a, l, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts() {
        let ab = [Letter::atom("a"), Letter::atom("b")];
        assert_eq!(all_trees(6, &ab).len(), 10067);
        assert_eq!(all_trees(2, &ab).len(), 1 + 2 + 8);
    }

    #[test]
    fn formulas_respect_bounds() {
        let cfg = FormulaConfig::small();
        for f in formula_corpus(7, &cfg, 100) {
            assert!(f.quantifier_depth() <= 3);
            assert!(scope_width(&f) <= 2);
            assert!(f.all_vars().len() <= 3);
        }
        let cfg = FormulaConfig { sentence: true, ..FormulaConfig::small() };
        assert!(formula_corpus(3, &cfg, 50).iter().all(|f| f.is_sentence()));
    }

    #[test]
    fn transducers_validate() {
        let ab = [Letter::atom("a"), Letter::atom("b")];
        let mut r = rng(1);
        for _ in 0..100 {
            random_transducer(&mut r, &ab, &ab, 3).validate().unwrap();
        }
    }

    #[test]
    fn seeded() {
        let ab = [Letter::atom("a"), Letter::atom("b")];
        let a = random_regular(&mut rng(5), &ab, 4, 0.3).to_string();
        let b = random_regular(&mut rng(5), &ab, 4, 0.3).to_string();
        assert_eq!(a, b);
    }
}
