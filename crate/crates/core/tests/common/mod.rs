//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use rand::Rng;
use wmsotup::corpus::CorpusRng;
use wmsotup::sup::{count_profiles, DerivationGrammar, ND, ND_BOT};
use wmsotup::syntax::{Address, Equation, LetterSet};
use wmsotup::{FiniteTree, Letter, RegularTree, Valuation, Var};

pub fn atoms(names: &[&str]) -> Vec<Letter> {
    names.iter().map(|n| Letter::atom(n)).collect()
}

/// All subsets of `letters`.
pub fn subsets(letters: &[Letter]) -> Vec<LetterSet> {
    (0..1usize << letters.len())
        .map(|m| (0..letters.len()).filter(|i| m >> i & 1 == 1).map(|i| letters[i].clone()).collect())
        .collect()
}

/// Finite nd-trees: every child points to a later state, so the
/// unfolding is ⊥-grounded.
pub fn random_acyclic_nd(rng: &mut CorpusRng, letters: &[Letter], max_states: usize) -> RegularTree {
    let n = rng.gen_range(1..=max_states);
    let eqs = (0..n)
        .map(|i| {
            let roll = rng.gen_range(0..20);
            let letter = if roll < 8 {
                Letter::atom(ND)
            } else if roll == 8 {
                Letter::atom(ND_BOT)
            } else {
                letters[rng.gen_range(0..letters.len())].clone()
            };
            let child = |rng: &mut CorpusRng| {
                if i + 1 == n || rng.gen_bool(0.3) {
                    None
                } else {
                    Some(rng.gen_range(i + 1..n))
                }
            };
            let (left, right) = (child(rng), child(rng));
            Equation::Node { letter, left, right }
        })
        .collect();
    RegularTree::from_eqs(eqs, 0)
}

/// Largest `n <= cap` such that some member of the language of the
/// depth-`depth` unfolding (cut branches become `nd_bot`, so no new
/// members appear) has at least `n` of every letter of `a`. `None` when
/// that language is empty.
pub fn truncation_lower_bound(rt: &RegularTree, a: &LetterSet, depth: usize, cap: usize) -> Option<usize> {
    let t = rt.truncate_with(depth, Some(&Letter::atom(ND_BOT)));
    let letters: Vec<Letter> = a.iter().cloned().collect();
    let profiles = count_profiles(&t, &letters, cap);
    profiles.iter().map(|p| p.iter().copied().min().unwrap_or(cap)).max()
}

struct DTree {
    nt: usize,
    emit: u8,
    size: usize,
    children: Vec<Rc<DTree>>,
}

/// SUP by explicit cycle search: enumerate derivation trees of at most
/// `max_size` productions; `A` is unbounded when one derivation has, for
/// every `a ∈ A`, a nonterminal repeated on a root-to-leaf path whose
/// context (between the two occurrences) emits `a`. Every such context
/// can be pumped independently.
pub fn cycle_search_sup(g: &DerivationGrammar, a: &LetterSet, max_size: usize) -> bool {
    let idx: BTreeMap<&Letter, usize> = a.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let goal: u8 = ((1u16 << a.len()) - 1) as u8;
    let mut memo: HashMap<(usize, usize), Rc<Vec<Rc<DTree>>>> = HashMap::new();
    let roots = derivations(g, &idx, g.start, max_size, &mut memo);
    roots.iter().any(|d| covered(d) & goal == goal)
}

fn derivations(
    g: &DerivationGrammar,
    idx: &BTreeMap<&Letter, usize>,
    x: usize,
    budget: usize,
    memo: &mut HashMap<(usize, usize), Rc<Vec<Rc<DTree>>>>,
) -> Rc<Vec<Rc<DTree>>> {
    if let Some(v) = memo.get(&(x, budget)) {
        return v.clone();
    }
    let mut out = Vec::new();
    if budget > 0 {
        for p in &g.productions[x] {
            let emit = p.emit.iter().filter_map(|l| idx.get(l)).fold(0u8, |m, &i| m | 1 << i);
            match p.children.as_slice() {
                [] => out.push(Rc::new(DTree { nt: x, emit, size: 1, children: vec![] })),
                [c] => {
                    for t in derivations(g, idx, *c, budget - 1, memo).iter() {
                        out.push(Rc::new(DTree { nt: x, emit, size: 1 + t.size, children: vec![t.clone()] }));
                    }
                }
                [c1, c2] => {
                    if budget < 3 {
                        continue;
                    }
                    let left = derivations(g, idx, *c1, budget - 2, memo);
                    for l in left.iter() {
                        for r in derivations(g, idx, *c2, budget - 1 - l.size, memo).iter() {
                            out.push(Rc::new(DTree {
                                nt: x,
                                emit,
                                size: 1 + l.size + r.size,
                                children: vec![l.clone(), r.clone()],
                            }));
                        }
                    }
                }
                _ => unreachable!("productions have at most two children"),
            }
        }
    }
    let out = Rc::new(out);
    memo.insert((x, budget), out.clone());
    out
}

/// Letters emitted in some pumpable context of `d`.
fn covered(d: &DTree) -> u8 {
    // flatten: node i has nonterminal, emission, and subtree as a bitmask
    let mut nts = Vec::new();
    let mut emits = Vec::new();
    let mut subs: Vec<u64> = Vec::new();
    fn walk(d: &DTree, nts: &mut Vec<usize>, emits: &mut Vec<u8>, subs: &mut Vec<u64>) -> u64 {
        let me = nts.len();
        nts.push(d.nt);
        emits.push(d.emit);
        subs.push(0);
        let mut s = 1u64 << me;
        for c in &d.children {
            s |= walk(c, nts, emits, subs);
        }
        subs[me] = s;
        s
    }
    walk(d, &mut nts, &mut emits, &mut subs);
    let mut out = 0u8;
    for u in 0..nts.len() {
        for v in 0..nts.len() {
            if u != v && nts[u] == nts[v] && subs[u] >> v & 1 == 1 {
                let ctx = subs[u] & !subs[v];
                for (w, &e) in emits.iter().enumerate() {
                    if ctx >> w & 1 == 1 {
                        out |= e;
                    }
                }
            }
        }
    }
    out
}

/// Every assignment of subsets of the domain of `t` to `xs`.
pub fn all_valuations(t: &FiniteTree, xs: &[Var]) -> Vec<Valuation> {
    let addrs: Vec<Address> = t.addresses();
    let n = addrs.len();
    let mut out = vec![Valuation::new()];
    for x in xs {
        let mut next = Vec::with_capacity(out.len() << n);
        for v in &out {
            for m in 0..1usize << n {
                let set: BTreeSet<Address> = (0..n).filter(|i| m >> i & 1 == 1).map(|i| addrs[i].clone()).collect();
                let mut w = v.clone();
                w.insert(x.clone(), set);
                next.push(w);
            }
        }
        out = next;
    }
    out
}
