//! Simultaneous unboundedness: `nd` rewriting on finite trees, the grammar
//! view of regular nd-trees, and a saturation procedure deciding
//! `SUP_A` on derivation grammars.
//!
//! `SUP_A(L)` holds when for every `n` some member of `L` has at least `n`
//! occurrences of every letter of `A`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::syntax::{Component, Equation, FiniteTree, Letter, LetterSet, Marks, RegularTree};

pub const ND: &str = "nd";
pub const ND_BOT: &str = "nd_bot";
pub const MAX_SUP_LETTERS: usize = 6;

pub fn is_nd(l: &Letter) -> bool {
    l.is_atom(ND)
}

pub fn is_nd_bot(l: &Letter) -> bool {
    l.is_atom(ND_BOT)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupError {
    #[error("SUP query over {0} letters exceeds the limit of {MAX_SUP_LETTERS}")]
    TooManyLetters(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Production {
    /// Emitted letters (a multiset).
    pub emit: Vec<Letter>,
    pub children: SmallVec<[usize; 2]>,
}

#[derive(Clone, Debug)]
pub struct DerivationGrammar {
    pub names: Vec<String>,
    pub start: usize,
    pub productions: Vec<Vec<Production>>,
}

impl DerivationGrammar {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        self.productions.iter().flatten().flat_map(|p| p.emit.iter().cloned()).collect()
    }

    /// Nonterminals with at least one finite derivation.
    pub fn productive(&self) -> Vec<bool> {
        let mut prod = vec![false; self.len()];
        loop {
            let mut changed = false;
            for x in 0..self.len() {
                if !prod[x] && self.productions[x].iter().any(|p| p.children.iter().all(|&c| prod[c])) {
                    prod[x] = true;
                    changed = true;
                }
            }
            if !changed {
                return prod;
            }
        }
    }
}

impl fmt::Display for DerivationGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start {}", self.names[self.start])?;
        for (x, ps) in self.productions.iter().enumerate() {
            if ps.is_empty() {
                writeln!(f, "{} -> (none)", self.names[x])?;
            }
            for p in ps {
                write!(f, "{} ->", self.names[x])?;
                if p.emit.is_empty() && p.children.is_empty() {
                    f.write_str(" ε")?;
                }
                for l in &p.emit {
                    write!(f, " '{l}'")?;
                }
                for &c in &p.children {
                    write!(f, " {}", self.names[c])?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// One nonterminal per state. `nd` offers each child (an absent child
/// yields the empty tree), `nd_bot` has no productions, other letters
/// emit themselves and keep their present children.
pub fn tree_to_grammar(rt: &RegularTree) -> DerivationGrammar {
    let names = (0..rt.len()).map(|s| rt.name(s).to_string()).collect();
    let productions = rt
        .equations()
        .iter()
        .map(|e| match e {
            Equation::Bot => vec![Production { emit: vec![], children: SmallVec::new() }],
            Equation::Node { letter, .. } if is_nd_bot(letter) => vec![],
            Equation::Node { letter, left, right } if is_nd(letter) => [left, right]
                .into_iter()
                .map(|c| Production { emit: vec![], children: c.iter().copied().collect() })
                .collect(),
            Equation::Node { letter, left, right } => vec![Production {
                emit: vec![letter.clone()],
                children: left.iter().chain(right.iter()).copied().collect(),
            }],
        })
        .collect();
    DerivationGrammar { names, start: rt.root(), productions }
}

/// Result of the saturation: for every nonterminal, the downward-closed
/// family of subsets `B` of the query letters with `SUP_B` on its language.
pub struct SupAnalysis {
    letters: Vec<Letter>,
    family: Vec<u64>,
}

fn down_close(mut f: u64, m: usize) -> u64 {
    for j in 0..m {
        for mask in 0..1usize << m {
            if mask >> j & 1 == 1 && f >> mask & 1 == 1 {
                f |= 1 << (mask ^ (1 << j));
            }
        }
    }
    f
}

fn product(f1: u64, f2: u64, m: usize) -> u64 {
    let mut out = 0u64;
    for b1 in 0..1usize << m {
        if f1 >> b1 & 1 == 0 {
            continue;
        }
        for b2 in 0..1usize << m {
            if f2 >> b2 & 1 == 1 {
                out |= 1 << (b1 | b2);
            }
        }
    }
    out
}

fn tarjan(n: usize, succ: &[Vec<usize>]) -> Vec<usize> {
    // iterative Tarjan; returns component id per vertex
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on[w] = true;
                    call.push((w, 0));
                } else if on[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

impl SupAnalysis {
    pub fn new(g: &DerivationGrammar, letters: &[Letter]) -> Result<SupAnalysis, SupError> {
        let letters: Vec<Letter> = letters.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let m = letters.len();
        if m > MAX_SUP_LETTERS {
            return Err(SupError::TooManyLetters(m));
        }
        let idx: HashMap<&Letter, usize> = letters.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let n = g.len();
        let emit_mask =
            |p: &Production| p.emit.iter().filter_map(|l| idx.get(l)).fold(0usize, |acc, i| acc | 1 << i);
        let productive = g.productive();
        let usable = |p: &Production| p.children.iter().all(|&c| productive[c]);

        // letters occurring in some finite derivation
        let mut occ = vec![0usize; n];
        loop {
            let mut changed = false;
            for x in 0..n {
                if !productive[x] {
                    continue;
                }
                let mut o = occ[x];
                for p in g.productions[x].iter().filter(|p| usable(p)) {
                    o |= emit_mask(p);
                    for &c in &p.children {
                        o |= occ[c];
                    }
                }
                if o != occ[x] {
                    occ[x] = o;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        // context edges X -> Y labelled with what one step around Y can add
        let mut succ = vec![Vec::new(); n];
        let mut edges = Vec::new();
        for x in 0..n {
            if !productive[x] {
                continue;
            }
            for p in g.productions[x].iter().filter(|p| usable(p)) {
                for (j, &y) in p.children.iter().enumerate() {
                    let mut label = emit_mask(p);
                    for (i, &c) in p.children.iter().enumerate() {
                        if i != j {
                            label |= occ[c];
                        }
                    }
                    succ[x].push(y);
                    edges.push((x, y, label));
                }
            }
        }
        let comp = tarjan(n, &succ);
        let ncomp = comp.iter().map(|c| c + 1).max().unwrap_or(0);
        let mut cyclic = vec![false; ncomp];
        let mut pump = vec![0usize; ncomp];
        for &(x, y, label) in &edges {
            if comp[x] == comp[y] {
                cyclic[comp[x]] = true;
                pump[comp[x]] |= label;
            }
        }

        let mut parents = vec![Vec::new(); n];
        for x in 0..n {
            for p in &g.productions[x] {
                for &c in &p.children {
                    parents[c].push(x);
                }
            }
        }
        let mut family = vec![0u64; n];
        let mut queued = vec![true; n];
        let mut work: Vec<usize> = (0..n).rev().collect();
        while let Some(x) = work.pop() {
            queued[x] = false;
            if !productive[x] {
                continue;
            }
            let mut f = family[x] | 1;
            for p in g.productions[x].iter().filter(|p| usable(p)) {
                let mut acc = 1u64;
                for &c in &p.children {
                    acc = product(acc, family[c], m);
                }
                f |= acc;
            }
            let c = comp[x];
            if cyclic[c] {
                let mut grown = f;
                for b in 0..1usize << m {
                    if f >> b & 1 == 1 {
                        grown |= 1 << (b | pump[c]);
                    }
                }
                f = grown;
            }
            let f = down_close(f, m);
            if f != family[x] {
                family[x] = f;
                for &p in &parents[x] {
                    if !queued[p] {
                        queued[p] = true;
                        work.push(p);
                    }
                }
                if !queued[x] {
                    queued[x] = true;
                    work.push(x);
                }
            }
        }
        Ok(SupAnalysis { letters, family })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    fn mask(&self, set: &LetterSet) -> Option<usize> {
        let mut m = 0;
        for l in set {
            m |= 1 << self.letters.iter().position(|x| x == l)?;
        }
        Some(m)
    }

    /// `SUP_set` for the language of nonterminal `x`. Letters outside the
    /// analysed alphabet never occur, so such queries are false.
    pub fn holds(&self, x: usize, set: &LetterSet) -> bool {
        match self.mask(set) {
            Some(m) => self.family[x] >> m & 1 == 1,
            None => false,
        }
    }
}

pub fn decide_sup(g: &DerivationGrammar, a: &LetterSet) -> Result<bool, SupError> {
    let letters: Vec<Letter> = a.iter().cloned().collect();
    let an = SupAnalysis::new(g, &letters)?;
    Ok(an.holds(g.start, a))
}

/// Marks every non-nd state with the members of `family` for which SUP
/// holds on the language of its subtree.
pub fn sup_reflect(rt: &RegularTree, family: &BTreeSet<LetterSet>) -> Result<RegularTree, SupError> {
    let letters: Vec<Letter> = family.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let g = tree_to_grammar(rt);
    let an = SupAnalysis::new(&g, &letters)?;
    Ok(rt.map_letters(|s, l| {
        if is_nd(l) || is_nd_bot(l) {
            return l.clone();
        }
        let marks: Marks = family.iter().filter(|a| an.holds(s, a)).cloned().collect();
        l.push(Component::Marks(Arc::new(marks)))
    }))
}

/// Members of `L(t)`, at most `max_count` of them.
#[derive(Clone, Debug)]
pub struct NdLanguage {
    pub trees: BTreeSet<FiniteTree>,
    pub complete: bool,
}

pub fn nd_language(t: &FiniteTree, max_count: usize) -> NdLanguage {
    let mut memo: HashMap<usize, Vec<FiniteTree>> = HashMap::new();
    let mut complete = true;
    fn go(
        t: &FiniteTree,
        cap: usize,
        memo: &mut HashMap<usize, Vec<FiniteTree>>,
        complete: &mut bool,
    ) -> Vec<FiniteTree> {
        let Some(node) = t.0.as_ref() else { return vec![FiniteTree::empty()] };
        let key = Arc::as_ptr(node) as usize;
        if let Some(v) = memo.get(&key) {
            return v.clone();
        }
        let mut out: Vec<FiniteTree> = if is_nd_bot(&node.letter) {
            vec![]
        } else if is_nd(&node.letter) {
            let mut set: BTreeSet<FiniteTree> = go(&node.left, cap, memo, complete).into_iter().collect();
            set.extend(go(&node.right, cap, memo, complete));
            set.into_iter().collect()
        } else {
            let ls = go(&node.left, cap, memo, complete);
            let rs = go(&node.right, cap, memo, complete);
            let mut v = Vec::new();
            'outer: for l in &ls {
                for r in &rs {
                    if v.len() >= cap {
                        *complete = false;
                        break 'outer;
                    }
                    v.push(FiniteTree::node(node.letter.clone(), l.clone(), r.clone()));
                }
            }
            v
        };
        if out.len() > cap {
            out.truncate(cap);
            *complete = false;
        }
        memo.insert(key, out.clone());
        out
    }
    let trees = go(t, max_count, &mut memo, &mut complete).into_iter().collect();
    NdLanguage { trees, complete }
}

/// Count vectors `(#_{l}(V))_{l ∈ letters}` over `V ∈ L(t)`, each count
/// capped at `cap`. Works on shared (DAG) trees without unfolding them.
pub fn count_profiles(t: &FiniteTree, letters: &[Letter], cap: usize) -> BTreeSet<Vec<usize>> {
    let mut memo: HashMap<usize, BTreeSet<Vec<usize>>> = HashMap::new();
    fn go(
        t: &FiniteTree,
        letters: &[Letter],
        cap: usize,
        memo: &mut HashMap<usize, BTreeSet<Vec<usize>>>,
    ) -> BTreeSet<Vec<usize>> {
        let Some(node) = t.0.as_ref() else { return [vec![0; letters.len()]].into() };
        let key = Arc::as_ptr(node) as usize;
        if let Some(v) = memo.get(&key) {
            return v.clone();
        }
        let out = if is_nd_bot(&node.letter) {
            BTreeSet::new()
        } else if is_nd(&node.letter) {
            let mut s = go(&node.left, letters, cap, memo);
            s.extend(go(&node.right, letters, cap, memo));
            s
        } else {
            let own: Vec<usize> = letters.iter().map(|l| usize::from(*l == node.letter)).collect();
            let ls = go(&node.left, letters, cap, memo);
            let rs = go(&node.right, letters, cap, memo);
            let mut s = BTreeSet::new();
            for l in &ls {
                for r in &rs {
                    s.insert((0..letters.len()).map(|i| (own[i] + l[i] + r[i]).min(cap)).collect());
                }
            }
            s
        };
        memo.insert(key, out.clone());
        out
    }
    go(t, letters, cap, &mut memo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_regular_tree, parse_tree};

    fn set(ls: &[&str]) -> LetterSet {
        ls.iter().map(|l| Letter::atom(l)).collect()
    }

    #[test]
    fn nd_language_examples() {
        let t = parse_tree("a(b,.)").unwrap();
        assert_eq!(nd_language(&t, 100).trees, [t].into());
        let l = nd_language(&parse_tree("nd(a,b)").unwrap(), 100);
        let got: Vec<String> = l.trees.iter().map(|t| t.to_string()).collect();
        assert_eq!(got, ["a", "b"]);
        assert!(nd_language(&parse_tree("d(nd_bot,.)").unwrap(), 100).trees.is_empty());
        let l = nd_language(&parse_tree("nd(a,.)").unwrap(), 100);
        assert!(l.trees.contains(&FiniteTree::empty()));
    }

    #[test]
    fn language_cap() {
        let t = parse_tree("a(nd(b,c),nd(b,c))").unwrap();
        let l = nd_language(&t, 3);
        assert!(!l.complete);
        assert_eq!(l.trees.len(), 3);
        assert!(nd_language(&t, 4).complete);
    }

    #[test]
    fn branch_without_nd_is_unproductive() {
        let g = tree_to_grammar(&parse_regular_tree("root q; q = a(., q);").unwrap());
        assert!(!g.productive()[g.start]);
        assert!(!decide_sup(&g, &set(&[])).unwrap());
    }

    #[test]
    fn combs() {
        let abc = parse_regular_tree("root q; q = nd(s, e); s = a(., t); t = b(., q); e = c(.,.);").unwrap();
        let g = tree_to_grammar(&abc);
        assert!(decide_sup(&g, &set(&["a", "b"])).unwrap());
        assert!(!decide_sup(&g, &set(&["c"])).unwrap());
        assert!(decide_sup(&g, &set(&[])).unwrap());
        let ac = parse_regular_tree("root q; q = nd(p, e); p = a(., q); e = c(.,.);").unwrap();
        let g = tree_to_grammar(&ac);
        assert!(decide_sup(&g, &set(&["a"])).unwrap());
        assert!(!decide_sup(&g, &set(&["a", "c"])).unwrap());
        assert_eq!(g.to_string(), "start q\nq -> p\nq -> e\np -> 'a' q\ne -> 'c'\n");
    }

    #[test]
    fn separate_branches_do_not_combine() {
        // a^n c or b^n c, never both large
        let t = parse_regular_tree(
            "root r; r = nd(p, q); p = nd(pa, e); pa = a(., p); q = nd(qb, e); qb = b(., q); e = c(.,.);",
        )
        .unwrap();
        let g = tree_to_grammar(&t);
        assert!(decide_sup(&g, &set(&["a"])).unwrap());
        assert!(decide_sup(&g, &set(&["b"])).unwrap());
        assert!(!decide_sup(&g, &set(&["a", "b"])).unwrap());
    }

    #[test]
    fn reflect_marks() {
        let t = parse_regular_tree("root q; q = nd(s, e); s = a(., t); t = b(., q); e = c(.,.);").unwrap();
        let fam: BTreeSet<LetterSet> = [set(&["a"]), set(&["b"]), set(&["a", "b"])].into();
        let r = sup_reflect(&t, &fam).unwrap();
        assert_eq!(r.letter(r.root()).unwrap().to_string(), "nd");
        let s = (0..r.len()).find(|&s| r.letter(s).unwrap().base() == "a").unwrap();
        assert_eq!(r.letter(s).unwrap().to_string(), "a|{a;a,b;b}");
        let e = (0..r.len()).find(|&s| r.letter(s).unwrap().base() == "c").unwrap();
        assert_eq!(r.letter(e).unwrap().to_string(), "c|{}");
    }

    #[test]
    fn too_many_letters() {
        let g = tree_to_grammar(&parse_regular_tree("root q; q = a(.,.);").unwrap());
        let big = set(&["a", "b", "c", "d", "e", "f", "g"]);
        assert_eq!(decide_sup(&g, &big), Err(SupError::TooManyLetters(7)));
    }

    #[test]
    fn profiles_match_language() {
        let t = parse_regular_tree("root q; q = nd(s, e); s = a(., t); t = b(., q); e = c(.,.);")
            .unwrap()
            .truncate(9);
        let ls = [Letter::atom("a"), Letter::atom("b")];
        let direct: BTreeSet<Vec<usize>> =
            nd_language(&t, 1000).trees.iter().map(|v| ls.iter().map(|l| v.count(l)).collect()).collect();
        assert_eq!(count_profiles(&t, &ls, 100), direct);
    }
}
