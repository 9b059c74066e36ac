//! Deterministic top-down tree transducers, their application to finite
//! and regular trees, the type-checking transducer `F`, the cleanup
//! transducer, and fixed-path label reflections.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sup::{ND, ND_BOT};
use crate::syntax::lex::Cursor;
use crate::syntax::{Component, Dir, Equation, FiniteTree, Formula, Letter, LetterSet, ParseError, RegularTree, StateId, Var};
use crate::types::{Composer, PhiType, TypeError};

/// Separator letter inserted by `F` (printed `hash`).
pub const HASH: &str = "hash";
/// Root letter of each type-checking copy (printed `query`).
pub const QUERY: &str = "query";

/// Letter counted for variable `x` in the type-checking copies.
pub fn var_marker(x: &Var) -> Letter {
    Letter::atom(&format!("mark_{x}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransducerError {
    #[error("state leaf at an internal position in delta({state}, {letter})")]
    StateAtInternal { state: String, letter: String },
    #[error("state leaf in delta({state}, bot)")]
    StateInBot { state: String },
    #[error("epsilon cycle through states {0:?}")]
    EpsilonCycle(Vec<String>),
    #[error("missing transition delta({state}, {letter})")]
    Missing { state: String, letter: String },
    #[error("letter {0} is not in the input alphabet")]
    NotInAlphabet(String),
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum RhsLabel {
    Out(Letter),
    Call(usize, Dir),
}

#[derive(PartialEq, Eq, Hash, Debug)]
pub struct RhsNode {
    pub label: RhsLabel,
    pub left: Rhs,
    pub right: Rhs,
}

/// Right-hand side of a rule: a finite tree over output letters and
/// state leaves `(q,d)`. Subtrees may be shared.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Rhs(pub Option<Arc<RhsNode>>);

impl Rhs {
    pub fn bot() -> Rhs {
        Rhs(None)
    }

    pub fn out(l: Letter, left: Rhs, right: Rhs) -> Rhs {
        Rhs(Some(Arc::new(RhsNode { label: RhsLabel::Out(l), left, right })))
    }

    pub fn leaf(l: Letter) -> Rhs {
        Rhs::out(l, Rhs::bot(), Rhs::bot())
    }

    pub fn call(q: usize, d: Dir) -> Rhs {
        Rhs(Some(Arc::new(RhsNode { label: RhsLabel::Call(q, d), left: Rhs::bot(), right: Rhs::bot() })))
    }

    pub fn node(&self) -> Option<&RhsNode> {
        self.0.as_deref()
    }

    fn visit(&self, f: &mut impl FnMut(&RhsNode)) {
        if let Some(n) = self.node() {
            f(n);
            n.left.visit(f);
            n.right.visit(f);
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, names: &[String]) -> fmt::Result {
        match self.node() {
            None => f.write_str("."),
            Some(n) => {
                match &n.label {
                    RhsLabel::Out(l) => write!(f, "{l}")?,
                    RhsLabel::Call(q, d) => write!(f, "({},{d})", names[*q])?,
                }
                if n.left.0.is_some() || n.right.0.is_some() {
                    f.write_str("(")?;
                    n.left.write(f, names)?;
                    f.write_str(",")?;
                    n.right.write(f, names)?;
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transducer {
    states: Vec<String>,
    initial: usize,
    input: BTreeSet<Letter>,
    delta: HashMap<(usize, Option<Letter>), Rhs>,
}

impl Transducer {
    pub fn new(states: Vec<String>, initial: usize, input: BTreeSet<Letter>) -> Transducer {
        Transducer { states, initial, input, delta: HashMap::new() }
    }

    pub fn set(&mut self, q: usize, a: Option<Letter>, rhs: Rhs) {
        self.delta.insert((q, a), rhs);
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn input_alphabet(&self) -> &BTreeSet<Letter> {
        &self.input
    }

    pub fn rule(&self, q: usize, a: Option<&Letter>) -> Option<&Rhs> {
        self.delta.get(&(q, a.cloned()))
    }

    pub fn output_alphabet(&self) -> BTreeSet<Letter> {
        let mut out = BTreeSet::new();
        for rhs in self.delta.values() {
            rhs.visit(&mut |n| {
                if let RhsLabel::Out(l) = &n.label {
                    out.insert(l.clone());
                }
            });
        }
        out
    }

    /// Identity on the given alphabet.
    pub fn identity(alphabet: BTreeSet<Letter>) -> Transducer {
        Transducer::relabel(alphabet, |l| l.clone())
    }

    /// One-state transducer relabeling each letter.
    pub fn relabel(alphabet: BTreeSet<Letter>, f: impl Fn(&Letter) -> Letter) -> Transducer {
        let mut t = Transducer::new(vec!["q".into()], 0, alphabet.clone());
        for a in alphabet {
            let b = f(&a);
            t.set(0, Some(a), Rhs::out(b, Rhs::call(0, Dir::L), Rhs::call(0, Dir::R)));
        }
        t.set(0, None, Rhs::bot());
        t
    }

    pub fn validate(&self) -> Result<(), TransducerError> {
        let name = |q: usize| self.states[q].clone();
        let mut rules: Vec<(&(usize, Option<Letter>), &Rhs)> = self.delta.iter().collect();
        rules.sort_by(|a, b| a.0.cmp(b.0));
        for ((q, a), rhs) in &rules {
            let mut internal = false;
            let mut any = false;
            rhs.visit(&mut |n| {
                if let RhsLabel::Call(..) = n.label {
                    any = true;
                    if n.left.0.is_some() || n.right.0.is_some() {
                        internal = true;
                    }
                }
            });
            match a {
                Some(l) if internal => {
                    return Err(TransducerError::StateAtInternal { state: name(*q), letter: l.to_string() })
                }
                None if any => return Err(TransducerError::StateInBot { state: name(*q) }),
                _ => {}
            }
        }
        // epsilon edges: delta(q,a) is a bare state leaf
        let n = self.states.len();
        let mut succ = vec![BTreeSet::new(); n];
        for ((q, _), rhs) in &rules {
            if let Some(RhsNode { label: RhsLabel::Call(r, _), .. }) = rhs.node() {
                succ[*q].insert(*r);
            }
        }
        let mut color = vec![0u8; n];
        let mut path = Vec::new();
        fn dfs(v: usize, succ: &[BTreeSet<usize>], color: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
            color[v] = 1;
            path.push(v);
            for &w in &succ[v] {
                if color[w] == 1 {
                    let i = path.iter().position(|&x| x == w).unwrap();
                    return Some(path[i..].to_vec());
                }
                if color[w] == 0 {
                    if let Some(c) = dfs(w, succ, color, path) {
                        return Some(c);
                    }
                }
            }
            path.pop();
            color[v] = 2;
            None
        }
        for v in 0..n {
            if color[v] == 0 {
                if let Some(c) = dfs(v, &succ, &mut color, &mut path) {
                    return Err(TransducerError::EpsilonCycle(c.into_iter().map(name).collect()));
                }
            }
        }
        for q in 0..n {
            for a in self.input.iter().map(Some).chain([None]) {
                if !self.delta.contains_key(&(q, a.cloned())) {
                    return Err(TransducerError::Missing {
                        state: name(q),
                        letter: a.map_or("bot".to_string(), |l| l.to_string()),
                    });
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, q: usize, a: Option<&Letter>) -> Result<&Rhs, TransducerError> {
        if let Some(l) = a {
            if !self.input.contains(l) {
                return Err(TransducerError::NotInAlphabet(l.to_string()));
            }
        }
        self.rule(q, a).ok_or_else(|| TransducerError::Missing {
            state: self.states[q].clone(),
            letter: a.map_or("bot".to_string(), |l| l.to_string()),
        })
    }

    /// `F(t)`, memoized on shared input subtrees.
    pub fn apply_finite(&self, t: &FiniteTree) -> Result<FiniteTree, TransducerError> {
        self.apply_finite_from(self.initial, t)
    }

    /// `F_q(t)`.
    pub fn apply_finite_from(&self, q: usize, t: &FiniteTree) -> Result<FiniteTree, TransducerError> {
        let mut memo = HashMap::new();
        self.run_state(q, t, &mut memo)
    }

    fn run_state(
        &self,
        q: usize,
        t: &FiniteTree,
        memo: &mut HashMap<(usize, usize), FiniteTree>,
    ) -> Result<FiniteTree, TransducerError> {
        let key = (q, t.0.as_ref().map_or(0, |n| Arc::as_ptr(n) as usize));
        if let Some(r) = memo.get(&key) {
            return Ok(r.clone());
        }
        let rhs = self.lookup(q, t.root().map(|n| &n.letter))?.clone();
        let out = self.subst(&rhs, t, memo)?;
        memo.insert(key, out.clone());
        Ok(out)
    }

    fn subst(
        &self,
        rhs: &Rhs,
        t: &FiniteTree,
        memo: &mut HashMap<(usize, usize), FiniteTree>,
    ) -> Result<FiniteTree, TransducerError> {
        match rhs.node() {
            None => Ok(FiniteTree::empty()),
            Some(n) => match &n.label {
                RhsLabel::Call(r, d) => self.run_state(*r, &t.child(*d), memo),
                RhsLabel::Out(l) => {
                    let left = self.subst(&n.left, t, memo)?;
                    let right = self.subst(&n.right, t, memo)?;
                    Ok(FiniteTree::node(l.clone(), left, right))
                }
            },
        }
    }

    /// Product construction: output states are (input state, rhs position);
    /// bare state leaves at rule roots are followed directly.
    pub fn apply_regular(&self, rt: &RegularTree) -> Result<RegularTree, TransducerError> {
        let mut b = Builder { tr: self, rt, ids: HashMap::new(), eqs: Vec::new(), queue: Vec::new() };
        let start = if rt.is_bottom() { None } else { Some(rt.root()) };
        let root = b.resolve(self.initial, start)?;
        while let Some((id, s, node)) = b.queue.pop() {
            let RhsLabel::Out(l) = &node.label else { unreachable!() };
            let left = b.child(s, &node.left)?;
            let right = b.child(s, &node.right)?;
            b.eqs[id] = Equation::Node { letter: l.clone(), left, right };
        }
        match root {
            None => Ok(RegularTree::bottom()),
            Some(r) => Ok(RegularTree::from_eqs(b.eqs, r).minimize()),
        }
    }
}

struct Builder<'a> {
    tr: &'a Transducer,
    rt: &'a RegularTree,
    ids: HashMap<(Option<StateId>, usize), StateId>,
    eqs: Vec<Equation>,
    queue: Vec<(StateId, Option<StateId>, Arc<RhsNode>)>,
}

impl Builder<'_> {
    fn letter(&self, s: Option<StateId>) -> Option<&Letter> {
        s.and_then(|s| self.rt.letter(s))
    }

    fn resolve(&mut self, mut q: usize, mut s: Option<StateId>) -> Result<Option<StateId>, TransducerError> {
        for _ in 0..=self.tr.states.len() {
            let rhs = self.tr.lookup(q, self.letter(s))?;
            match rhs.0.clone() {
                None => return Ok(None),
                Some(n) => match n.label {
                    RhsLabel::Call(r, d) => {
                        q = r;
                        s = s.and_then(|s| self.rt.child(s, d));
                    }
                    RhsLabel::Out(_) => return Ok(Some(self.node(s, n))),
                },
            }
        }
        Err(TransducerError::EpsilonCycle(vec![self.tr.states[q].clone()]))
    }

    fn node(&mut self, s: Option<StateId>, n: Arc<RhsNode>) -> StateId {
        let key = (s, Arc::as_ptr(&n) as usize);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.eqs.len();
        self.eqs.push(Equation::Bot);
        self.ids.insert(key, id);
        self.queue.push((id, s, n));
        id
    }

    fn child(&mut self, s: Option<StateId>, rhs: &Rhs) -> Result<Option<StateId>, TransducerError> {
        match &rhs.0 {
            None => Ok(None),
            Some(n) => match n.label {
                RhsLabel::Call(r, d) => {
                    let c = s.and_then(|s| self.rt.child(s, d));
                    self.resolve(r, c)
                }
                RhsLabel::Out(_) => Ok(Some(self.node(s, n.clone()))),
            },
        }
    }
}

impl fmt::Display for Transducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states {};", self.states.join(" "))?;
        writeln!(f, "initial {};", self.states[self.initial])?;
        let sorted: BTreeMap<&(usize, Option<Letter>), &Rhs> = self.delta.iter().collect();
        for ((q, a), rhs) in sorted {
            write!(f, "delta {} ", self.states[*q])?;
            match a {
                None => f.write_str("bot")?,
                Some(l) => write!(f, "{l}")?,
            }
            f.write_str(" -> ")?;
            rhs.write(f, &self.states)?;
            writeln!(f, ";")?;
        }
        Ok(())
    }
}

pub fn parse_transducer(text: &str) -> Result<Transducer, TransducerError> {
    let mut cur = Cursor::new(text);
    let mut states: Vec<String> = Vec::new();
    let mut initial: Option<String> = None;
    let mut rules: Vec<(String, Option<Letter>, RawRhs)> = Vec::new();
    while !cur.at_eof() {
        let kw = cur.ident("'states', 'initial' or 'delta'")?;
        match kw.as_str() {
            "states" => {
                while !cur.eat(';') {
                    cur.eat(',');
                    states.push(cur.ident("state name")?);
                }
            }
            "initial" => {
                initial = Some(cur.ident("state name")?);
                cur.expect(';')?;
            }
            "delta" => {
                let q = cur.ident("state name")?;
                let tok = cur.letter_token()?;
                let a = if tok == "bot" { None } else { Some(Letter::parse_token(&tok)?) };
                cur.expect('-')?;
                cur.expect('>')?;
                let rhs = raw_rhs(&mut cur)?;
                cur.expect(';')?;
                rules.push((q, a, rhs));
            }
            _ => {
                let (line, col) = cur.loc();
                return Err(ParseError::Unexpected {
                    line,
                    col,
                    expected: "'states', 'initial' or 'delta'".into(),
                    found: kw,
                }
                .into());
            }
        }
    }
    let idx = |n: &str| states.iter().position(|s| s == n).ok_or_else(|| TransducerError::UnknownState(n.into()));
    let init = idx(initial.as_deref().ok_or(ParseError::Invalid("missing initial state".into()))?)?;
    let input = rules.iter().filter_map(|(_, a, _)| a.clone()).collect();
    let mut tr = Transducer::new(states.clone(), init, input);
    for (q, a, raw) in rules {
        let rhs = raw.resolve(&idx)?;
        tr.set(idx(&q)?, a, rhs);
    }
    Ok(tr)
}

enum RawRhs {
    Bot,
    Node(RawLabel, Box<RawRhs>, Box<RawRhs>),
}

enum RawLabel {
    Out(Letter),
    Call(String, Dir),
}

impl RawRhs {
    fn resolve(self, idx: &impl Fn(&str) -> Result<usize, TransducerError>) -> Result<Rhs, TransducerError> {
        match self {
            RawRhs::Bot => Ok(Rhs::bot()),
            RawRhs::Node(label, l, r) => {
                let label = match label {
                    RawLabel::Out(a) => RhsLabel::Out(a),
                    RawLabel::Call(q, d) => RhsLabel::Call(idx(&q)?, d),
                };
                Ok(Rhs(Some(Arc::new(RhsNode { label, left: l.resolve(idx)?, right: r.resolve(idx)? }))))
            }
        }
    }
}

fn raw_rhs(cur: &mut Cursor<'_>) -> Result<RawRhs, ParseError> {
    if cur.eat('.') {
        return Ok(RawRhs::Bot);
    }
    let label = if cur.eat('(') {
        let q = cur.ident("state name")?;
        cur.expect(',')?;
        let d = match cur.ident("L or R")?.as_str() {
            "L" => Dir::L,
            "R" => Dir::R,
            other => {
                let (line, col) = cur.loc();
                return Err(ParseError::Unexpected { line, col, expected: "L or R".into(), found: other.into() });
            }
        };
        cur.expect(')')?;
        RawLabel::Call(q, d)
    } else {
        if !cur.peek_is_letter_start() {
            return Err(cur.unexpected("output tree"));
        }
        RawLabel::Out(Letter::parse_token(&cur.letter_token()?)?)
    };
    if cur.eat('(') {
        let l = raw_rhs(cur)?;
        cur.expect(',')?;
        let r = raw_rhs(cur)?;
        cur.expect(')')?;
        Ok(RawRhs::Node(label, Box::new(l), Box::new(r)))
    } else {
        Ok(RawRhs::Node(label, Box::new(RawRhs::Bot), Box::new(RawRhs::Bot)))
    }
}

/// The ψ-types reachable from the given seeds by composition at letters
/// with base names in `bases`, with any subset of `xs` at the node.
pub fn reachable_types(
    c: &mut Composer,
    psi: &Formula,
    xs: &[Var],
    bases: &BTreeSet<String>,
    seeds: impl IntoIterator<Item = PhiType>,
) -> Result<Vec<PhiType>, TypeError> {
    let mut list: Vec<PhiType> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            list.push(s);
        }
    }
    let subsets = subsets_of(xs);
    let mut done = 0;
    while done < list.len() {
        let frontier = list.len();
        for a in bases {
            for sv in &subsets {
                for i in 0..frontier {
                    for j in 0..frontier {
                        if i < done && j < done {
                            continue;
                        }
                        let t = c.comp(a, psi, &sv.1, &list[i], &list[j])?;
                        if seen.insert(t.clone()) {
                            list.push(t);
                        }
                    }
                }
            }
        }
        done = frontier;
    }
    list.sort();
    Ok(list)
}

/// Subsets of `xs` as (indices in `xs` order, variable set), by bitmask.
fn subsets_of(xs: &[Var]) -> Vec<(Vec<usize>, crate::syntax::VarSet)> {
    (0..1usize << xs.len())
        .map(|m| {
            let idx: Vec<usize> = (0..xs.len()).filter(|i| m >> i & 1 == 1).collect();
            let set = idx.iter().map(|&i| xs[i].clone()).collect();
            (idx, set)
        })
        .collect()
}

/// The type-checking transducer for `U(xs).psi`.
///
/// `alphabet` pairs each input letter with the ψ-type it carries. States
/// are `q0` and `t1..tr` for the reachable ψ-types `types[0..r]`.
pub struct FTransducer {
    pub transducer: Transducer,
    pub types: Vec<PhiType>,
}

pub fn build_f(
    c: &mut Composer,
    psi: &Formula,
    xs: &[Var],
    alphabet: &[(Letter, PhiType)],
) -> Result<FTransducer, TransducerError> {
    let e = c.empty_type(psi);
    let bases: BTreeSet<String> = alphabet.iter().map(|(l, _)| l.base().to_string()).collect();
    let seeds = std::iter::once(e.clone()).chain(alphabet.iter().map(|(_, t)| t.clone()));
    let types = reachable_types(c, psi, xs, &bases, seeds)?;
    let r = types.len();
    let index: HashMap<PhiType, usize> = types.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let subsets = subsets_of(xs);
    let markers: Vec<Letter> = xs.iter().map(var_marker).collect();
    let (hash, query, nd, nd_bot) =
        (Letter::atom(HASH), Letter::atom(QUERY), Letter::atom(ND), Letter::atom(ND_BOT));
    let state = |i: usize| i + 1;

    let mut states = vec!["q0".to_string()];
    states.extend((1..=r).map(|i| format!("t{i}")));
    let input: BTreeSet<Letter> = alphabet.iter().map(|(l, _)| l.clone()).collect();
    let mut tr = Transducer::new(states, 0, input);

    // triples per base letter and result type, in (S, τL, τR) order
    let mut triples: HashMap<&str, Vec<Vec<(usize, usize, usize)>>> = HashMap::new();
    for a in &bases {
        let mut per = vec![Vec::new(); r];
        for (si, (_, sv)) in subsets.iter().enumerate() {
            for (li, l) in types.iter().enumerate() {
                for (ri, rr) in types.iter().enumerate() {
                    let t = c.comp(a, psi, sv, l, rr)?;
                    per[index[&t]].push((si, li, ri));
                }
            }
        }
        for v in per.iter_mut() {
            v.sort_by(|x, y| subsets[x.0].0.cmp(&subsets[y.0].0).then((x.1, x.2).cmp(&(y.1, y.2))));
        }
        triples.insert(a.as_str(), per);
    }
    // sub(S, τL, τR), shared across letters
    let mut subs: HashMap<(usize, usize, usize), Rhs> = HashMap::new();
    let mut sub = |si: usize, li: usize, ri: usize| -> Rhs {
        subs.entry((si, li, ri))
            .or_insert_with(|| {
                let mut t = Rhs::out(hash.clone(), Rhs::call(state(li), Dir::L), Rhs::call(state(ri), Dir::R));
                for &i in subsets[si].0.iter().rev() {
                    t = Rhs::out(markers[i].clone(), Rhs::bot(), t);
                }
                t
            })
            .clone()
    };
    for (l, own) in alphabet {
        let per = &triples[l.base()];
        let mut rows = Vec::with_capacity(r);
        for (ti, t) in types.iter().enumerate() {
            let mut chain =
                if t == own { Rhs::bot() } else { Rhs::leaf(nd_bot.clone()) };
            for &(si, li, ri) in per[ti].iter().rev() {
                chain = Rhs::out(nd.clone(), sub(si, li, ri), chain);
            }
            let row = Rhs::out(query.clone(), Rhs::bot(), chain);
            tr.set(state(ti), Some(l.clone()), row.clone());
            rows.push(row);
        }
        let mut spine = Rhs::bot();
        for row in rows.into_iter().rev() {
            spine = Rhs::out(hash.clone(), row, spine);
        }
        let main = Rhs::out(
            l.clone(),
            Rhs::call(0, Dir::L),
            Rhs::out(hash.clone(), Rhs::call(0, Dir::R), spine),
        );
        tr.set(0, Some(l.clone()), main);
    }
    tr.set(0, None, Rhs::bot());
    for (ti, t) in types.iter().enumerate() {
        let rhs = if *t == e { Rhs::bot() } else { Rhs::leaf(nd_bot.clone()) };
        tr.set(state(ti), None, rhs);
    }
    Ok(FTransducer { transducer: tr, types })
}

/// Removes `hash` nodes with their right subtrees and assembles the
/// indexed type at every main node from the reflected bits.
///
/// Main letters are recognised by length: `main_width` components of the
/// decorated input, one mark set, then `types.len() * 2^k` bits ordered
/// by type, then index set. The last `psi_width` components of the
/// decorated input (the ψ-type) are dropped.
pub fn build_cleanup(
    alphabet: &BTreeSet<Letter>,
    main_width: usize,
    psi_width: usize,
    types: &[PhiType],
    k: usize,
) -> Transducer {
    let n_idx = 1usize << k;
    let full = main_width + 1 + types.len() * n_idx;
    let mut tr = Transducer::new(vec!["p".into(), "p_hash".into()], 0, alphabet.clone());
    for l in alphabet {
        if l.len() == full {
            let comps = l.components();
            let bit = |i: usize, set: usize| match &comps[main_width + 1 + i * n_idx + set] {
                Component::Name(n) => &**n == "tt",
                _ => false,
            };
            let coords = (0..n_idx)
                .map(|set| PhiType::set((0..types.len()).filter(|&i| bit(i, set)).map(|i| types[i].clone())))
                .collect();
            let relabeled = l.prefix(main_width - psi_width).push(Component::Type(PhiType::indexed(coords)));
            tr.set(0, Some(l.clone()), Rhs::out(relabeled, Rhs::call(0, Dir::L), Rhs::call(1, Dir::R)));
            tr.set(1, Some(l.clone()), Rhs::bot());
        } else if l.base() == HASH {
            tr.set(0, Some(l.clone()), Rhs::bot());
            tr.set(1, Some(l.clone()), Rhs::call(0, Dir::L));
        } else {
            tr.set(0, Some(l.clone()), Rhs::bot());
            tr.set(1, Some(l.clone()), Rhs::bot());
        }
    }
    tr.set(0, None, Rhs::bot());
    tr.set(1, None, Rhs::bot());
    tr
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelPredicate {
    /// The letter equals the given one.
    Is(Letter),
    /// First component is `query` and the second is a mark set containing the set.
    QueryMarks(LetterSet),
}

impl LabelPredicate {
    pub fn test(&self, l: &Letter) -> bool {
        match self {
            LabelPredicate::Is(x) => l == x,
            LabelPredicate::QueryMarks(set) => {
                l.base() == QUERY
                    && matches!(l.components().get(1), Some(Component::Marks(m)) if m.contains(set))
            }
        }
    }
}

/// Decorates every node with whether the node at `path` below it exists
/// and satisfies `predicate`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathLabelReflection {
    pub path: Vec<Dir>,
    pub predicate: LabelPredicate,
}

pub fn reflect_path(rt: &RegularTree, r: &PathLabelReflection) -> RegularTree {
    reflect_paths(rt, std::slice::from_ref(r))
}

/// Applies the reflections in order in a single pass over the states.
pub fn reflect_paths(rt: &RegularTree, rs: &[PathLabelReflection]) -> RegularTree {
    let n = rt.len();
    let mut bits: Vec<Vec<bool>> = vec![Vec::with_capacity(rs.len()); n];
    for r in rs {
        let col: Vec<bool> = (0..n)
            .map(|s| {
                let mut cur = Some(s).filter(|&s| rt.letter(s).is_some());
                for &d in &r.path {
                    cur = cur.and_then(|c| rt.child(c, d));
                }
                cur.and_then(|c| rt.letter(c).map(|l| (c, l))).is_some_and(|(c, l)| test_extended(&r.predicate, l, &bits[c]))
            })
            .collect();
        for (s, b) in col.into_iter().enumerate() {
            bits[s].push(b);
        }
    }
    rt.map_letters(|s, l| l.extend(bits[s].iter().map(|&b| bit(b))))
}

fn bit(b: bool) -> Component {
    Component::Name(Arc::from(if b { "tt" } else { "ff" }))
}

/// `predicate` on `l` with the bits of earlier reflections appended.
fn test_extended(p: &LabelPredicate, l: &Letter, earlier: &[bool]) -> bool {
    match p {
        // appended bits are names, so they never match a mark set
        LabelPredicate::QueryMarks(_) => p.test(l),
        LabelPredicate::Is(x) => {
            x.len() == l.len() + earlier.len() && p.test(&l.extend(earlier.iter().map(|&b| bit(b))))
        }
    }
}

#[cfg(test)]
fn reflect_one(rt: &RegularTree, r: &PathLabelReflection) -> RegularTree {
    let bits: Vec<bool> = (0..rt.len())
        .map(|s| {
            let mut cur = Some(s).filter(|&s| rt.letter(s).is_some());
            for &d in &r.path {
                cur = cur.and_then(|c| rt.child(c, d));
            }
            cur.and_then(|c| rt.letter(c)).is_some_and(|l| r.predicate.test(l))
        })
        .collect();
    rt.map_letters(|s, l| l.push(Component::Name(Arc::from(if bits[s] { "tt" } else { "ff" }))))
}
