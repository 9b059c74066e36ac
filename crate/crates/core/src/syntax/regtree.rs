use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::lex::Cursor;
use super::tree::letter_in;
use super::{Dir, FiniteTree, Letter, ParseError, ParseResult};

pub type StateId = usize;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Equation {
    Bot,
    Node { letter: Letter, left: Option<StateId>, right: Option<StateId> },
}

/// A finite equation system denoting a possibly infinite tree.
///
/// Normal form: every state is reachable from the root, and children
/// never point at `Bot` states (those become `None`); only the root may be
/// `Bot`, in which case it is the only state.
#[derive(Clone, PartialEq, Eq)]
pub struct RegularTree {
    names: Vec<Arc<str>>,
    eqs: Vec<Equation>,
    root: StateId,
}

impl RegularTree {
    /// Normalizes and prunes. Children indices must be in range.
    pub fn new(names: Vec<String>, eqs: Vec<Equation>, root: StateId) -> RegularTree {
        assert_eq!(names.len(), eqs.len());
        let names: Vec<Arc<str>> = names.into_iter().map(|n| Arc::from(n.as_str())).collect();
        RegularTree::normalize(names, eqs, root)
    }

    /// Builds with generated names `s0, s1, ...`.
    pub fn from_eqs(eqs: Vec<Equation>, root: StateId) -> RegularTree {
        let names = (0..eqs.len()).map(|i| format!("s{i}")).collect();
        RegularTree::new(names, eqs, root)
    }

    fn normalize(names: Vec<Arc<str>>, mut eqs: Vec<Equation>, root: StateId) -> RegularTree {
        let is_bot: Vec<bool> = eqs.iter().map(|e| matches!(e, Equation::Bot)).collect();
        for e in eqs.iter_mut() {
            if let Equation::Node { left, right, .. } = e {
                if left.is_some_and(|c| is_bot[c]) {
                    *left = None;
                }
                if right.is_some_and(|c| is_bot[c]) {
                    *right = None;
                }
            }
        }
        // keep reachable states in first-visit order (DFS, left before right)
        let mut order = Vec::new();
        let mut map = vec![usize::MAX; eqs.len()];
        let mut stack = vec![root];
        while let Some(s) = stack.pop() {
            if map[s] != usize::MAX {
                continue;
            }
            map[s] = order.len();
            order.push(s);
            if let Equation::Node { left, right, .. } = &eqs[s] {
                for c in [*right, *left].into_iter().flatten() {
                    if map[c] == usize::MAX {
                        stack.push(c);
                    }
                }
            }
        }
        let new_eqs = order
            .iter()
            .map(|&s| match &eqs[s] {
                Equation::Bot => Equation::Bot,
                Equation::Node { letter, left, right } => Equation::Node {
                    letter: letter.clone(),
                    left: left.map(|c| map[c]),
                    right: right.map(|c| map[c]),
                },
            })
            .collect();
        let new_names = order.iter().map(|&s| names[s].clone()).collect();
        RegularTree { names: new_names, eqs: new_eqs, root: 0 }
    }

    pub fn bottom() -> RegularTree {
        RegularTree { names: vec![Arc::from("s0")], eqs: vec![Equation::Bot], root: 0 }
    }

    pub fn from_finite(t: &FiniteTree) -> RegularTree {
        fn go(t: &FiniteTree, eqs: &mut Vec<Equation>) -> Option<StateId> {
            let n = t.root()?;
            let id = eqs.len();
            eqs.push(Equation::Bot);
            let left = go(&n.left, eqs);
            let right = go(&n.right, eqs);
            eqs[id] = Equation::Node { letter: n.letter.clone(), left, right };
            Some(id)
        }
        let mut eqs = Vec::new();
        match go(t, &mut eqs) {
            None => RegularTree::bottom(),
            Some(r) => RegularTree::from_eqs(eqs, r),
        }
    }

    pub fn root(&self) -> StateId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.eqs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self.eqs[self.root], Equation::Bot)
    }

    pub fn eq(&self, s: StateId) -> &Equation {
        &self.eqs[s]
    }

    pub fn equations(&self) -> &[Equation] {
        &self.eqs
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn letter(&self, s: StateId) -> Option<&Letter> {
        match &self.eqs[s] {
            Equation::Bot => None,
            Equation::Node { letter, .. } => Some(letter),
        }
    }

    pub fn child(&self, s: StateId, d: Dir) -> Option<StateId> {
        match &self.eqs[s] {
            Equation::Bot => None,
            Equation::Node { left, right, .. } => match d {
                Dir::L => *left,
                Dir::R => *right,
            },
        }
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        self.eqs
            .iter()
            .filter_map(|e| match e {
                Equation::Node { letter, .. } => Some(letter.clone()),
                Equation::Bot => None,
            })
            .collect()
    }

    /// The tree rooted at state `s`.
    pub fn rerooted(&self, s: StateId) -> RegularTree {
        RegularTree::normalize(self.names.clone(), self.eqs.clone(), s)
    }

    pub fn map_letters(&self, mut f: impl FnMut(StateId, &Letter) -> Letter) -> RegularTree {
        let eqs = self
            .eqs
            .iter()
            .enumerate()
            .map(|(s, e)| match e {
                Equation::Bot => Equation::Bot,
                Equation::Node { letter, left, right } => {
                    Equation::Node { letter: f(s, letter), left: *left, right: *right }
                }
            })
            .collect();
        RegularTree { names: self.names.clone(), eqs, root: self.root }
    }

    /// True when the denoted tree is finite (no cycle reachable from the root).
    pub fn is_finite(&self) -> bool {
        // states are all reachable, so check the whole graph for a cycle
        let n = self.eqs.len();
        let mut color = vec![0u8; n];
        fn dfs(t: &RegularTree, s: StateId, color: &mut [u8]) -> bool {
            color[s] = 1;
            for d in [Dir::L, Dir::R] {
                if let Some(c) = t.child(s, d) {
                    if color[c] == 1 || (color[c] == 0 && !dfs(t, c, color)) {
                        return false;
                    }
                }
            }
            color[s] = 2;
            true
        }
        (0..n).all(|s| color[s] != 0 || dfs(self, s, &mut color))
    }

    /// Unfolds to depth `depth`, cutting with the empty tree.
    pub fn truncate(&self, depth: usize) -> FiniteTree {
        self.truncate_with(depth, None)
    }

    /// Unfolds to depth `depth`; subtrees below the cut become `filler`
    /// (a leaf) when given, otherwise the empty tree.
    pub fn truncate_with(&self, depth: usize, filler: Option<&Letter>) -> FiniteTree {
        let mut memo: HashMap<(StateId, usize), FiniteTree> = HashMap::new();
        fn go(
            t: &RegularTree,
            s: Option<StateId>,
            d: usize,
            filler: Option<&Letter>,
            memo: &mut HashMap<(StateId, usize), FiniteTree>,
        ) -> FiniteTree {
            let Some(s) = s else { return FiniteTree::empty() };
            if matches!(t.eqs[s], Equation::Bot) {
                return FiniteTree::empty();
            }
            if d == 0 {
                return filler.map(|l| FiniteTree::leaf(l.clone())).unwrap_or_default();
            }
            if let Some(r) = memo.get(&(s, d)) {
                return r.clone();
            }
            let Equation::Node { letter, left, right } = &t.eqs[s] else { unreachable!() };
            let out = FiniteTree::node(
                letter.clone(),
                go(t, *left, d - 1, filler, memo),
                go(t, *right, d - 1, filler, memo),
            );
            memo.insert((s, d), out.clone());
            out
        }
        go(self, Some(self.root), depth, filler, &mut memo)
    }

    /// Unfolds a finite regular tree completely; `None` if it is infinite.
    pub fn unfold_finite(&self) -> Option<FiniteTree> {
        if !self.is_finite() {
            return None;
        }
        Some(self.truncate(self.eqs.len() + 1))
    }

    /// Bisimulation quotient by partition refinement. State names are
    /// taken from the first member of each class.
    pub fn minimize(&self) -> RegularTree {
        let n = self.eqs.len();
        let mut class: Vec<usize> = vec![0; n];
        // initial split by letter
        let mut keys: HashMap<Option<&Letter>, usize> = HashMap::new();
        for s in 0..n {
            let k = self.letter(s);
            let next = keys.len();
            class[s] = *keys.entry(k).or_insert(next);
        }
        let mut count = keys.len();
        loop {
            let mut sig: HashMap<(usize, Option<usize>, Option<usize>), usize> = HashMap::new();
            let mut next_class = vec![0; n];
            for s in 0..n {
                let k = (
                    class[s],
                    self.child(s, Dir::L).map(|c| class[c]),
                    self.child(s, Dir::R).map(|c| class[c]),
                );
                let next = sig.len();
                next_class[s] = *sig.entry(k).or_insert(next);
            }
            let new_count = sig.len();
            class = next_class;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        let mut rep = vec![usize::MAX; count];
        for s in 0..n {
            if rep[class[s]] == usize::MAX {
                rep[class[s]] = s;
            }
        }
        let eqs = (0..count)
            .map(|c| match &self.eqs[rep[c]] {
                Equation::Bot => Equation::Bot,
                Equation::Node { letter, left, right } => Equation::Node {
                    letter: letter.clone(),
                    left: left.map(|x| class[x]),
                    right: right.map(|x| class[x]),
                },
            })
            .collect();
        let names = (0..count).map(|c| self.names[rep[c]].clone()).collect();
        RegularTree::normalize(names, eqs, class[self.root])
    }

    /// Minimized, with states renamed `s0, s1, ...` in DFS order; two
    /// systems denote the same tree iff their canonical forms are equal.
    pub fn canonical(&self) -> RegularTree {
        let m = self.minimize();
        let names = (0..m.len()).map(|i| Arc::from(format!("s{i}").as_str())).collect();
        RegularTree { names, ..m }
    }

    /// Same denoted tree.
    pub fn equivalent(&self, other: &RegularTree) -> bool {
        self.canonical() == other.canonical()
    }
}

impl fmt::Display for RegularTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "root {};", self.names[self.root])?;
        let arg = |c: &Option<StateId>| match c {
            None => ".".to_string(),
            Some(c) => self.names[*c].to_string(),
        };
        for (s, e) in self.eqs.iter().enumerate() {
            match e {
                Equation::Bot => writeln!(f, "{} = .;", self.names[s])?,
                Equation::Node { letter, left, right } => {
                    writeln!(f, "{} = {}({},{});", self.names[s], letter, arg(left), arg(right))?
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RegularTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn parse_regular_tree(text: &str) -> ParseResult<RegularTree> {
    parse_rt(text, false)
}

/// Like [`parse_regular_tree`] but rejects unreachable states.
pub fn parse_regular_tree_strict(text: &str) -> ParseResult<RegularTree> {
    parse_rt(text, true)
}

enum RawRhs {
    Bot,
    Node(Letter, Option<String>, Option<String>),
}

fn parse_rt(text: &str, strict: bool) -> ParseResult<RegularTree> {
    let mut cur = Cursor::new(text);
    let mut root: Option<String> = None;
    let mut defs: BTreeMap<String, usize> = BTreeMap::new();
    let mut raw: Vec<(String, RawRhs)> = Vec::new();
    while !cur.at_eof() {
        let word = cur.ident("state or 'root'")?;
        if word == "root" && !cur.eat('=') {
            let r = cur.ident("root state")?;
            cur.expect(';')?;
            if root.is_some() {
                return Err(ParseError::DuplicateRoot);
            }
            root = Some(r);
            continue;
        }
        if word != "root" {
            cur.expect('=')?;
        }
        let rhs = if cur.eat('.') {
            RawRhs::Bot
        } else {
            if !cur.peek_is_letter_start() {
                return Err(cur.unexpected("letter or '.'"));
            }
            let letter = letter_in(&mut cur)?;
            if cur.eat('(') {
                let l = arg(&mut cur)?;
                cur.expect(',')?;
                let r = arg(&mut cur)?;
                cur.expect(')')?;
                RawRhs::Node(letter, l, r)
            } else {
                RawRhs::Node(letter, None, None)
            }
        };
        cur.expect(';')?;
        if defs.insert(word.clone(), raw.len()).is_some() {
            return Err(ParseError::DuplicateState(word));
        }
        raw.push((word, rhs));
    }
    let root = root.ok_or(ParseError::MissingRoot)?;
    let lookup = |n: &str| defs.get(n).copied().ok_or_else(|| ParseError::UndefinedState(n.to_string()));
    let root_id = lookup(&root)?;
    let mut names = Vec::new();
    let mut eqs = Vec::new();
    for (name, rhs) in &raw {
        names.push(name.clone());
        eqs.push(match rhs {
            RawRhs::Bot => Equation::Bot,
            RawRhs::Node(letter, l, r) => Equation::Node {
                letter: letter.clone(),
                left: l.as_deref().map(lookup).transpose()?,
                right: r.as_deref().map(lookup).transpose()?,
            },
        });
    }
    if strict {
        let mut seen = vec![false; eqs.len()];
        let mut stack = vec![root_id];
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            if let Equation::Node { left, right, .. } = &eqs[s] {
                stack.extend(left.iter().chain(right.iter()).copied());
            }
        }
        if let Some(s) = seen.iter().position(|&b| !b) {
            return Err(ParseError::Unreachable(names[s].clone()));
        }
    }
    Ok(RegularTree::new(names, eqs, root_id))
}

fn arg(cur: &mut Cursor<'_>) -> ParseResult<Option<String>> {
    if cur.eat('.') {
        Ok(None)
    } else {
        Ok(Some(cur.ident("state or '.'")?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_tree;

    #[test]
    fn parse_and_truncate() {
        let t = parse_regular_tree("root q; q = a(., q);").unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.truncate(0).is_empty());
        assert_eq!(t.truncate(2).to_string(), "a(.,a)");
        let t = parse_regular_tree("root q; q = a(q, q);").unwrap();
        assert_eq!(t.truncate(2).to_string(), "a(a,a)");
    }

    #[test]
    fn sup_example_unfolds_by_hand() {
        let t = parse_regular_tree("root q; q = nd(p, e); p = a(., q); e = c(.,.);").unwrap();
        let hand = "nd(a(.,nd(a,c)),c)";
        assert_eq!(t.truncate(4).to_string(), hand);
        assert_eq!(parse_tree(hand).unwrap(), t.truncate(4));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(parse_regular_tree("q = a(.,.);"), Err(ParseError::MissingRoot));
        assert_eq!(
            parse_regular_tree("root q; q = a(p,.);"),
            Err(ParseError::UndefinedState("p".into()))
        );
        assert_eq!(
            parse_regular_tree("root q; q = a(.,.); q = b(.,.);"),
            Err(ParseError::DuplicateState("q".into()))
        );
        let txt = "root q; q = a(.,.); z = b(.,.);";
        assert_eq!(parse_regular_tree(txt).unwrap().len(), 1);
        assert_eq!(parse_regular_tree_strict(txt), Err(ParseError::Unreachable("z".into())));
    }

    #[test]
    fn bot_states_are_folded() {
        let t = parse_regular_tree("root q; q = a(z, q); z = .;").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.to_string(), "root q;\nq = a(.,q);\n");
        let b = parse_regular_tree("root z; z = .;").unwrap();
        assert!(b.is_bottom());
        assert!(b.truncate(3).is_empty());
    }

    #[test]
    fn minimize_merges_bisimilar() {
        let a = parse_regular_tree("root p; p = a(., q); q = a(., p);").unwrap();
        let b = parse_regular_tree("root r; r = a(., r);").unwrap();
        assert_eq!(a.minimize().len(), 1);
        assert!(a.equivalent(&b));
        let c = parse_regular_tree("root r; r = a(r, .);").unwrap();
        assert!(!a.equivalent(&c));
    }

    #[test]
    fn finiteness() {
        assert!(parse_regular_tree("root p; p = a(q, q); q = b(.,.);").unwrap().is_finite());
        assert!(!parse_regular_tree("root p; p = a(q, .); q = b(p,.);").unwrap().is_finite());
    }
}
