use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::lex::Cursor;
use super::{Letter, ParseError, ParseResult, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    L,
    R,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::L => Dir::R,
            Dir::R => Dir::L,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::L => "L",
            Dir::R => "R",
        })
    }
}

/// A node address: a word over {L,R}. Ordered lexicographically with
/// prefixes first, which is the preorder of a tree.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub Vec<Dir>);

impl Address {
    pub fn root() -> Address {
        Address(Vec::new())
    }

    pub fn child(&self, d: Dir) -> Address {
        let mut v = self.0.clone();
        v.push(d);
        Address(v)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `LRL`-style words; `e` or the empty string is the root.
    pub fn parse(s: &str) -> Option<Address> {
        let s = s.trim();
        if s == "e" || s == "ε" {
            return Some(Address::root());
        }
        s.chars()
            .map(|c| match c {
                'L' => Some(Dir::L),
                'R' => Some(Dir::R),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Address)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Map from variables to finite sets of addresses; absent variables are empty.
pub type Valuation = BTreeMap<Var, BTreeSet<Address>>;

#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeNode {
    pub letter: Letter,
    pub left: FiniteTree,
    pub right: FiniteTree,
}

/// A finite binary tree; `None` is the empty tree. Subtrees are shared.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FiniteTree(pub Option<Arc<TreeNode>>);

impl FiniteTree {
    pub fn empty() -> FiniteTree {
        FiniteTree(None)
    }

    pub fn leaf(letter: Letter) -> FiniteTree {
        FiniteTree::node(letter, FiniteTree::empty(), FiniteTree::empty())
    }

    pub fn node(letter: Letter, left: FiniteTree, right: FiniteTree) -> FiniteTree {
        FiniteTree(Some(Arc::new(TreeNode { letter, left, right })))
    }

    pub fn root(&self) -> Option<&TreeNode> {
        self.0.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn child(&self, d: Dir) -> FiniteTree {
        match self.root() {
            None => FiniteTree::empty(),
            Some(n) => match d {
                Dir::L => n.left.clone(),
                Dir::R => n.right.clone(),
            },
        }
    }

    /// Subtree at an address (empty when outside the domain).
    pub fn subtree(&self, a: &Address) -> FiniteTree {
        let mut t = self.clone();
        for &d in &a.0 {
            t = t.child(d);
        }
        t
    }

    pub fn letter_at(&self, a: &Address) -> Option<Letter> {
        self.subtree(a).root().map(|n| n.letter.clone())
    }

    /// Number of nodes, counting shared subtrees with multiplicity.
    pub fn size(&self) -> usize {
        match self.root() {
            None => 0,
            Some(n) => 1 + n.left.size() + n.right.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self.root() {
            None => 0,
            Some(n) => 1 + n.left.depth().max(n.right.depth()),
        }
    }

    /// Domain in preorder, which is address-lexicographic order.
    pub fn addresses(&self) -> Vec<Address> {
        fn go(t: &FiniteTree, a: &mut Vec<Dir>, out: &mut Vec<Address>) {
            if let Some(n) = t.root() {
                out.push(Address(a.clone()));
                a.push(Dir::L);
                go(&n.left, a, out);
                a.pop();
                a.push(Dir::R);
                go(&n.right, a, out);
                a.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn contains(&self, a: &Address) -> bool {
        !self.subtree(a).is_empty()
    }

    /// Number of nodes whose letter equals `l`.
    pub fn count(&self, l: &Letter) -> usize {
        match self.root() {
            None => 0,
            Some(n) => usize::from(&n.letter == l) + n.left.count(l) + n.right.count(l),
        }
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        let mut out = BTreeSet::new();
        fn go(t: &FiniteTree, out: &mut BTreeSet<Letter>) {
            if let Some(n) = t.root() {
                out.insert(n.letter.clone());
                go(&n.left, out);
                go(&n.right, out);
            }
        }
        go(self, &mut out);
        out
    }

    /// Applies `f` to every letter.
    pub fn map_letters(&self, f: &mut impl FnMut(&Letter) -> Letter) -> FiniteTree {
        match self.root() {
            None => FiniteTree::empty(),
            Some(n) => {
                let l = f(&n.letter);
                FiniteTree::node(l, n.left.map_letters(f), n.right.map_letters(f))
            }
        }
    }
}

impl fmt::Display for FiniteTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.root() {
            None => f.write_str("."),
            Some(n) => {
                write!(f, "{}", n.letter)?;
                if n.left.is_empty() && n.right.is_empty() {
                    Ok(())
                } else {
                    write!(f, "({},{})", n.left, n.right)
                }
            }
        }
    }
}

impl fmt::Debug for FiniteTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn parse_tree(text: &str) -> ParseResult<FiniteTree> {
    let mut cur = Cursor::new(text);
    let t = tree_in(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.unexpected("end of input"));
    }
    Ok(t)
}

pub(crate) fn letter_in(cur: &mut Cursor<'_>) -> ParseResult<Letter> {
    cur.skip_trivia();
    let (line, col) = cur.loc();
    let tok = cur.letter_token()?;
    Letter::parse_token(&tok).map_err(|e| match e {
        ParseError::EmptyComponent { token, .. } => ParseError::EmptyComponent { line, col, token },
        e => e,
    })
}

fn tree_in(cur: &mut Cursor<'_>) -> ParseResult<FiniteTree> {
    if cur.eat('.') {
        return Ok(FiniteTree::empty());
    }
    if !cur.peek_is_letter_start() {
        return Err(cur.unexpected("tree"));
    }
    let letter = letter_in(cur)?;
    if cur.eat('(') {
        let l = tree_in(cur)?;
        cur.expect(',')?;
        let r = tree_in(cur)?;
        cur.expect(')')?;
        Ok(FiniteTree::node(letter, l, r))
    } else {
        Ok(FiniteTree::leaf(letter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert!(parse_tree(".").unwrap().is_empty());
        let t = parse_tree("a(b,.)").unwrap();
        assert_eq!(t.size(), 2);
        assert_eq!(t.letter_at(&Address(vec![Dir::L])), Some(Letter::atom("b")));
        let t = parse_tree("a(b(.,.),c)").unwrap();
        assert_eq!(t.size(), 3);
        assert_eq!(t.to_string(), "a(b,c)");
    }

    #[test]
    fn errors_carry_position() {
        match parse_tree("a(b,\n  $)") {
            Err(ParseError::BadChar { line: 2, col: 3, ch: '$' }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_tree("a(b"), Err(ParseError::Eof { .. })));
        assert!(parse_tree("a b").is_err());
    }

    #[test]
    fn comments_and_whitespace() {
        let t = parse_tree("# a tree\n a ( b , # left\n . )").unwrap();
        assert_eq!(t.to_string(), "a(b,.)");
    }

    #[test]
    fn addresses_are_preorder() {
        let t = parse_tree("a(b(c,.),d)").unwrap();
        let names: Vec<String> = t.addresses().iter().map(|a| a.to_string()).collect();
        assert_eq!(names, ["ε", "L", "LL", "R"]);
    }
}
