use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use super::lex::Cursor;
use super::{Dir, ParseError, ParseResult};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Var {
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Small sorted set of variables, the root-membership argument of `comp`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarSet(SmallVec<[Var; 4]>);

impl VarSet {
    pub fn new() -> VarSet {
        VarSet(SmallVec::new())
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn insert(&mut self, x: Var) {
        if let Err(i) = self.0.binary_search(&x) {
            self.0.insert(i, x);
        }
    }

    pub fn remove(&mut self, x: &Var) {
        if let Ok(i) = self.0.binary_search(x) {
            self.0.remove(i);
        }
    }

    pub fn with(&self, x: &Var) -> VarSet {
        let mut s = self.clone();
        s.insert(x.clone());
        s
    }

    pub fn without(&self, x: &Var) -> VarSet {
        let mut s = self.clone();
        s.remove(x);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = &Var> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(it: I) -> Self {
        let mut s = VarSet::new();
        for x in it {
            s.insert(x);
        }
        s
    }
}

#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Letter(Arc<str>, Var),
    Child(Dir, Var, Var),
    Subset(Var, Var),
    And(Formula, Formula),
    Not(Formula),
    Efin(Var, Formula),
    /// Nonempty, duplicate-free tuple.
    U(Vec<Var>, Formula),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula(Arc<Node>);

impl Formula {
    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Address of the shared node, usable as an identity key while the
    /// formula is alive.
    pub fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn letter(a: &str, x: &str) -> Formula {
        Formula(Arc::new(Node::Letter(Arc::from(a), Var::new(x))))
    }

    pub fn child(d: Dir, x: &str, y: &str) -> Formula {
        Formula(Arc::new(Node::Child(d, Var::new(x), Var::new(y))))
    }

    pub fn subset(x: &str, y: &str) -> Formula {
        Formula(Arc::new(Node::Subset(Var::new(x), Var::new(y))))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula(Arc::new(Node::And(a, b)))
    }

    /// Left-nested conjunction; `None` for an empty list.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        items.into_iter().reduce(Formula::and)
    }

    pub fn not(a: Formula) -> Formula {
        Formula(Arc::new(Node::Not(a)))
    }

    /// `!(!a & !b)`
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn efin(x: &str, body: Formula) -> Formula {
        Formula(Arc::new(Node::Efin(Var::new(x), body)))
    }

    pub fn u(xs: &[&str], body: Formula) -> Result<Formula, ParseError> {
        Formula::u_vars(xs.iter().map(|x| Var::new(x)).collect(), body)
    }

    pub fn u_vars(xs: Vec<Var>, body: Formula) -> Result<Formula, ParseError> {
        if xs.is_empty() {
            return Err(ParseError::EmptyTuple { line: 0, col: 0 });
        }
        let set: BTreeSet<&Var> = xs.iter().collect();
        if set.len() != xs.len() {
            let dup = xs.iter().find(|x| xs.iter().filter(|y| y == x).count() > 1).unwrap();
            return Err(ParseError::DuplicateVar { line: 0, col: 0, var: dup.to_string() });
        }
        Ok(Formula(Arc::new(Node::U(xs, body))))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self.node() {
            Node::Letter(_, x) => [x.clone()].into(),
            Node::Child(_, x, y) | Node::Subset(x, y) => [x.clone(), y.clone()].into(),
            Node::And(a, b) => {
                let mut s = a.free_vars();
                s.extend(b.free_vars());
                s
            }
            Node::Not(a) => a.free_vars(),
            Node::Efin(x, a) => {
                let mut s = a.free_vars();
                s.remove(x);
                s
            }
            Node::U(xs, a) => {
                let mut s = a.free_vars();
                for x in xs {
                    s.remove(x);
                }
                s
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn quantifier_depth(&self) -> usize {
        match self.node() {
            Node::Letter(..) | Node::Child(..) | Node::Subset(..) => 0,
            Node::And(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Node::Not(a) => a.quantifier_depth(),
            Node::Efin(_, a) | Node::U(_, a) => 1 + a.quantifier_depth(),
        }
    }

    /// All variable names occurring anywhere.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f.node() {
            Node::Letter(_, x) => {
                out.insert(x.clone());
            }
            Node::Child(_, x, y) | Node::Subset(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            Node::Efin(x, _) => {
                out.insert(x.clone());
            }
            Node::U(xs, _) => out.extend(xs.iter().cloned()),
            _ => {}
        });
        out
    }

    pub fn letters(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Node::Letter(a, _) = f.node() {
                out.insert(a.clone());
            }
        });
        out
    }

    /// Preorder traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self.node() {
            Node::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::Not(a) | Node::Efin(_, a) | Node::U(_, a) => a.visit(f),
            _ => {}
        }
    }

    /// Subformulas innermost first; each shared node listed once.
    pub fn postorder(&self) -> Vec<Formula> {
        fn go(f: &Formula, seen: &mut BTreeSet<usize>, out: &mut Vec<Formula>) {
            if !seen.insert(f.ptr()) {
                return;
            }
            match f.node() {
                Node::And(a, b) => {
                    go(a, seen, out);
                    go(b, seen, out);
                }
                Node::Not(a) | Node::Efin(_, a) | Node::U(_, a) => go(a, seen, out),
                _ => {}
            }
            out.push(f.clone());
        }
        let mut out = Vec::new();
        go(self, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Renames letters in atoms.
    pub fn map_letters(&self, m: &impl Fn(&str) -> String) -> Formula {
        let node = match self.node() {
            Node::Letter(a, x) => Node::Letter(Arc::from(m(a).as_str()), x.clone()),
            Node::Child(d, x, y) => Node::Child(*d, x.clone(), y.clone()),
            Node::Subset(x, y) => Node::Subset(x.clone(), y.clone()),
            Node::And(a, b) => Node::And(a.map_letters(m), b.map_letters(m)),
            Node::Not(a) => Node::Not(a.map_letters(m)),
            Node::Efin(x, a) => Node::Efin(x.clone(), a.map_letters(m)),
            Node::U(xs, a) => Node::U(xs.clone(), a.map_letters(m)),
        };
        Formula(Arc::new(node))
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, tail: bool) -> fmt::Result {
        match self.node() {
            Node::Letter(a, x) => write!(f, "{a}({x})"),
            Node::Child(Dir::L, x, y) => write!(f, "{x} childL {y}"),
            Node::Child(Dir::R, x, y) => write!(f, "{x} childR {y}"),
            Node::Subset(x, y) => write!(f, "{x} <= {y}"),
            Node::And(a, b) => {
                a.write(f, false)?;
                f.write_str(" & ")?;
                if matches!(b.node(), Node::And(..)) {
                    f.write_str("(")?;
                    b.write(f, true)?;
                    f.write_str(")")
                } else {
                    b.write(f, tail)
                }
            }
            Node::Not(a) => {
                f.write_str("!")?;
                if matches!(a.node(), Node::And(..)) {
                    f.write_str("(")?;
                    a.write(f, true)?;
                    f.write_str(")")
                } else {
                    a.write(f, tail)
                }
            }
            Node::Efin(..) | Node::U(..) if !tail => {
                f.write_str("(")?;
                self.write(f, true)?;
                f.write_str(")")
            }
            Node::Efin(x, a) => {
                write!(f, "Efin {x}. ")?;
                a.write(f, true)
            }
            Node::U(xs, a) => {
                f.write_str("U(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("). ")?;
                a.write(f, true)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, true)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

const KEYWORDS: [&str; 4] = ["Efin", "U", "childL", "childR"];

pub fn parse_formula(text: &str) -> ParseResult<Formula> {
    let mut cur = Cursor::new(text);
    let f = conj(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.unexpected("end of formula"));
    }
    Ok(f)
}

fn conj(cur: &mut Cursor<'_>) -> ParseResult<Formula> {
    let mut f = unary(cur)?;
    while cur.eat('&') {
        let g = unary(cur)?;
        f = Formula::and(f, g);
    }
    Ok(f)
}

fn var(cur: &mut Cursor<'_>) -> ParseResult<Var> {
    cur.skip_trivia();
    let (line, col) = cur.loc();
    let name = cur.ident("variable")?;
    if KEYWORDS.contains(&name.as_str()) {
        return Err(ParseError::Keyword { line, col, word: name });
    }
    Ok(Var::new(&name))
}

fn unary(cur: &mut Cursor<'_>) -> ParseResult<Formula> {
    if cur.eat('!') {
        return Ok(Formula::not(unary(cur)?));
    }
    if cur.eat('(') {
        let f = conj(cur)?;
        cur.expect(')')?;
        return Ok(f);
    }
    if !cur.peek_is_name() {
        return Err(cur.unexpected("formula"));
    }
    let (line, col) = cur.loc();
    let word = cur.ident("formula")?;
    match word.as_str() {
        "Efin" => {
            let x = var(cur)?;
            cur.expect('.')?;
            let body = conj(cur)?;
            Ok(Formula(Arc::new(Node::Efin(x, body))))
        }
        "U" => {
            cur.expect('(')?;
            let mut xs: Vec<Var> = Vec::new();
            if cur.eat(')') {
                return Err(ParseError::EmptyTuple { line, col });
            }
            loop {
                cur.skip_trivia();
                let (vl, vc) = cur.loc();
                let x = var(cur)?;
                if xs.contains(&x) {
                    return Err(ParseError::DuplicateVar { line: vl, col: vc, var: x.to_string() });
                }
                xs.push(x);
                if cur.eat(')') {
                    break;
                }
                cur.expect(',')?;
            }
            cur.expect('.')?;
            let body = conj(cur)?;
            Ok(Formula(Arc::new(Node::U(xs, body))))
        }
        "childL" | "childR" => Err(ParseError::Keyword { line, col, word }),
        _ => {
            if cur.eat('(') {
                let x = var(cur)?;
                cur.expect(')')?;
                return Ok(Formula(Arc::new(Node::Letter(Arc::from(word.as_str()), x))));
            }
            let x = Var::new(&word);
            cur.skip_trivia();
            if cur.peek() == Some('<') && cur.peek2() == Some('=') {
                cur.bump();
                cur.bump();
                let y = var(cur)?;
                return Ok(Formula(Arc::new(Node::Subset(x, y))));
            }
            if !cur.peek_is_name() {
                return Err(cur.unexpected("childL, childR or <="));
            }
            let op = cur.ident("relation")?;
            let d = match op.as_str() {
                "childL" => Dir::L,
                "childR" => Dir::R,
                _ => {
                    return Err(ParseError::Unexpected {
                        line,
                        col,
                        expected: "childL, childR or <=".into(),
                        found: op,
                    })
                }
            };
            let y = var(cur)?;
            Ok(Formula(Arc::new(Node::Child(d, x, y))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(s: &str) -> String {
        parse_formula(s).unwrap().to_string()
    }

    #[test]
    fn quantifier_scope_is_maximal() {
        let f = parse_formula("Efin X. a(X) & b(X)").unwrap();
        match f.node() {
            Node::Efin(x, body) => {
                assert_eq!(x.name(), "X");
                assert!(matches!(body.node(), Node::And(..)));
            }
            _ => panic!(),
        }
        assert!(f.is_sentence());
    }

    #[test]
    fn bang_binds_tighter_than_and() {
        let f = parse_formula("!a(X) & b(X)").unwrap();
        assert!(matches!(f.node(), Node::And(l, _) if matches!(l.node(), Node::Not(_))));
    }

    #[test]
    fn sup_shape() {
        let f = parse_formula("U(X1,X2). Efin Y. a(X1) & b(X2) & X1 <= Y & X2 <= Y").unwrap();
        match f.node() {
            Node::U(xs, body) => {
                assert_eq!(xs.len(), 2);
                assert!(matches!(body.node(), Node::Efin(..)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn u_errors() {
        assert!(matches!(parse_formula("U(X,X). a(X)"), Err(ParseError::DuplicateVar { .. })));
        assert!(matches!(parse_formula("U(). a(X)"), Err(ParseError::EmptyTuple { .. })));
        assert!(parse_formula("a(X) &").is_err());
        assert!(parse_formula("X childM Y").is_err());
    }

    #[test]
    fn printer_parenthesizes_when_needed() {
        assert_eq!(rt("(Efin X. a(X)) & b(Y)"), "(Efin X. a(X)) & b(Y)");
        assert_eq!(rt("a(X) & (b(X) & c(X))"), "a(X) & (b(X) & c(X))");
        assert_eq!(rt("a(X) & b(X) & c(X)"), "a(X) & b(X) & c(X)");
        assert_eq!(rt("!(a(X) & b(X))"), "!(a(X) & b(X))");
        assert_eq!(rt("!Efin X. a(X)"), "!Efin X. a(X)");
        assert_eq!(rt("(!Efin X. a(X)) & X <= Y"), "!(Efin X. a(X)) & X <= Y");
        assert_eq!(rt("a(X) & Efin Y. X childR Y"), "a(X) & Efin Y. X childR Y");
    }

    #[test]
    fn free_vars() {
        let f = parse_formula("Efin X. X <= Y & U(Z). Z childL X").unwrap();
        let fv: Vec<String> = f.free_vars().iter().map(|v| v.to_string()).collect();
        assert_eq!(fv, ["Y"]);
        assert_eq!(f.quantifier_depth(), 2);
    }
}
