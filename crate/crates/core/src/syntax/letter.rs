use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::lex::is_name_char;
use super::ParseError;
use crate::types::PhiType;

pub type LetterSet = BTreeSet<Letter>;
/// A family of letter sets, as attached by SUP reflection.
pub type Marks = BTreeSet<LetterSet>;

/// One coordinate of a tuple letter.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Name(Arc<str>),
    Type(PhiType),
    Marks(Arc<Marks>),
}

/// A letter is a nonempty tuple of components; plain letters have one.
/// Printed as the components joined by `|`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(Arc<[Component]>);

impl Letter {
    /// Plain letter. The name should be over `[a-zA-Z0-9_]`.
    pub fn atom(name: &str) -> Letter {
        Letter(Arc::from(vec![Component::Name(Arc::from(name))]))
    }

    pub fn new(name: &str) -> Result<Letter, ParseError> {
        if name.is_empty() || !name.chars().all(is_name_char) {
            return Err(ParseError::Invalid(format!("bad letter name {name:?}")));
        }
        Ok(Letter::atom(name))
    }

    pub fn from_components(comps: Vec<Component>) -> Letter {
        assert!(!comps.is_empty(), "letters have at least one component");
        Letter(Arc::from(comps))
    }

    pub fn components(&self) -> &[Component] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Name of the first component, the letter of the undecorated alphabet.
    pub fn base(&self) -> &str {
        match &self.0[0] {
            Component::Name(n) => n,
            _ => "",
        }
    }

    pub fn is_atom(&self, name: &str) -> bool {
        self.0.len() == 1 && self.base() == name
    }

    pub fn push(&self, c: Component) -> Letter {
        let mut v = self.0.to_vec();
        v.push(c);
        Letter(Arc::from(v))
    }

    pub fn extend(&self, cs: impl IntoIterator<Item = Component>) -> Letter {
        let mut v = self.0.to_vec();
        v.extend(cs);
        Letter(Arc::from(v))
    }

    pub fn prefix(&self, n: usize) -> Letter {
        Letter(Arc::from(self.0[..n].to_vec()))
    }

    /// Parses a printed letter token. Decorations come back as opaque names.
    pub fn parse_token(token: &str) -> Result<Letter, ParseError> {
        let mut comps = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, c) in token.char_indices() {
            match c {
                '{' | '[' | '<' => depth += 1,
                '}' | ']' | '>' => depth = depth.saturating_sub(1),
                '|' if depth == 0 => {
                    comps.push(&token[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        comps.push(&token[start..]);
        if comps.iter().any(|c| c.is_empty()) {
            return Err(ParseError::EmptyComponent { line: 0, col: 0, token: token.to_string() });
        }
        Ok(Letter(comps.into_iter().map(|c| Component::Name(Arc::from(c))).collect()))
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Name(n) => f.write_str(n),
            Component::Type(t) => write!(f, "{t}"),
            Component::Marks(m) => {
                f.write_str("{")?;
                for (i, set) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    if set.is_empty() {
                        f.write_str("-")?;
                    }
                    for (j, l) in set.iter().enumerate() {
                        if j > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{l}")?;
                    }
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_split_respects_brackets() {
        let l = Letter::parse_token("a|{x|y;-}|<tt,ff>").unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l.base(), "a");
        assert_eq!(l.to_string(), "a|{x|y;-}|<tt,ff>");
        assert!(Letter::parse_token("a||b").is_err());
    }

    #[test]
    fn marks_print() {
        let mut m = Marks::new();
        m.insert(LetterSet::new());
        m.insert([Letter::atom("a"), Letter::atom("b")].into_iter().collect());
        let l = Letter::atom("q").push(Component::Marks(Arc::new(m)));
        assert_eq!(l.to_string(), "q|{-;a,b}");
    }
}
