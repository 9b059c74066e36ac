//! Letters, finite trees, regular trees, formulas and their text formats.
//!
//! All three formats accept `#` line comments.
//!
//! * tree: `.` | `letter` | `letter(tree,tree)`
//! * regular tree: `root q;` plus `q = letter(arg,arg);` with `arg` a state or `.`
//!   (also `q = .;` for an empty state)
//! * formula: `a(X)`, `X childL Y`, `X childR Y`, `X <= Y`, `&`, `!`, `Efin X.`,
//!   `U(X1,..,Xk).` and parentheses

mod formula;
mod letter;
pub(crate) mod lex;
mod regtree;
mod tree;

pub use formula::{parse_formula, Formula, Node, Var, VarSet};
pub use letter::{Component, Letter, LetterSet, Marks};
pub use regtree::{parse_regular_tree, parse_regular_tree_strict, Equation, RegularTree, StateId};
pub use tree::{parse_tree, Address, Dir, FiniteTree, TreeNode, Valuation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: unexpected character {ch:?}")]
    BadChar { line: usize, col: usize, ch: char },
    #[error("{line}:{col}: expected {expected}, found '{found}'")]
    Unexpected { line: usize, col: usize, expected: String, found: String },
    #[error("{line}:{col}: unexpected end of input, expected {expected}")]
    Eof { line: usize, col: usize, expected: String },
    #[error("{line}:{col}: unbalanced bracket in letter")]
    Unbalanced { line: usize, col: usize },
    #[error("{line}:{col}: empty component in letter {token:?}")]
    EmptyComponent { line: usize, col: usize, token: String },
    #[error("undefined state {0}")]
    UndefinedState(String),
    #[error("missing root declaration")]
    MissingRoot,
    #[error("duplicate root declaration")]
    DuplicateRoot,
    #[error("duplicate definition of state {0}")]
    DuplicateState(String),
    #[error("state {0} is unreachable from the root")]
    Unreachable(String),
    #[error("{line}:{col}: variable {var} occurs twice in one U tuple")]
    DuplicateVar { line: usize, col: usize, var: String },
    #[error("{line}:{col}: U must bind at least one variable")]
    EmptyTuple { line: usize, col: usize },
    #[error("{line}:{col}: {word} is a keyword")]
    Keyword { line: usize, col: usize, word: String },
    #[error("{0}")]
    Invalid(String),
}

pub type ParseResult<T> = Result<T, ParseError>;
