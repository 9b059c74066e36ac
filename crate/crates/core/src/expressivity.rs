//! Vault chains, the T1/T2 trunk trees, the SUP formula, and the chain
//! periodicity scan.
//!
//! A vault `S_{m,n}` is a leftward path of `m*p` nodes labeled `a` above
//! `n*p` nodes labeled `b`. T1 and T2 hang one chain off every node of an
//! `nd` trunk running down the right spine; trunk index `k*p` carries the
//! k-th vault and every other trunk node a copy of `S_{1,1}`.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::sup::{nd_language, ND, ND_BOT};
use crate::syntax::{FiniteTree, Formula, Letter, Var};
use crate::types::{compute_type_finite_with, Composer, PhiType, TypeError};
use crate::Valuation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("sup_formula takes at most 3 letters, got {0}")]
    Arity(usize),
    #[error("sup_formula letters must be distinct")]
    Duplicate,
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("language enumeration exceeded {0} trees")]
    Guard(usize),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VaultSpec {
    pub m: usize,
    pub n: usize,
    pub p: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    T1,
    T2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct T12Spec {
    pub which: Which,
    pub p: usize,
    /// Number of trunk nodes kept.
    pub depth: usize,
}

/// Leftward chain `upper^(m*p) lower^(n*p)`.
pub fn chain(upper: &Letter, m: usize, lower: &Letter, n: usize) -> FiniteTree {
    let mut t = FiniteTree::empty();
    for _ in 0..n {
        t = FiniteTree::node(lower.clone(), t, FiniteTree::empty());
    }
    for _ in 0..m {
        t = FiniteTree::node(upper.clone(), t, FiniteTree::empty());
    }
    t
}

pub fn make_vault(v: VaultSpec) -> Result<FiniteTree, ExprError> {
    if v.m == 0 || v.n == 0 || v.p == 0 {
        return Err(ExprError::Params(format!("vault needs m, n, p >= 1, got {} {} {}", v.m, v.n, v.p)));
    }
    Ok(chain(&Letter::atom("a"), v.m * v.p, &Letter::atom("b"), v.n * v.p))
}

/// Vault indices `(m, n)` for the k-th vault. At `k = 0` both trees get `S_{1,1}`.
pub fn vault_index(which: Which, k: usize) -> (usize, usize) {
    match which {
        Which::T1 if k % 2 == 0 => (1, k / 2 + 1),
        Which::T1 => ((k + 1) / 2 + 1, 1),
        Which::T2 => (k.max(1), k.max(1)),
    }
}

pub fn make_t(spec: T12Spec) -> Result<FiniteTree, ExprError> {
    if spec.p == 0 || spec.depth == 0 {
        return Err(ExprError::Params(format!("need p, depth >= 1, got p={} depth={}", spec.p, spec.depth)));
    }
    let nd = Letter::atom(ND);
    let mut t = FiniteTree::empty();
    for j in (0..spec.depth).rev() {
        let (m, n) = if j % spec.p == 0 { vault_index(spec.which, j / spec.p) } else { (1, 1) };
        let side = make_vault(VaultSpec { m, n, p: spec.p })?;
        t = FiniteTree::node(nd.clone(), side, t);
    }
    Ok(t)
}

fn f_or(a: Formula, b: Formula) -> Formula {
    Formula::or(a, b)
}

fn f_and(items: impl IntoIterator<Item = Formula>) -> Formula {
    Formula::and_all(items).expect("nonempty conjunction")
}

fn nonempty(v: &str, fresh: &str) -> Formula {
    // some set does not contain v
    Formula::efin(fresh, Formula::not(Formula::subset(v, fresh)))
}

/// `ψ(Y)`: Y is the node set of one tree of the nd-language together with
/// its nd-labeled ancestors.
pub fn psi_y(y: &str) -> Formula {
    use crate::syntax::Dir::{L, R};
    let sub = Formula::subset;
    let child = |p: &str, c: &str| f_or(Formula::child(L, p, c), Formula::child(R, p, c));
    // a child in Y below a parent outside, or a non-nd parent in Y with a child outside
    let closure = Formula::not(Formula::efin(
        "P",
        Formula::efin(
            "C",
            Formula::and(
                child("P", "C"),
                f_or(
                    Formula::and(sub("C", y), Formula::not(sub("P", y))),
                    f_and([sub("P", y), Formula::not(Formula::letter(ND, "P")), Formula::not(sub("C", y))]),
                ),
            ),
        ),
    ));
    let out = |d| Formula::efin("C", Formula::and(Formula::child(d, "V", "C"), Formula::not(sub("C", y))));
    let inn = |d| Formula::efin("C", Formula::and(Formula::child(d, "V", "C"), sub("C", y)));
    let one_child = Formula::not(Formula::efin(
        "V",
        f_and([sub("V", y), Formula::letter(ND, "V"), f_or(out(L), inn(R)), f_or(out(R), inn(L))]),
    ));
    let no_bot = Formula::not(Formula::efin(
        "V",
        f_and([sub("V", y), Formula::letter(ND_BOT, "V"), nonempty("V", "E")]),
    ));
    f_and([closure, one_child, no_bot])
}

/// `U(X1..Xk). Efin Y. (a1(X1) & X1 <= Y & ... & ψ(Y))`, true iff the
/// nd-language of the tree is simultaneously unbounded in the letters.
/// With no letters: `Efin Y. ψ(Y) & (Y nonempty | tree empty)`.
pub fn sup_formula(letters: &[&str]) -> Result<Formula, ExprError> {
    if letters.len() > 3 {
        return Err(ExprError::Arity(letters.len()));
    }
    if letters.iter().collect::<BTreeSet<_>>().len() != letters.len() {
        return Err(ExprError::Duplicate);
    }
    if letters.is_empty() {
        let tree_empty = Formula::not(Formula::efin("V", nonempty("V", "E")));
        let body = Formula::and(psi_y("Y"), f_or(nonempty("Y", "E"), tree_empty));
        return Ok(Formula::efin("Y", body));
    }
    let xs: Vec<String> = (1..=letters.len()).map(|i| format!("X{i}")).collect();
    let mut parts = Vec::new();
    for (a, x) in letters.iter().zip(&xs) {
        parts.push(Formula::letter(a, x));
        parts.push(Formula::subset(x, "Y"));
    }
    parts.push(psi_y("Y"));
    let body = Formula::efin("Y", f_and(parts));
    let vars: Vec<Var> = xs.iter().map(|x| Var::new(x)).collect();
    Ok(Formula::u_vars(vars, body).expect("distinct variables"))
}

/// Maximum over the nd-language of the minimum letter count.
pub fn minmax_statistic(t: &FiniteTree, letters: &[Letter], guard: usize) -> Result<usize, ExprError> {
    let lang = nd_language(t, guard);
    if !lang.complete {
        return Err(ExprError::Guard(guard));
    }
    Ok(lang.trees.iter().map(|v| letters.iter().map(|a| v.count(a)).min().unwrap_or(0)).max().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodReport {
    pub m_max: usize,
    pub n_max: usize,
    /// `types[m-1][n-1]` is the type of `Efin X. ψ` on `S_{m,n}` (p = 1).
    pub types: Vec<Vec<PhiType>>,
    /// Least period and the least corner from which it holds, if any.
    pub stable: Option<(usize, usize, usize)>,
    /// Distinct types over all chains `upper^i lower^j` in the box, suffixes included.
    pub reachable: usize,
}

impl PeriodReport {
    pub fn period(&self) -> Option<usize> {
        self.stable.map(|s| s.2)
    }

    /// Rows `m n index` with each type replaced by its index in first-seen order.
    pub fn rows(&self) -> Vec<(usize, usize, usize)> {
        let mut ids: HashMap<&PhiType, usize> = HashMap::new();
        let mut out = Vec::new();
        for (i, row) in self.types.iter().enumerate() {
            for (j, t) in row.iter().enumerate() {
                let n = ids.len();
                let id = *ids.entry(t).or_insert(n);
                out.push((i + 1, j + 1, id));
            }
        }
        out
    }
}

/// Types of `Efin X. psi` on `upper^m lower^n` for `1 <= m <= m_max`,
/// `1 <= n <= n_max`, with the least period `P` and corner `(m0, n0)`
/// such that shifting by `P` in either coordinate inside the box never
/// changes the type. The corner must leave room for one shift.
pub fn chain_period_scan(
    psi: &Formula,
    m_max: usize,
    n_max: usize,
    upper: &str,
    lower: &str,
) -> Result<PeriodReport, ExprError> {
    let free = psi.free_vars();
    if free.len() != 1 {
        return Err(ExprError::Params(format!("psi needs exactly one free variable, has {}", free.len())));
    }
    if m_max < 2 || n_max < 2 {
        return Err(ExprError::Params("scan box must be at least 2x2".into()));
    }
    let x = free.into_iter().next().unwrap();
    let closed = Formula::efin(x.name(), psi.clone());
    let (ua, lb) = (Letter::atom(upper), Letter::atom(lower));
    let mut c = Composer::new();
    let empty = Valuation::new();
    let mut all = BTreeSet::new();
    let mut types = vec![Vec::with_capacity(n_max); m_max];
    for i in 0..=m_max {
        for j in 0..=n_max {
            let t = compute_type_finite_with(&mut c, &closed, &chain(&ua, i, &lb, j), &empty)?;
            all.insert(t.clone());
            if i >= 1 && j >= 1 {
                types[i - 1].push(t);
            }
        }
    }
    let at = |m: usize, n: usize| &types[m - 1][n - 1];
    let holds = |p: usize, m0: usize, n0: usize| {
        (m0..=m_max).all(|m| {
            (n0..=n_max).all(|n| {
                (m + p > m_max || at(m, n) == at(m + p, n)) && (n + p > n_max || at(m, n) == at(m, n + p))
            })
        })
    };
    let mut stable = None;
    'outer: for p in 1..m_max.min(n_max) {
        let mut corners: Vec<(usize, usize)> =
            (1..=m_max - p).flat_map(|m| (1..=n_max - p).map(move |n| (m, n))).collect();
        corners.sort_by_key(|&(m, n)| (m + n, m));
        for (m0, n0) in corners {
            if holds(p, m0, n0) {
                stable = Some((m0, n0, p));
                break 'outer;
            }
        }
    }
    Ok(PeriodReport { m_max, n_max, types, stable, reachable: all.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    #[test]
    fn vault_shapes() {
        let v = make_vault(VaultSpec { m: 1, n: 1, p: 2 }).unwrap();
        assert_eq!(v.to_string(), "a(a(b(b,.),.),.)");
        assert_eq!(make_vault(VaultSpec { m: 2, n: 1, p: 1 }).unwrap().to_string(), "a(a(b,.),.)");
        assert!(make_vault(VaultSpec { m: 0, n: 1, p: 1 }).is_err());
    }

    #[test]
    fn trunk_vaults() {
        assert_eq!(vault_index(Which::T1, 0), (1, 1));
        assert_eq!(vault_index(Which::T1, 1), (2, 1));
        assert_eq!(vault_index(Which::T1, 2), (1, 2));
        assert_eq!(vault_index(Which::T2, 0), (1, 1));
        assert_eq!(vault_index(Which::T2, 2), (2, 2));
        let t = make_t(T12Spec { which: Which::T2, p: 1, depth: 3 }).unwrap();
        assert_eq!(t.to_string(), "nd(a(b,.),nd(a(b,.),nd(a(a(b(b,.),.),.),.)))");
        assert_eq!(t.count(&Letter::atom(ND)), 3);
    }

    #[test]
    fn minmax_examples() {
        let ab = [Letter::atom("a"), Letter::atom("b")];
        let v = make_vault(VaultSpec { m: 2, n: 3, p: 1 }).unwrap();
        assert_eq!(minmax_statistic(&v, &ab, 1000).unwrap(), 2);
        for depth in 2..8 {
            let t1 = make_t(T12Spec { which: Which::T1, p: 2, depth }).unwrap();
            assert_eq!(minmax_statistic(&t1, &ab, 1000).unwrap(), 2);
        }
    }

    #[test]
    fn sup_formula_arity() {
        assert!(matches!(sup_formula(&["a", "b", "c", "d"]), Err(ExprError::Arity(4))));
        assert!(matches!(sup_formula(&["a", "a"]), Err(ExprError::Duplicate)));
        let f = sup_formula(&["a", "b"]).unwrap();
        assert!(f.is_sentence());
    }

    #[test]
    fn letter_scan_is_constant() {
        let r = chain_period_scan(&parse_formula("a(X)").unwrap(), 4, 4, "a", "b").unwrap();
        assert_eq!(r.stable, Some((1, 1, 1)));
    }
}
