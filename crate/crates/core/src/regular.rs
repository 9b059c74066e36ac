//! Fixpoint engine: types of every subformula at every state of a regular
//! tree under the empty valuation.
//!
//! `Efin X.ψ` collects the ψ-types reachable by finitely many changes to
//! the valuation (least fixpoint seeded with the unchanged types).
//! `U(X1..Xk).ψ` builds a grammar over `(state, ψ-type)` whose derivations
//! are the finite valuations of the `X_i`, each membership emitting a marker
//! `X_i`; coordinate `ρ_I` then holds the types whose grammar language is
//! simultaneously unbounded in the markers of `I`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use smallvec::SmallVec;
use thiserror::Error;

use crate::sup::{DerivationGrammar, Production, SupAnalysis, SupError};
use crate::syntax::{Dir, FiniteTree, Formula, Letter, LetterSet, Node, RegularTree, Var, VarSet};
use crate::types::{empty_tree_type, tv, Composer, PhiType, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegularError {
    #[error("formula has free variables: {0}")]
    NotSentence(String),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Sup(#[from] SupError),
}

/// Types per (state, subformula), subformulas innermost first.
#[derive(Clone, Debug)]
pub struct StateTypeTable {
    states: Vec<String>,
    root: usize,
    entries: Vec<(Formula, Vec<PhiType>)>,
}

impl StateTypeTable {
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.entries.iter().map(|(f, _)| f)
    }

    /// Types of `phi` (matched by identity, then structurally) per state.
    pub fn column(&self, phi: &Formula) -> Option<&[PhiType]> {
        self.entries
            .iter()
            .find(|(f, _)| f.ptr() == phi.ptr())
            .or_else(|| self.entries.iter().find(|(f, _)| f == phi))
            .map(|(_, v)| v.as_slice())
    }

    pub fn get(&self, state: usize, phi: &Formula) -> Option<&PhiType> {
        self.column(phi).map(|c| &c[state])
    }

    /// Type of the whole formula at the root.
    pub fn root_type(&self) -> &PhiType {
        &self.entries.last().expect("nonempty table").1[self.root]
    }

    pub fn top(&self) -> &[PhiType] {
        &self.entries.last().expect("nonempty table").1
    }

    /// One line per (state, subformula): `state<TAB>subformula<TAB>type`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (s, name) in self.states.iter().enumerate() {
            for (f, col) in &self.entries {
                let _ = writeln!(out, "{name}\t{f}\t{}", col[s]);
            }
        }
        out
    }
}

fn marker(x: &Var) -> Letter {
    Letter::atom(x.name())
}

fn child_types<'a>(
    rt: &RegularTree,
    s: usize,
    d: Dir,
    sets: &'a [BTreeSet<PhiType>],
    empty: &'a BTreeSet<PhiType>,
) -> &'a BTreeSet<PhiType> {
    match rt.child(s, d) {
        Some(c) => &sets[c],
        None => empty,
    }
}

/// Least fixpoint of achievable body types when the variables in `xs`
/// may contain any finite set of nodes.
fn achievable(
    c: &mut Composer,
    rt: &RegularTree,
    psi: &Formula,
    xs: &[Var],
    base: &[PhiType],
) -> Result<Vec<BTreeSet<PhiType>>, TypeError> {
    let e = c.empty_type(psi);
    let n = rt.len();
    // insertion-ordered lists; pairs are retried only when one side is new
    let mut lists: Vec<Vec<PhiType>> = base.iter().map(|t| vec![t.clone()]).collect();
    let mut ach: Vec<BTreeSet<PhiType>> = base.iter().map(|t| [t.clone()].into()).collect();
    let mut done: Vec<(usize, usize)> = vec![(0, 0); n];
    let empty = vec![e];
    let subsets: Vec<VarSet> = (0..1usize << xs.len())
        .map(|m| xs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| x.clone()).collect())
        .collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            let Some(letter) = rt.letter(s) else { continue };
            let a = letter.base().to_string();
            let side = |d: Dir| rt.child(s, d).map_or(empty.clone(), |c| lists[c].clone());
            let (ls, rs) = (side(Dir::L), side(Dir::R));
            let (dl, dr) = done[s];
            for (i, l) in ls.iter().enumerate() {
                for (j, r) in rs.iter().enumerate() {
                    if i < dl && j < dr {
                        continue;
                    }
                    for sv in &subsets {
                        let t = c.comp(&a, psi, sv, l, r)?;
                        if ach[s].insert(t.clone()) {
                            lists[s].push(t);
                            changed = true;
                        }
                    }
                }
            }
            done[s] = (ls.len(), rs.len());
        }
        if !changed {
            return Ok(ach);
        }
    }
}

/// The `(state, ψ-type)` grammar for `U(xs).ψ`. Returns the grammar and the
/// nonterminal index of each pair.
pub fn u_grammar(
    c: &mut Composer,
    rt: &RegularTree,
    psi: &Formula,
    xs: &[Var],
    base: &[PhiType],
    real: &[BTreeSet<PhiType>],
) -> Result<(DerivationGrammar, HashMap<(usize, PhiType), usize>), TypeError> {
    let e = c.empty_type(psi);
    let empty: BTreeSet<PhiType> = [e.clone()].into();
    let mut ids: HashMap<(usize, PhiType), usize> = HashMap::new();
    let mut names = Vec::new();
    for (s, set) in real.iter().enumerate() {
        for t in set {
            ids.insert((s, t.clone()), names.len());
            names.push(format!("({},{})", rt.name(s), t));
        }
    }
    let mut productions = vec![Vec::new(); names.len()];
    for s in 0..rt.len() {
        let Some(letter) = rt.letter(s) else {
            // the empty tree: only the empty valuation
            productions[ids[&(s, e.clone())]].push(Production { emit: vec![], children: SmallVec::new() });
            continue;
        };
        let a = letter.base().to_string();
        let (cl, cr) = (rt.child(s, Dir::L), rt.child(s, Dir::R));
        let ls = child_types(rt, s, Dir::L, real, &empty).clone();
        let rs = child_types(rt, s, Dir::R, real, &empty).clone();
        for m in 0..1usize << xs.len() {
            let sv: VarSet =
                xs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| x.clone()).collect();
            let emit: Vec<Letter> = sv.iter().map(marker).collect();
            for l in &ls {
                for r in &rs {
                    let t = c.comp(&a, psi, &sv, l, r)?;
                    let Some(&nt) = ids.get(&(s, t)) else { continue };
                    let mut children = SmallVec::new();
                    if let Some(cl) = cl {
                        children.push(ids[&(cl, l.clone())]);
                    }
                    if let Some(cr) = cr {
                        children.push(ids[&(cr, r.clone())]);
                    }
                    productions[nt].push(Production { emit: emit.clone(), children });
                }
            }
        }
        // stop here: all variables empty below
        productions[ids[&(s, base[s].clone())]].push(Production { emit: vec![], children: SmallVec::new() });
    }
    for ps in productions.iter_mut() {
        let mut seen = std::collections::HashSet::new();
        ps.retain(|p| seen.insert(p.clone()));
    }
    let start = ids[&(rt.root(), base[rt.root()].clone())];
    Ok((DerivationGrammar { names, start, productions }, ids))
}

pub fn compute_type_regular(phi: &Formula, rt: &RegularTree) -> Result<StateTypeTable, RegularError> {
    let mut c = Composer::new();
    compute_type_regular_with(&mut c, phi, rt)
}

pub fn compute_type_regular_with(
    c: &mut Composer,
    phi: &Formula,
    rt: &RegularTree,
) -> Result<StateTypeTable, RegularError> {
    let n = rt.len();
    let mut cols: HashMap<usize, Vec<PhiType>> = HashMap::new();
    let mut entries = Vec::new();
    for f in phi.postorder() {
        let col: Vec<PhiType> = match f.node() {
            Node::Letter(..) | Node::Subset(..) | Node::Child(..) => {
                // under the empty valuation these do not depend on the tree
                let e = empty_tree_type(&f);
                vec![e; n]
            }
            Node::Not(a) => cols[&a.ptr()].clone(),
            Node::And(a, b) => {
                let (ca, cb) = (&cols[&a.ptr()], &cols[&b.ptr()]);
                (0..n).map(|s| PhiType::pair(ca[s].clone(), cb[s].clone())).collect()
            }
            Node::Efin(x, psi) => {
                let base = &cols[&psi.ptr()];
                let ach = achievable(c, rt, psi, std::slice::from_ref(x), base)?;
                ach.into_iter().map(PhiType::set).collect()
            }
            Node::U(xs, psi) => {
                let base = cols[&psi.ptr()].clone();
                let real = achievable(c, rt, psi, xs, &base)?;
                let (g, ids) = u_grammar(c, rt, psi, xs, &base, &real)?;
                let markers: Vec<Letter> = xs.iter().map(marker).collect();
                let an = SupAnalysis::new(&g, &markers)?;
                let index_sets: Vec<LetterSet> = (0..1usize << xs.len())
                    .map(|m| xs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| marker(x)).collect())
                    .collect();
                (0..n)
                    .map(|s| {
                        let coords = index_sets
                            .iter()
                            .map(|set| {
                                PhiType::set(real[s].iter().filter(|t| an.holds(ids[&(s, (*t).clone())], set)).cloned())
                            })
                            .collect();
                        PhiType::indexed(coords)
                    })
                    .collect()
            }
        };
        cols.insert(f.ptr(), col.clone());
        entries.push((f, col));
    }
    Ok(StateTypeTable { states: (0..n).map(|s| rt.name(s).to_string()).collect(), root: rt.root(), entries })
}

pub fn check_sentence(phi: &Formula, rt: &RegularTree) -> Result<bool, RegularError> {
    check_sentence_with(&mut Composer::new(), phi, rt)
}

/// [`check_sentence`] with a caller-supplied composer, e.g. one made by
/// [`Composer::with_budget`].
pub fn check_sentence_with(c: &mut Composer, phi: &Formula, rt: &RegularTree) -> Result<bool, RegularError> {
    let free = phi.free_vars();
    if !free.is_empty() {
        let names: Vec<String> = free.iter().map(|v| v.to_string()).collect();
        return Err(RegularError::NotSentence(names.join(",")));
    }
    let table = compute_type_regular_with(c, phi, rt)?;
    Ok(tv(phi, table.root_type())?)
}

/// Unfolding cut at `depth`.
pub fn truncate(rt: &RegularTree, depth: usize) -> FiniteTree {
    rt.truncate(depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_regular_tree};

    fn check(phi: &str, rt: &str) -> bool {
        check_sentence(&parse_formula(phi).unwrap(), &parse_regular_tree(rt).unwrap()).unwrap()
    }

    #[test]
    fn branch_examples() {
        let branch = "root q; q = a(., q);";
        assert!(check("U(X). a(X)", branch));
        assert!(!check("U(X). b(X)", branch));
        let t = compute_type_regular(&parse_formula("Efin X. a(X)").unwrap(), &parse_regular_tree(branch).unwrap())
            .unwrap();
        assert!(t.root_type().as_set().unwrap().contains(&PhiType::tt()));
    }

    #[test]
    fn rejects_open_formulas() {
        let rt = parse_regular_tree("root q; q = a(., q);").unwrap();
        assert!(matches!(
            check_sentence(&parse_formula("a(X)").unwrap(), &rt),
            Err(RegularError::NotSentence(_))
        ));
    }

    #[test]
    fn sup_formula_shape_on_comb() {
        let comb = "root q; q = nd(s, e); s = a(., t); t = b(., q); e = c(.,.);";
        assert!(check("Efin X. Efin Y. X childR Y & a(X) & b(Y)", comb));
        assert!(check("U(X,Y). a(X) & b(Y)", comb));
    }

    #[test]
    fn bottom_tree() {
        assert!(check("Efin X. a(X)", "root z; z = .;"));
        assert!(!check("U(X). X <= X", "root z; z = .;"));
        assert!(check("!Efin X. Efin Y. X childL Y", "root q; q = a(., q);"));
        assert!(check("Efin X. Efin Y. X childR Y", "root q; q = a(., q);"));
    }
}
