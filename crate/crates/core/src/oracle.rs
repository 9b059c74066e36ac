//! Definitional brute force on finite trees: literal semantics and types
//! computed by enumerating every finite set of nodes.
//!
//! On a finite tree no set has more than `|dom|` elements, so `U` with at
//! least one variable is false and every coordinate `ρ_I` with `I ≠ ∅` is
//! empty. This is a consequence of the semantics, not an approximation.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::syntax::{Address, Dir, FiniteTree, Formula, Node, Valuation, Var};
use crate::types::{PhiType, Quad};

pub const DEFAULT_NODE_GUARD: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("tree has {nodes} nodes, enumeration guard is {guard}")]
    TooLarge { nodes: usize, guard: usize },
    #[error("address {addr} of variable {var} is outside the tree domain")]
    OutsideDomain { var: String, addr: String },
}

pub fn node_guard() -> usize {
    crate::guard_override().unwrap_or(DEFAULT_NODE_GUARD).min(20)
}

/// Memo key: node id plus the masks of its free variables.
#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Packed(u32, u128),
    Wide(u32, SmallVec<[u64; 4]>),
}

/// Brute-force evaluator bound to one tree. Formulas are compiled into
/// an arena; results at quantifiers are memoized per valuation of the
/// quantifier's free variables, across calls.
pub struct Brute {
    letters: Vec<Arc<str>>,
    children: Vec<[Option<usize>; 2]>,
    addrs: Vec<Address>,
    slots: HashMap<Var, u8>,
    ids: FxHashMap<usize, u32>,
    nodes: Vec<CNode>,
    /// Slots of each node's free variables.
    free: Vec<SmallVec<[u8; 4]>>,
    keep: Vec<Formula>,
    types: FxHashMap<Key, PhiType>,
    truth: FxHashMap<Key, bool>,
    pairs: FxHashMap<(PhiType, PhiType), PhiType>,
}

const SLOTS: usize = 32;

type Env = [u64; SLOTS];

enum CNode {
    Letter { x: u8, allowed: u64 },
    Child { d: Dir, x: u8, y: u8 },
    Subset { x: u8, y: u8 },
    And(u32, u32),
    Not(u32),
    Efin { x: u8, body: u32 },
    U { xs: SmallVec<[u8; 4]>, body: u32 },
}

impl Brute {
    pub fn new(t: &FiniteTree) -> Result<Brute, OracleError> {
        Brute::with_guard(t, node_guard())
    }

    pub fn with_guard(t: &FiniteTree, guard: usize) -> Result<Brute, OracleError> {
        let addrs = t.addresses();
        if addrs.len() > guard.min(63) {
            return Err(OracleError::TooLarge { nodes: addrs.len(), guard });
        }
        let index: HashMap<&Address, usize> = addrs.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut letters = Vec::new();
        let mut children = Vec::new();
        for a in &addrs {
            let n = t.subtree(a);
            let n = n.root().unwrap();
            letters.push(Arc::from(n.letter.base()));
            children.push([
                index.get(&a.child(Dir::L)).copied(),
                index.get(&a.child(Dir::R)).copied(),
            ]);
        }
        Ok(Brute {
            letters,
            children,
            addrs,
            slots: HashMap::new(),
            ids: FxHashMap::default(),
            nodes: Vec::new(),
            free: Vec::new(),
            keep: Vec::new(),
            types: FxHashMap::default(),
            truth: FxHashMap::default(),
            pairs: FxHashMap::default(),
        })
    }

    pub fn size(&self) -> usize {
        self.addrs.len()
    }

    fn slot(&mut self, x: &Var) -> u8 {
        let n = self.slots.len();
        *self.slots.entry(x.clone()).or_insert(n as u8)
    }

    /// Compiles `phi` into the arena, starting over if the variable slots
    /// would run out.
    fn prepare(&mut self, phi: &Formula) -> u32 {
        if let Some(&id) = self.ids.get(&phi.ptr()) {
            return id;
        }
        let fresh = phi.all_vars().iter().filter(|x| !self.slots.contains_key(*x)).count();
        if self.slots.len() + fresh > SLOTS {
            self.slots.clear();
            self.ids.clear();
            self.nodes.clear();
            self.free.clear();
            self.keep.clear();
            self.types.clear();
            self.truth.clear();
        }
        self.keep.push(phi.clone());
        for f in phi.postorder() {
            if self.ids.contains_key(&f.ptr()) {
                continue;
            }
            let id = |me: &Self, g: &Formula| me.ids[&g.ptr()];
            let node = match f.node() {
                Node::Letter(a, x) => {
                    let allowed = (0..self.addrs.len()).filter(|&i| self.letters[i] == *a).fold(0, |m, i| m | 1 << i);
                    CNode::Letter { x: self.slot(x), allowed }
                }
                Node::Child(d, x, y) => CNode::Child { d: *d, x: self.slot(x), y: self.slot(y) },
                Node::Subset(x, y) => CNode::Subset { x: self.slot(x), y: self.slot(y) },
                Node::And(a, b) => CNode::And(id(self, a), id(self, b)),
                Node::Not(a) => CNode::Not(id(self, a)),
                Node::Efin(x, body) => CNode::Efin { x: self.slot(x), body: id(self, body) },
                Node::U(xs, body) => {
                    let xs = xs.iter().map(|x| self.slot(x)).collect();
                    CNode::U { xs, body: id(self, body) }
                }
            };
            let free = f.free_vars().iter().map(|x| self.slot(x)).collect();
            self.ids.insert(f.ptr(), self.nodes.len() as u32);
            self.nodes.push(node);
            self.free.push(free);
        }
        self.ids[&phi.ptr()]
    }

    fn env_of(&mut self, v: &Valuation) -> Result<Env, OracleError> {
        let mut env = [0u64; SLOTS];
        for (x, set) in v {
            let mut m = 0u64;
            for a in set {
                let i = self.addrs.iter().position(|b| b == a).ok_or_else(|| OracleError::OutsideDomain {
                    var: x.to_string(),
                    addr: a.to_string(),
                })?;
                m |= 1 << i;
            }
            // variables the formula does not mention are irrelevant
            if let Some(&s) = self.slots.get(x) {
                env[s as usize] = m;
            }
        }
        Ok(env)
    }

    fn key(&self, id: u32, env: &Env) -> Key {
        let free = &self.free[id as usize];
        let n = self.addrs.len();
        if free.len() * n <= 128 {
            let packed = free.iter().fold(0u128, |acc, &s| acc << n | env[s as usize] as u128);
            Key::Packed(id, packed)
        } else {
            Key::Wide(id, free.iter().map(|&s| env[s as usize]).collect())
        }
    }

    fn all_mask(&self) -> u64 {
        (1u64 << self.addrs.len()) - 1
    }

    fn child_holds(&self, d: Dir, mx: u64, my: u64) -> bool {
        if mx.count_ones() != 1 || my.count_ones() != 1 {
            return false;
        }
        let u = mx.trailing_zeros() as usize;
        let v = my.trailing_zeros() as usize;
        self.children[u][d as usize] == Some(v)
    }

    pub fn type_of(&mut self, phi: &Formula, v: &Valuation) -> Result<PhiType, OracleError> {
        let id = self.prepare(phi);
        let env = self.env_of(v)?;
        Ok(self.ty(id, &mut env.clone()))
    }

    pub fn eval(&mut self, phi: &Formula, v: &Valuation) -> Result<bool, OracleError> {
        let id = self.prepare(phi);
        let env = self.env_of(v)?;
        Ok(self.holds(id, &mut env.clone()))
    }

    fn ty(&mut self, id: u32, env: &mut Env) -> PhiType {
        match &self.nodes[id as usize] {
            CNode::Letter { x, allowed } => PhiType::boolean(env[*x as usize] & !allowed == 0),
            CNode::Subset { x, y } => PhiType::boolean(env[*x as usize] & !env[*y as usize] == 0),
            &CNode::Child { d, x, y } => {
                let (mx, my) = (env[x as usize], env[y as usize]);
                let q = if self.child_holds(d, mx, my) {
                    Quad::Tt
                } else if mx == 0 && my == 0 {
                    Quad::Empty
                } else if mx == 0 && my == 1 {
                    // node 0 is the root
                    Quad::Root
                } else {
                    Quad::Ff
                };
                PhiType::quad(q)
            }
            &CNode::And(a, b) => {
                let ta = self.ty(a, env);
                let tb = self.ty(b, env);
                // skip the global interner on repeats
                self.pairs.entry((ta.clone(), tb.clone())).or_insert_with(|| PhiType::pair(ta, tb)).clone()
            }
            &CNode::Not(a) => self.ty(a, env),
            &CNode::Efin { x, body } => {
                let k = self.key(id, env);
                if let Some(t) = self.types.get(&k) {
                    return t.clone();
                }
                let saved = env[x as usize];
                // dedup by identity; the structural sort happens once in `set`
                let mut out = FxHashSet::default();
                for m in 0..=self.all_mask() {
                    env[x as usize] = m;
                    out.insert(self.ty(body, env));
                }
                env[x as usize] = saved;
                let t = PhiType::set(out);
                self.types.insert(k, t.clone());
                t
            }
            CNode::U { xs, body } => {
                let (xs, body) = (xs.clone(), *body);
                let k = self.key(id, env);
                if let Some(t) = self.types.get(&k) {
                    return t.clone();
                }
                let n = self.addrs.len();
                let kk = xs.len();
                // best[σ][I] = max over tuples of type σ of min_{i∈I} |X_i|
                let mut best: Vec<(PhiType, SmallVec<[usize; 8]>)> = Vec::new();
                let mut mins: SmallVec<[usize; 8]> = SmallVec::from_elem(usize::MAX, 1 << kk);
                self.tuples(&xs, env, &mut |me, e, sizes| {
                    let s = me.ty(body, e);
                    for i in 1..mins.len() {
                        let j = i.trailing_zeros() as usize;
                        mins[i] = mins[i & (i - 1)].min(sizes[j]);
                    }
                    let row = match best.iter().position(|(t, _)| *t == s) {
                        Some(p) => &mut best[p].1,
                        None => {
                            best.push((s, SmallVec::from_elem(0, mins.len())));
                            &mut best.last_mut().unwrap().1
                        }
                    };
                    for (slot, &m) in row.iter_mut().zip(&mins) {
                        *slot = (*slot).max(m);
                    }
                });
                // σ ∈ ρ_I iff for every bound b there is a tuple with min ≥ b;
                // bounds beyond n+1 are never met, so checking b ≤ n+1 decides it
                let coords = (0..1usize << kk)
                    .map(|i| {
                        PhiType::set(
                            best.iter()
                                .filter(|(_, row)| (0..=n + 1).all(|b| row[i] >= b))
                                .map(|(s, _)| s.clone()),
                        )
                    })
                    .collect();
                let t = PhiType::indexed(coords);
                self.types.insert(k, t.clone());
                t
            }
        }
    }

    /// Calls `f` for every assignment of subsets to the slots `xs`, with set sizes.
    fn tuples(&mut self, xs: &[u8], env: &mut Env, f: &mut impl FnMut(&mut Self, &mut Env, &[usize])) {
        let all = self.all_mask();
        let saved: SmallVec<[u64; 4]> = xs.iter().map(|&x| env[x as usize]).collect();
        let k = xs.len();
        let mut sizes = vec![0usize; k];
        for &x in xs {
            env[x as usize] = 0;
        }
        'outer: loop {
            f(self, env, &sizes);
            for j in 0.. {
                if j == k {
                    break 'outer;
                }
                let slot = &mut env[xs[j] as usize];
                if *slot < all {
                    *slot += 1;
                    sizes[j] = slot.count_ones() as usize;
                    break;
                }
                *slot = 0;
                sizes[j] = 0;
            }
        }
        for (&x, &m) in xs.iter().zip(&saved) {
            env[x as usize] = m;
        }
    }

    fn holds(&mut self, id: u32, env: &mut Env) -> bool {
        match &self.nodes[id as usize] {
            CNode::Letter { x, allowed } => env[*x as usize] & !allowed == 0,
            CNode::Subset { x, y } => env[*x as usize] & !env[*y as usize] == 0,
            &CNode::Child { d, x, y } => self.child_holds(d, env[x as usize], env[y as usize]),
            &CNode::And(a, b) => self.holds(a, env) && self.holds(b, env),
            &CNode::Not(a) => !self.holds(a, env),
            &CNode::Efin { x, body } => {
                let k = self.key(id, env);
                if let Some(b) = self.truth.get(&k) {
                    return *b;
                }
                let saved = env[x as usize];
                let mut r = false;
                for m in 0..=self.all_mask() {
                    env[x as usize] = m;
                    if self.holds(body, env) {
                        r = true;
                        break;
                    }
                }
                env[x as usize] = saved;
                self.truth.insert(k, r);
                r
            }
            CNode::U { xs, body } => {
                let (xs, body) = (xs.clone(), *body);
                let k = self.key(id, env);
                if let Some(b) = self.truth.get(&k) {
                    return *b;
                }
                // for every n there are sets of size >= n satisfying psi;
                // no set exceeds the domain, so n = |dom|+1 already fails
                let mut best: Option<usize> = None;
                self.tuples(&xs, env, &mut |me, e, sizes| {
                    let m = sizes.iter().copied().min().unwrap_or(0);
                    if best.map_or(true, |b| m > b) && me.holds(body, e) {
                        best = Some(m);
                    }
                });
                let r = (0..=self.addrs.len() + 1).all(|n| best.is_some_and(|b| b >= n));
                self.truth.insert(k, r);
                r
            }
        }
    }
}

/// Literal semantics on a finite tree.
pub fn eval_semantics(phi: &Formula, t: &FiniteTree, v: &Valuation) -> Result<bool, OracleError> {
    Brute::new(t)?.eval(phi, v)
}

/// Type by definition, enumerating all sets of nodes.
pub fn brute_type(phi: &Formula, t: &FiniteTree, v: &Valuation) -> Result<PhiType, OracleError> {
    Brute::new(t)?.type_of(phi, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_tree};

    fn val(pairs: &[(&str, &[&str])]) -> Valuation {
        pairs
            .iter()
            .map(|(x, addrs)| (Var::new(x), addrs.iter().map(|a| Address::parse(a).unwrap()).collect()))
            .collect()
    }

    #[test]
    fn semantics_examples() {
        let t = parse_tree("a(b,.)").unwrap();
        let phi = parse_formula("a(X)").unwrap();
        assert!(eval_semantics(&phi, &t, &val(&[("X", &["e"])])).unwrap());
        let phi = parse_formula("X childL Y").unwrap();
        assert!(eval_semantics(&phi, &t, &val(&[("X", &["e"]), ("Y", &["L"])])).unwrap());
        let phi = parse_formula("U(X). a(X)").unwrap();
        assert!(!eval_semantics(&phi, &parse_tree("a(a,a)").unwrap(), &Valuation::new()).unwrap());
    }

    #[test]
    fn type_examples() {
        let phi = parse_formula("Efin X. a(X)").unwrap();
        assert_eq!(brute_type(&phi, &parse_tree("a").unwrap(), &Valuation::new()).unwrap().to_string(), "{tt}");
        assert_eq!(brute_type(&phi, &parse_tree("b").unwrap(), &Valuation::new()).unwrap().to_string(), "{tt,ff}");
        let phi = parse_formula("X <= Y").unwrap();
        let t = brute_type(&phi, &parse_tree("a").unwrap(), &val(&[("X", &["e"])])).unwrap();
        assert_eq!(t, PhiType::ff());
    }

    #[test]
    fn u_types_are_degenerate_on_finite_trees() {
        let phi = parse_formula("U(X,Y). X <= Y").unwrap();
        let t = brute_type(&phi, &parse_tree("a(b,a)").unwrap(), &Valuation::new()).unwrap();
        let cs = t.as_indexed().unwrap();
        assert_eq!(cs[0].to_string(), "{tt,ff}");
        assert!(cs[1..].iter().all(|c| c.as_set().unwrap().is_empty()));
    }

    #[test]
    fn guard_and_domain() {
        let t = parse_tree("a(a(a(a,a),a(a,a)),a(a,a))").unwrap();
        assert!(matches!(Brute::with_guard(&t, 8), Err(OracleError::TooLarge { nodes: 11, .. })));
        let phi = parse_formula("a(X)").unwrap();
        assert!(matches!(
            eval_semantics(&phi, &parse_tree("a").unwrap(), &val(&[("X", &["L"])])),
            Err(OracleError::OutsideDomain { .. })
        ));
    }
}
