//! The type algebra: φ-types, composition at a node, the type of the empty
//! tree, truth values, and bottom-up types on finite trees.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use rustc_hash::{FxHashMap, FxHashSet, FxHasher};
use thiserror::Error;

use crate::syntax::{Address, Dir, FiniteTree, Formula, Node, Valuation, Var, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quad {
    Tt,
    Empty,
    Root,
    Ff,
}

#[derive(PartialEq, Eq, Hash)]
pub enum TypeNode {
    Bool(bool),
    Quad(Quad),
    Pair(PhiType, PhiType),
    /// Sorted, deduplicated.
    Set(Box<[PhiType]>),
    /// `2^k` coordinates, each a `Set`, indexed by bitmask (bit `i-1` for `X_i`).
    Indexed(Box<[PhiType]>),
}

/// Hash-consed type value: equality and hashing are by pointer, ordering
/// is structural so sorted output is stable across runs.
#[derive(Clone)]
pub struct PhiType(Arc<TypeNode>);

const SHARDS: usize = 16;

fn interner() -> &'static [Mutex<FxHashSet<Arc<TypeNode>>>; SHARDS] {
    static TABLE: OnceLock<[Mutex<FxHashSet<Arc<TypeNode>>>; SHARDS]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|_| Mutex::new(FxHashSet::default())))
}

/// ff, tt, then the four quad values.
fn consts() -> &'static [PhiType; 6] {
    static CONSTS: OnceLock<[PhiType; 6]> = OnceLock::new();
    CONSTS.get_or_init(|| {
        [
            intern(TypeNode::Bool(false)),
            intern(TypeNode::Bool(true)),
            intern(TypeNode::Quad(Quad::Tt)),
            intern(TypeNode::Quad(Quad::Empty)),
            intern(TypeNode::Quad(Quad::Root)),
            intern(TypeNode::Quad(Quad::Ff)),
        ]
    })
}

fn intern(node: TypeNode) -> PhiType {
    let mut h = FxHasher::default();
    node.hash(&mut h);
    let shard = &interner()[(h.finish() >> 59) as usize % SHARDS];
    let mut set = shard.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(a) = set.get(&node) {
        return PhiType(a.clone());
    }
    let a = Arc::new(node);
    set.insert(a.clone());
    PhiType(a)
}

impl PartialEq for PhiType {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}
impl Eq for PhiType {}

impl Hash for PhiType {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (Arc::as_ptr(&self.0) as usize).hash(state)
    }
}

fn tag(n: &TypeNode) -> u8 {
    match n {
        TypeNode::Bool(_) => 0,
        TypeNode::Quad(_) => 1,
        TypeNode::Pair(..) => 2,
        TypeNode::Set(_) => 3,
        TypeNode::Indexed(_) => 4,
    }
}

impl Ord for PhiType {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        match (self.node(), other.node()) {
            // tt sorts before ff
            (TypeNode::Bool(a), TypeNode::Bool(b)) => b.cmp(a),
            (TypeNode::Quad(a), TypeNode::Quad(b)) => a.cmp(b),
            (TypeNode::Pair(a1, a2), TypeNode::Pair(b1, b2)) => a1.cmp(b1).then_with(|| a2.cmp(b2)),
            (TypeNode::Set(a), TypeNode::Set(b)) | (TypeNode::Indexed(a), TypeNode::Indexed(b)) => {
                a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter()))
            }
            (a, b) => tag(a).cmp(&tag(b)),
        }
    }
}

impl PartialOrd for PhiType {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PhiType {
    pub fn node(&self) -> &TypeNode {
        &self.0
    }

    pub fn boolean(b: bool) -> PhiType {
        consts()[usize::from(b)].clone()
    }

    pub fn tt() -> PhiType {
        PhiType::boolean(true)
    }

    pub fn ff() -> PhiType {
        PhiType::boolean(false)
    }

    pub fn quad(q: Quad) -> PhiType {
        let i = match q {
            Quad::Tt => 2,
            Quad::Empty => 3,
            Quad::Root => 4,
            Quad::Ff => 5,
        };
        consts()[i].clone()
    }

    pub fn pair(a: PhiType, b: PhiType) -> PhiType {
        intern(TypeNode::Pair(a, b))
    }

    pub fn set(items: impl IntoIterator<Item = PhiType>) -> PhiType {
        let mut v: Vec<PhiType> = items.into_iter().collect();
        v.sort();
        v.dedup();
        intern(TypeNode::Set(v.into_boxed_slice()))
    }

    /// `coords[I]` is the coordinate for index set `I` (as a bitmask).
    pub fn indexed(coords: Vec<PhiType>) -> PhiType {
        assert!(coords.len().is_power_of_two(), "indexed types have 2^k coordinates");
        assert!(coords.iter().all(|c| c.as_set().is_some()), "coordinates are sets");
        intern(TypeNode::Indexed(coords.into_boxed_slice()))
    }

    pub fn as_set(&self) -> Option<&[PhiType]> {
        match self.node() {
            TypeNode::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_indexed(&self) -> Option<&[PhiType]> {
        match self.node() {
            TypeNode::Indexed(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_quad(&self) -> Option<Quad> {
        match self.node() {
            TypeNode::Quad(q) => Some(*q),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.node() {
            TypeNode::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Number of distinct interned types so far.
    pub fn interned_count() -> usize {
        interner().iter().map(|s| s.lock().map(|s| s.len()).unwrap_or(0)).sum()
    }
}

impl fmt::Display for PhiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            TypeNode::Bool(true) => f.write_str("tt"),
            TypeNode::Bool(false) => f.write_str("ff"),
            TypeNode::Quad(Quad::Tt) => f.write_str("tt"),
            TypeNode::Quad(Quad::Empty) => f.write_str("empty"),
            TypeNode::Quad(Quad::Root) => f.write_str("root"),
            TypeNode::Quad(Quad::Ff) => f.write_str("ff"),
            TypeNode::Pair(a, b) => write!(f, "<{a},{b}>"),
            TypeNode::Set(s) => {
                f.write_str("{")?;
                for (i, t) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("}")
            }
            TypeNode::Indexed(cs) => {
                f.write_str("[")?;
                for (mask, c) in cs.iter().enumerate() {
                    if mask > 0 {
                        f.write_str(";")?;
                    }
                    f.write_str("{")?;
                    let mut first = true;
                    for i in 0..usize::BITS as usize {
                        if mask >> i & 1 == 1 {
                            if !first {
                                f.write_str(",")?;
                            }
                            first = false;
                            write!(f, "{}", i + 1)?;
                        }
                    }
                    write!(f, "}}:{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl fmt::Debug for PhiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type {ty} does not fit formula {formula}")]
    Shape { formula: String, ty: String },
    #[error("address {addr} of variable {var} is outside the tree domain")]
    OutsideDomain { var: String, addr: String },
    #[error("more than {0} distinct variables in one composer")]
    TooManyVariables(usize),
    #[error("composition budget of {0} steps exhausted")]
    Budget(u64),
}

fn shape(phi: &Formula, ty: &PhiType) -> TypeError {
    TypeError::Shape { formula: phi.to_string(), ty: ty.to_string() }
}

/// Arguments of `comp` besides the letter and formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompKey {
    /// Variables whose valuation contains the current node.
    pub root_vars: VarSet,
    pub left: PhiType,
    pub right: PhiType,
}

/// The type of `phi` at a node labeled `a`, from root membership and the
/// children's types.
pub fn comp(a: &str, phi: &Formula, key: &CompKey) -> Result<PhiType, TypeError> {
    Composer::new().comp(a, phi, &key.root_vars, &key.left, &key.right)
}

/// Memoizing evaluator for `comp`. Quantifier nodes are cached by
/// `(formula, letter, root vars among its free variables, left, right)`.
/// Letters and variables are numbered per composer; every formula seen is
/// kept alive in `info`, so pointer identity keys are safe.
#[derive(Default)]
pub struct Composer {
    cache: FxHashMap<(usize, u32, u64, PhiType, PhiType), PhiType>,
    /// Quantifier bodies, which recur across many parent set pairs.
    body: FxHashMap<(usize, u32, u64, PhiType, PhiType), PhiType>,
    /// `{body(σL, σR) : σR ∈ τR}` for existential bodies, keyed by `(σL, τR)`.
    rows: FxHashMap<(usize, u32, u64, PhiType, PhiType), Arc<[PhiType]>>,
    empty: FxHashMap<FPtr, PhiType>,
    info: FxHashMap<usize, (Formula, Info)>,
    letters: FxHashMap<Arc<str>, u32>,
    vars: FxHashMap<Var, u32>,
    budget: Option<u64>,
    work: u64,
}

#[derive(Clone, Copy)]
struct Info {
    free: u64,
    /// Bits of the atom's or binder's variables, in order.
    x: u64,
    y: u64,
    letter: u32,
}

struct FPtr(Formula);
impl PartialEq for FPtr {
    fn eq(&self, o: &Self) -> bool {
        self.0.ptr() == o.0.ptr()
    }
}
impl Eq for FPtr {}
impl Hash for FPtr {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.0.ptr().hash(h)
    }
}

/// The submasks of `xs`, each joined with `rest`, by increasing bitmask
/// over the bits of `xs` in order.
fn enumerate_subsets(rest: u64, bits: &[u64]) -> Vec<u64> {
    (0..1usize << bits.len())
        .map(|m| bits.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).fold(rest, |acc, (_, b)| acc | b))
        .collect()
}

impl Composer {
    pub fn new() -> Composer {
        Composer::default()
    }

    /// A composer that fails with [`TypeError::Budget`] once it has spent
    /// more than `steps` units of work. Every quantifier composition costs
    /// one unit plus one per candidate body type it visits.
    pub fn with_budget(steps: u64) -> Composer {
        Composer { budget: Some(steps), ..Composer::default() }
    }

    /// Work spent so far.
    pub fn work(&self) -> u64 {
        self.work
    }

    fn charge(&mut self, n: u64) -> Result<(), TypeError> {
        self.work += n;
        match self.budget {
            Some(b) if self.work > b => Err(TypeError::Budget(b)),
            _ => Ok(()),
        }
    }

    pub fn empty_type(&mut self, phi: &Formula) -> PhiType {
        if let Some(t) = self.empty.get(&FPtr(phi.clone())) {
            return t.clone();
        }
        let t = empty_tree_type(phi);
        self.empty.insert(FPtr(phi.clone()), t.clone());
        t
    }

    fn letter_id(&mut self, a: &str) -> u32 {
        if let Some(&i) = self.letters.get(a) {
            return i;
        }
        let i = self.letters.len() as u32;
        self.letters.insert(Arc::from(a), i);
        i
    }

    fn var_bit(&mut self, x: &Var) -> Result<u64, TypeError> {
        let n = self.vars.len() as u32;
        let i = *self.vars.entry(x.clone()).or_insert(n);
        if i >= u64::BITS {
            return Err(TypeError::TooManyVariables(u64::BITS as usize));
        }
        Ok(1 << i)
    }

    fn info(&mut self, phi: &Formula) -> Result<Info, TypeError> {
        if let Some((_, i)) = self.info.get(&phi.ptr()) {
            return Ok(*i);
        }
        let mut free = 0;
        for x in phi.free_vars() {
            free |= self.var_bit(&x)?;
        }
        let (x, y, letter) = match phi.node() {
            Node::Letter(a, x) => (self.var_bit(x)?, 0, self.letter_id(a)),
            Node::Child(_, x, y) | Node::Subset(x, y) => (self.var_bit(x)?, self.var_bit(y)?, 0),
            Node::Efin(x, _) => (self.var_bit(x)?, 0, 0),
            _ => (0, 0, 0),
        };
        let i = Info { free, x, y, letter };
        self.info.insert(phi.ptr(), (phi.clone(), i));
        Ok(i)
    }

    pub fn comp(
        &mut self,
        a: &str,
        phi: &Formula,
        s: &VarSet,
        tl: &PhiType,
        tr: &PhiType,
    ) -> Result<PhiType, TypeError> {
        let a = self.letter_id(a);
        let mut mask = 0;
        for x in s.iter() {
            mask |= self.var_bit(x)?;
        }
        self.comp_m(a, phi, mask, tl, tr)
    }

    fn comp_body(&mut self, a: u32, psi: &Formula, s: u64, tl: &PhiType, tr: &PhiType) -> Result<PhiType, TypeError> {
        let free = self.info(psi)?.free;
        let key = (psi.ptr(), a, s & free, tl.clone(), tr.clone());
        if let Some(t) = self.body.get(&key) {
            return Ok(t.clone());
        }
        let t = self.comp_m(a, psi, s, tl, tr)?;
        self.body.insert(key, t.clone());
        Ok(t)
    }

    fn row(&mut self, a: u32, psi: &Formula, s: u64, sl: &PhiType, tr: &PhiType) -> Result<Arc<[PhiType]>, TypeError> {
        let free = self.info(psi)?.free;
        let key = (psi.ptr(), a, s & free, sl.clone(), tr.clone());
        if let Some(r) = self.rows.get(&key) {
            return Ok(r.clone());
        }
        let rs = tr.as_set().unwrap_or(&[]);
        self.charge(rs.len() as u64)?;
        let mut out: Vec<PhiType> = Vec::new();
        for sr in rs {
            let t = self.comp_body(a, psi, s, sl, sr)?;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        let r: Arc<[PhiType]> = out.into();
        self.rows.insert(key, r.clone());
        Ok(r)
    }

    fn comp_m(&mut self, a: u32, phi: &Formula, s: u64, tl: &PhiType, tr: &PhiType) -> Result<PhiType, TypeError> {
        let info = self.info(phi)?;
        match phi.node() {
            Node::Letter(..) => {
                let (l, r) = (bool_of(phi, tl)?, bool_of(phi, tr)?);
                Ok(PhiType::boolean(l && r && (info.letter == a || s & info.x == 0)))
            }
            Node::Subset(..) => {
                let (l, r) = (bool_of(phi, tl)?, bool_of(phi, tr)?);
                Ok(PhiType::boolean(l && r && (s & info.x == 0 || s & info.y != 0)))
            }
            Node::Child(d, ..) => {
                let (l, r) = (quad_of(phi, tl)?, quad_of(phi, tr)?);
                let (td, to) = match d {
                    Dir::L => (l, r),
                    Dir::R => (r, l),
                };
                let (sx, sy) = (s & info.x != 0, s & info.y != 0);
                let q = if !sx && !sy && ((l == Quad::Tt && r == Quad::Empty) || (l == Quad::Empty && r == Quad::Tt)) {
                    Quad::Tt
                } else if sx && !sy && td == Quad::Root && to == Quad::Empty {
                    Quad::Tt
                } else if !sx && !sy && l == Quad::Empty && r == Quad::Empty {
                    Quad::Empty
                } else if !sx && sy && l == Quad::Empty && r == Quad::Empty {
                    Quad::Root
                } else {
                    Quad::Ff
                };
                Ok(PhiType::quad(q))
            }
            Node::Not(psi) => self.comp_m(a, psi, s, tl, tr),
            Node::And(p1, p2) => {
                let (TypeNode::Pair(l1, l2), TypeNode::Pair(r1, r2)) = (tl.node(), tr.node()) else {
                    return Err(shape(phi, if matches!(tl.node(), TypeNode::Pair(..)) { tr } else { tl }));
                };
                let t1 = self.comp_m(a, p1, s, l1, r1)?;
                let t2 = self.comp_m(a, p2, s, l2, r2)?;
                Ok(PhiType::pair(t1, t2))
            }
            Node::Efin(_, psi) => {
                self.charge(1)?;
                let key = (phi.ptr(), a, s & info.free, tl.clone(), tr.clone());
                if let Some(t) = self.cache.get(&key) {
                    return Ok(t.clone());
                }
                let ls = tl.as_set().ok_or_else(|| shape(phi, tl))?;
                tr.as_set().ok_or_else(|| shape(phi, tr))?;
                let mut out = FxHashSet::default();
                for s2 in [s & !info.x, s | info.x] {
                    for sl in ls {
                        let row = self.row(a, psi, s2, sl, tr)?;
                        self.charge(row.len() as u64)?;
                        out.extend(row.iter().cloned());
                    }
                }
                let t = PhiType::set(out);
                self.cache.insert(key, t.clone());
                Ok(t)
            }
            Node::U(xs, psi) => {
                self.charge(1)?;
                let key = (phi.ptr(), a, s & info.free, tl.clone(), tr.clone());
                if let Some(t) = self.cache.get(&key) {
                    return Ok(t.clone());
                }
                let n = 1usize << xs.len();
                let ls = tl.as_indexed().filter(|c| c.len() == n).ok_or_else(|| shape(phi, tl))?;
                let rs = tr.as_indexed().filter(|c| c.len() == n).ok_or_else(|| shape(phi, tr))?;
                let bits = xs.iter().map(|x| self.var_bit(x)).collect::<Result<Vec<_>, _>>()?;
                let rest = bits.iter().fold(s, |acc, b| acc & !b);
                let subsets = enumerate_subsets(rest, &bits);
                let mut inner: FxHashMap<(usize, PhiType, PhiType), PhiType> = FxHashMap::default();
                let mut coords: Vec<FxHashSet<PhiType>> = vec![FxHashSet::default(); n];
                for il in 0..n {
                    for ir in 0..n {
                        let i = il | ir;
                        let (Some(sl), Some(sr)) = (ls[il].as_set(), rs[ir].as_set()) else {
                            return Err(shape(phi, tl));
                        };
                        self.charge((subsets.len() * sl.len() * sr.len()) as u64)?;
                        for (si, &s2) in subsets.iter().enumerate() {
                            for a1 in sl {
                                for a2 in sr {
                                    let k = (si, a1.clone(), a2.clone());
                                    let t = match inner.get(&k) {
                                        Some(t) => t.clone(),
                                        None => {
                                            let t = self.comp_body(a, psi, s2, a1, a2)?;
                                            inner.insert(k, t.clone());
                                            t
                                        }
                                    };
                                    coords[i].insert(t);
                                }
                            }
                        }
                    }
                }
                let t = PhiType::indexed(coords.into_iter().map(PhiType::set).collect());
                self.cache.insert(key, t.clone());
                Ok(t)
            }
        }
    }
}

fn bool_of(phi: &Formula, t: &PhiType) -> Result<bool, TypeError> {
    t.as_bool().ok_or_else(|| shape(phi, t))
}

fn quad_of(phi: &Formula, t: &PhiType) -> Result<Quad, TypeError> {
    t.as_quad().ok_or_else(|| shape(phi, t))
}

/// Type of the empty tree under the empty valuation.
pub fn empty_tree_type(phi: &Formula) -> PhiType {
    match phi.node() {
        Node::Letter(..) | Node::Subset(..) => PhiType::tt(),
        Node::Child(..) => PhiType::quad(Quad::Empty),
        Node::And(a, b) => PhiType::pair(empty_tree_type(a), empty_tree_type(b)),
        Node::Not(a) => empty_tree_type(a),
        Node::Efin(_, a) => PhiType::set([empty_tree_type(a)]),
        Node::U(xs, a) => {
            let mut coords = vec![PhiType::set([]); 1 << xs.len()];
            coords[0] = PhiType::set([empty_tree_type(a)]);
            PhiType::indexed(coords)
        }
    }
}

/// Truth value of `phi` for any tree and valuation of type `t`.
pub fn tv(phi: &Formula, t: &PhiType) -> Result<bool, TypeError> {
    match phi.node() {
        Node::Letter(..) | Node::Subset(..) => bool_of(phi, t),
        Node::Child(..) => Ok(quad_of(phi, t)? == Quad::Tt),
        Node::And(a, b) => match t.node() {
            TypeNode::Pair(x, y) => Ok(tv(a, x)? && tv(b, y)?),
            _ => Err(shape(phi, t)),
        },
        Node::Not(a) => Ok(!tv(a, t)?),
        Node::Efin(_, a) => {
            for s in t.as_set().ok_or_else(|| shape(phi, t))? {
                if tv(a, s)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Node::U(xs, a) => {
            let cs = t.as_indexed().filter(|c| c.len() == 1 << xs.len()).ok_or_else(|| shape(phi, t))?;
            let full = cs.last().and_then(|c| c.as_set()).ok_or_else(|| shape(phi, t))?;
            for s in full {
                if tv(a, s)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Bottom-up type of `phi` on a finite tree under valuation `v`.
pub fn compute_type_finite(phi: &Formula, t: &FiniteTree, v: &Valuation) -> Result<PhiType, TypeError> {
    let mut c = Composer::new();
    compute_type_finite_with(&mut c, phi, t, v)
}

pub fn compute_type_finite_with(
    c: &mut Composer,
    phi: &Formula,
    t: &FiniteTree,
    v: &Valuation,
) -> Result<PhiType, TypeError> {
    let free = phi.free_vars();
    for (x, addrs) in v {
        for a in addrs {
            if !t.contains(a) {
                return Err(TypeError::OutsideDomain { var: x.to_string(), addr: a.to_string() });
            }
        }
    }
    let relevant: Vec<(&Var, &BTreeSet<Address>)> =
        v.iter().filter(|(x, s)| free.contains(*x) && !s.is_empty()).collect();
    fn go(
        c: &mut Composer,
        phi: &Formula,
        t: &FiniteTree,
        addr: &mut Vec<Dir>,
        vars: &[(&Var, &BTreeSet<Address>)],
    ) -> Result<PhiType, TypeError> {
        let Some(n) = t.root() else { return Ok(c.empty_type(phi)) };
        let here = Address(addr.clone());
        let s: VarSet = vars.iter().filter(|(_, a)| a.contains(&here)).map(|(x, _)| (*x).clone()).collect();
        addr.push(Dir::L);
        let l = go(c, phi, &n.left, addr, vars)?;
        addr.pop();
        addr.push(Dir::R);
        let r = go(c, phi, &n.right, addr, vars)?;
        addr.pop();
        c.comp(n.letter.base(), phi, &s, &l, &r)
    }
    go(c, phi, t, &mut Vec::new(), &relevant)
}

/// Upper bound on the number of distinct types of `phi`, when it fits.
pub fn pht_bound(phi: &Formula) -> Option<u128> {
    fn pow2(b: u128) -> Option<u128> {
        if b >= 127 {
            None
        } else {
            Some(1u128 << b)
        }
    }
    match phi.node() {
        Node::Letter(..) | Node::Subset(..) => Some(2),
        Node::Child(..) => Some(4),
        Node::And(a, b) => pht_bound(a)?.checked_mul(pht_bound(b)?),
        Node::Not(a) => pht_bound(a),
        Node::Efin(_, a) => pow2(pht_bound(a)?),
        Node::U(xs, a) => {
            let per = pow2(pht_bound(a)?)?;
            let mut acc: u128 = 1;
            for _ in 0..1u32 << xs.len() {
                acc = acc.checked_mul(per)?;
            }
            Some(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_tree};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn key(vars: &[&str], l: PhiType, r: PhiType) -> CompKey {
        CompKey { root_vars: vars.iter().map(|v| Var::new(v)).collect(), left: l, right: r }
    }

    #[test]
    fn interning_gives_pointer_equality() {
        let a = PhiType::set([PhiType::tt(), PhiType::ff()]);
        let b = PhiType::set([PhiType::ff(), PhiType::tt(), PhiType::ff()]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{tt,ff}");
    }

    #[test]
    fn letter_case() {
        let t = comp("a", &f("b(X)"), &key(&["X"], PhiType::tt(), PhiType::tt())).unwrap();
        assert_eq!(t, PhiType::ff());
        let t = comp("a", &f("b(X)"), &key(&[], PhiType::tt(), PhiType::tt())).unwrap();
        assert_eq!(t, PhiType::tt());
    }

    #[test]
    fn child_cases() {
        let q = |x| PhiType::quad(x);
        let phi = f("X childL Y");
        assert_eq!(comp("a", &phi, &key(&[], q(Quad::Tt), q(Quad::Empty))).unwrap(), q(Quad::Tt));
        assert_eq!(comp("a", &phi, &key(&[], q(Quad::Empty), q(Quad::Empty))).unwrap(), q(Quad::Empty));
        assert_eq!(comp("a", &phi, &key(&["Y"], q(Quad::Empty), q(Quad::Empty))).unwrap(), q(Quad::Root));
        assert_eq!(comp("a", &phi, &key(&["X"], q(Quad::Root), q(Quad::Empty))).unwrap(), q(Quad::Tt));
        assert_eq!(comp("a", &phi, &key(&["X"], q(Quad::Empty), q(Quad::Root))).unwrap(), q(Quad::Ff));
        let phi = f("X childR Y");
        assert_eq!(comp("a", &phi, &key(&["X"], q(Quad::Empty), q(Quad::Root))).unwrap(), q(Quad::Tt));
    }

    #[test]
    fn efin_single_node() {
        let phi = f("Efin X. a(X)");
        let one = PhiType::set([PhiType::tt()]);
        assert_eq!(comp("a", &phi, &key(&[], one.clone(), one.clone())).unwrap(), one);
        let both = PhiType::set([PhiType::tt(), PhiType::ff()]);
        assert_eq!(comp("b", &phi, &key(&[], one.clone(), one)).unwrap(), both);
    }

    #[test]
    fn shape_mismatch() {
        assert!(comp("a", &f("a(X)"), &key(&[], PhiType::quad(Quad::Tt), PhiType::tt())).is_err());
        assert!(tv(&f("Efin X. a(X)"), &PhiType::tt()).is_err());
    }

    #[test]
    fn empty_types() {
        assert_eq!(empty_tree_type(&f("a(X)")), PhiType::tt());
        assert_eq!(empty_tree_type(&f("X childL Y")), PhiType::quad(Quad::Empty));
        assert_eq!(empty_tree_type(&f("U(X). a(X)")).to_string(), "[{}:{tt};{1}:{}]");
    }

    #[test]
    fn tv_cases() {
        assert!(!tv(&f("X childL Y"), &PhiType::quad(Quad::Root)).unwrap());
        assert!(tv(&f("Efin X. a(X)"), &PhiType::set([PhiType::tt(), PhiType::ff()])).unwrap());
        assert!(!tv(&f("U(X). a(X)"), &empty_tree_type(&f("U(X). a(X)"))).unwrap());
    }

    #[test]
    fn finite_examples() {
        let mut v = Valuation::new();
        v.insert(Var::new("X"), [Address::root()].into());
        let t = compute_type_finite(&f("a(X)"), &parse_tree("a").unwrap(), &v).unwrap();
        assert_eq!(t, PhiType::tt());

        let phi = f("Efin Y. !(X <= Y)");
        let t = compute_type_finite(&phi, &parse_tree("a(b,.)").unwrap(), &Valuation::new()).unwrap();
        assert!(!tv(&phi, &t).unwrap());

        let phi = f("U(X). a(X)");
        let t = compute_type_finite(&phi, &parse_tree("a(a,a)").unwrap(), &Valuation::new()).unwrap();
        assert_eq!(t.as_indexed().unwrap()[1], PhiType::set([]));
    }

    #[test]
    fn outside_domain() {
        let mut v = Valuation::new();
        v.insert(Var::new("X"), [Address(vec![Dir::R])].into());
        assert!(matches!(
            compute_type_finite(&f("a(X)"), &parse_tree("a(b,.)").unwrap(), &v),
            Err(TypeError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn bounds() {
        assert_eq!(pht_bound(&f("a(X) & X childL Y")), Some(8));
        assert_eq!(pht_bound(&f("Efin X. a(X)")), Some(4));
        assert_eq!(pht_bound(&f("U(X). a(X)")), Some(16));
    }
}
