//! The transducer pipeline: a sentence is compiled into a sequence of
//! operations (transducer application, SUP reflection, path-label
//! reflection) whose execution decorates every node with the type of its
//! subtree, followed by a verdict transducer.
//!
//! Letters are decorated by appending components: an atomic or quantified
//! subformula adds one, `!ψ` reuses ψ's, and `ψ1 & ψ2` adds ψ1's then ψ2's.
//! Compilation is interleaved with execution, since the states of the
//! type-checking transducer are the ψ-types that actually occur.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::sup::{sup_reflect, SupError};
use crate::syntax::{Component, Dir, Formula, Letter, LetterSet, Node, RegularTree};
use crate::transducer::{
    build_cleanup, build_f, reflect_paths, var_marker, LabelPredicate, PathLabelReflection, Rhs, Transducer,
    TransducerError,
};
use crate::types::{empty_tree_type, tv, Composer, PhiType, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("formula has free variables: {0}")]
    NotSentence(String),
    #[error("pipeline input letters must be plain names, found {0}")]
    DecoratedInput(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: StageError },
    #[error("malformed decoration {letter} for {formula}")]
    Decoration { letter: String, formula: String },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Sup(#[from] SupError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StageError {
    #[error("letter {0} is outside the transducer's input alphabet")]
    Alphabet(String),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Sup(#[from] SupError),
}

#[derive(Clone, Debug)]
pub enum Op {
    Reflect(PathLabelReflection),
    SupReflect(BTreeSet<LetterSet>),
    Apply(Transducer),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Apply(t) => write!(f, "apply transducer with {} states", t.states().len()),
            Op::SupReflect(fam) => {
                f.write_str("sup-reflect")?;
                for a in fam {
                    let names: Vec<String> = a.iter().map(|l| l.to_string()).collect();
                    write!(f, " {{{}}}", names.join(","))?;
                }
                Ok(())
            }
            Op::Reflect(r) => {
                let path: String = r.path.iter().map(|d| d.to_string()).collect();
                let path = if path.is_empty() { "e".to_string() } else { path };
                match &r.predicate {
                    LabelPredicate::Is(l) => write!(f, "reflect {path} is {l}"),
                    LabelPredicate::QueryMarks(a) => {
                        let names: Vec<String> = a.iter().map(|l| l.to_string()).collect();
                        write!(f, "reflect {path} marks {{{}}}", names.join(","))
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OpSequence {
    pub ops: Vec<Op>,
}

impl OpSequence {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Executes one operation.
pub fn apply_op(op: &Op, rt: &RegularTree) -> Result<RegularTree, StageError> {
    match op {
        Op::Apply(t) => {
            let input = t.input_alphabet();
            if let Some(l) = rt.letters().into_iter().find(|l| !input.contains(l)) {
                return Err(StageError::Alphabet(l.to_string()));
            }
            Ok(t.apply_regular(rt)?)
        }
        Op::SupReflect(fam) => Ok(sup_reflect(rt, fam)?),
        Op::Reflect(r) => Ok(reflect_paths(rt, std::slice::from_ref(r))),
    }
}

/// Folds the operations over `rt`; runs of reflections are executed in
/// one pass. `observe` sees the tree after every transducer or SUP
/// reflection and once after each batch of reflections.
pub fn run_observed(
    ops: &OpSequence,
    rt: &RegularTree,
    mut observe: impl FnMut(usize, &Op, &RegularTree),
) -> Result<RegularTree, PipelineError> {
    let mut cur = rt.clone();
    let mut i = 0;
    while i < ops.ops.len() {
        if let Op::Reflect(_) = ops.ops[i] {
            let mut j = i;
            let mut batch = Vec::new();
            while let Some(Op::Reflect(r)) = ops.ops.get(j) {
                batch.push(r.clone());
                j += 1;
            }
            cur = reflect_paths(&cur, &batch);
            observe(j - 1, &ops.ops[j - 1], &cur);
            i = j;
        } else {
            cur = apply_op(&ops.ops[i], &cur).map_err(|source| PipelineError::Stage { stage: i, source })?;
            observe(i, &ops.ops[i], &cur);
            i += 1;
        }
    }
    Ok(cur)
}

pub fn run(ops: &OpSequence, rt: &RegularTree) -> Result<RegularTree, PipelineError> {
    run_observed(ops, rt, |_, _, _| {})
}

/// Number of components a formula's decoration occupies.
pub fn width(phi: &Formula) -> usize {
    match phi.node() {
        Node::Not(a) => width(a),
        Node::And(a, b) => width(a) + width(b),
        _ => 1,
    }
}

/// Reads a type back from decoration components.
pub fn read_type(phi: &Formula, comps: &[Component]) -> Option<PhiType> {
    match phi.node() {
        Node::Not(a) => read_type(a, comps),
        Node::And(a, b) => {
            let wa = width(a);
            if comps.len() < wa {
                return None;
            }
            Some(PhiType::pair(read_type(a, &comps[..wa])?, read_type(b, &comps[wa..])?))
        }
        _ => match comps.first()? {
            Component::Type(t) => Some(t.clone()),
            _ => None,
        },
    }
}

/// Type of `phi` carried by the last components of `l`.
pub fn decoration(phi: &Formula, l: &Letter) -> Result<PhiType, PipelineError> {
    let w = width(phi);
    let comps = l.components();
    let bad = || PipelineError::Decoration { letter: l.to_string(), formula: phi.to_string() };
    if comps.len() < w + 1 {
        return Err(bad());
    }
    read_type(phi, &comps[comps.len() - w..]).ok_or_else(bad)
}

/// Result of compiling a formula against a tree.
pub struct Compiled {
    pub ops: OpSequence,
    /// The input tree with every letter decorated by the formula's type.
    pub output: RegularTree,
    /// Intermediate trees, one per operation, when tracing.
    pub stages: Vec<RegularTree>,
}

struct Compiler {
    c: Composer,
    ops: Vec<Op>,
    tree: RegularTree,
    trace: bool,
    stages: Vec<RegularTree>,
}

impl Compiler {
    fn push(&mut self, op: Op) -> Result<(), PipelineError> {
        let stage = self.ops.len();
        self.tree = apply_op(&op, &self.tree).map_err(|source| PipelineError::Stage { stage, source })?;
        if self.trace {
            self.stages.push(self.tree.clone());
        }
        self.ops.push(op);
        Ok(())
    }

    fn push_reflections(&mut self, rs: Vec<PathLabelReflection>) {
        self.tree = reflect_paths(&self.tree, &rs);
        for r in rs {
            if self.trace {
                // intermediate trees of a batch are not materialised
                self.stages.push(self.tree.clone());
            }
            self.ops.push(Op::Reflect(r));
        }
    }

    fn letter_len(&self) -> usize {
        self.tree.letters().iter().next().map_or(1, |l| l.len())
    }

    fn compile(&mut self, phi: &Formula) -> Result<(), PipelineError> {
        match phi.node() {
            Node::Letter(..) | Node::Child(..) | Node::Subset(..) => {
                let e = empty_tree_type(phi);
                let t = Transducer::relabel(self.tree.letters(), |l| l.push(Component::Type(e.clone())));
                self.push(Op::Apply(t))
            }
            Node::Not(a) => self.compile(a),
            Node::And(a, b) => {
                self.compile(a)?;
                self.compile(b)
            }
            Node::U(xs, psi) => self.unbounding(xs, psi),
            Node::Efin(x, psi) => {
                self.unbounding(std::slice::from_ref(x), psi)?;
                let project = Transducer::relabel(self.tree.letters(), |l| {
                    let comps = l.components();
                    match comps.last() {
                        Some(Component::Type(t)) if t.as_indexed().is_some() => {
                            let rho_empty = t.as_indexed().unwrap()[0].clone();
                            l.prefix(comps.len() - 1).push(Component::Type(rho_empty))
                        }
                        _ => l.clone(),
                    }
                });
                self.push(Op::Apply(project))
            }
        }
    }

    fn unbounding(&mut self, xs: &[crate::syntax::Var], psi: &Formula) -> Result<(), PipelineError> {
        let l0 = self.letter_len();
        self.compile(psi)?;
        let wpsi = width(psi);
        let alphabet: Vec<(Letter, PhiType)> = self
            .tree
            .letters()
            .into_iter()
            .map(|l| decoration(psi, &l).map(|t| (l, t)))
            .collect::<Result<_, _>>()?;
        let f = build_f(&mut self.c, psi, xs, &alphabet)?;
        self.push(Op::Apply(f.transducer))?;
        let k = xs.len();
        let family: Vec<LetterSet> = (0..1usize << k)
            .map(|m| (0..k).filter(|j| m >> j & 1 == 1).map(|j| var_marker(&xs[j])).collect())
            .collect();
        self.push(Op::SupReflect(family.iter().cloned().collect()))?;
        let mut rs = Vec::new();
        for i in 0..f.types.len() {
            let mut path = vec![Dir::R; i + 2];
            path.push(Dir::L);
            for set in &family {
                rs.push(PathLabelReflection { path: path.clone(), predicate: LabelPredicate::QueryMarks(set.clone()) });
            }
        }
        self.push_reflections(rs);
        let cleanup = build_cleanup(&self.tree.letters(), l0 + wpsi, wpsi, &f.types, k);
        self.push(Op::Apply(cleanup))
    }
}

fn check_input(rt: &RegularTree) -> Result<(), PipelineError> {
    match rt.letters().into_iter().find(|l| l.len() != 1 || !matches!(l.components()[0], Component::Name(_))) {
        Some(l) => Err(PipelineError::DecoratedInput(l.to_string())),
        None => Ok(()),
    }
}

/// Compiles `phi` against `rt` and executes the sequence.
pub fn compile(phi: &Formula, rt: &RegularTree) -> Result<Compiled, PipelineError> {
    compile_with(phi, rt, false)
}

pub fn compile_with(phi: &Formula, rt: &RegularTree, trace: bool) -> Result<Compiled, PipelineError> {
    compile_in(Composer::new(), phi, rt, trace)
}

fn compile_in(c: Composer, phi: &Formula, rt: &RegularTree, trace: bool) -> Result<Compiled, PipelineError> {
    check_input(rt)?;
    let mut c = Compiler { c, ops: Vec::new(), tree: rt.clone(), trace, stages: Vec::new() };
    c.compile(phi)?;
    Ok(Compiled { ops: OpSequence { ops: c.ops }, output: c.tree, stages: c.stages })
}

/// One-state transducer mapping every node to `tt` or `ff` by the
/// decorated root type, and the empty tree by the empty-tree type.
pub fn verdict_transducer(phi: &Formula, alphabet: BTreeSet<Letter>) -> Result<Transducer, PipelineError> {
    let word = |b: bool| Letter::atom(if b { "tt" } else { "ff" });
    let mut t = Transducer::new(vec!["v".into()], 0, alphabet.clone());
    for l in alphabet {
        let b = tv(phi, &decoration(phi, &l)?)?;
        t.set(0, Some(l), Rhs::leaf(word(b)));
    }
    t.set(0, None, Rhs::leaf(word(tv(phi, &empty_tree_type(phi))?)));
    Ok(t)
}

fn require_sentence(phi: &Formula) -> Result<(), PipelineError> {
    let free = phi.free_vars();
    if free.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = free.iter().map(|v| v.to_string()).collect();
    Err(PipelineError::NotSentence(names.join(",")))
}

/// Full operation sequence for a sentence, verdict transducer included.
pub fn compile_sentence(phi: &Formula, rt: &RegularTree, trace: bool) -> Result<Compiled, PipelineError> {
    compile_sentence_in(Composer::new(), phi, rt, trace)
}

fn compile_sentence_in(c: Composer, phi: &Formula, rt: &RegularTree, trace: bool) -> Result<Compiled, PipelineError> {
    require_sentence(phi)?;
    let mut compiled = compile_in(c, phi, rt, trace)?;
    let v = verdict_transducer(phi, compiled.output.letters())?;
    let stage = compiled.ops.len();
    compiled.output =
        apply_op(&Op::Apply(v.clone()), &compiled.output).map_err(|source| PipelineError::Stage { stage, source })?;
    if trace {
        compiled.stages.push(compiled.output.clone());
    }
    compiled.ops.ops.push(Op::Apply(v));
    Ok(compiled)
}

pub fn check_via_pipeline(phi: &Formula, rt: &RegularTree) -> Result<bool, PipelineError> {
    check_via_pipeline_with(Composer::new(), phi, rt)
}

/// [`check_via_pipeline`] with a caller-supplied composer, e.g. one made by
/// [`Composer::with_budget`].
pub fn check_via_pipeline_with(c: Composer, phi: &Formula, rt: &RegularTree) -> Result<bool, PipelineError> {
    let out = compile_sentence_in(c, phi, rt, false)?.output;
    Ok(out.letter(out.root()).is_some_and(|l| l.is_atom("tt")))
}

/// Writes the stages of a traced run as `NN-op.txt`, `NN-tree.txt`
/// (regular tree) and `NN-prefix.txt` (depth-4 unfolding).
pub fn write_trace(dir: &Path, input: &RegularTree, compiled: &Compiled) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("00-tree.txt"), input.to_string())?;
    std::fs::write(dir.join("00-prefix.txt"), format!("{}\n", input.truncate(4)))?;
    for (i, (op, tree)) in compiled.ops.ops.iter().zip(&compiled.stages).enumerate() {
        let n = i + 1;
        let op_text = match op {
            Op::Apply(t) => format!("# {op}\n{t}"),
            _ => format!("{op}\n"),
        };
        std::fs::write(dir.join(format!("{n:02}-op.txt")), op_text)?;
        std::fs::write(dir.join(format!("{n:02}-tree.txt")), tree.to_string())?;
        std::fs::write(dir.join(format!("{n:02}-prefix.txt")), format!("{}\n", tree.truncate(4)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regular::compute_type_regular;
    use crate::syntax::{parse_formula, parse_regular_tree};

    fn branch() -> RegularTree {
        parse_regular_tree("root q; q = a(., q);").unwrap()
    }

    #[test]
    fn atomic_is_one_relabeling() {
        let c = compile(&parse_formula("a(X)").unwrap(), &branch()).unwrap();
        assert_eq!(c.ops.len(), 1);
        let n = compile(&parse_formula("!a(X)").unwrap(), &branch()).unwrap();
        assert_eq!(n.ops.len(), 1);
        assert_eq!(c.output.to_string(), n.output.to_string());
        assert_eq!(c.output.letter(0).unwrap().to_string(), "a|tt");
    }

    #[test]
    fn unbounding_op_count() {
        // a and b both occur, so the reachable a(X)-types are tt and ff
        let rt = parse_regular_tree("root q; q = a(p, q); p = b(., .);").unwrap();
        let c = compile(&parse_formula("U(X). a(X)").unwrap(), &rt).unwrap();
        let kinds: Vec<&str> = c
            .ops
            .ops
            .iter()
            .map(|o| match o {
                Op::Apply(_) => "apply",
                Op::SupReflect(_) => "sup",
                Op::Reflect(_) => "reflect",
            })
            .collect();
        assert_eq!(kinds, ["apply", "apply", "sup", "reflect", "reflect", "reflect", "reflect", "apply"]);
    }

    #[test]
    fn branch_verdicts() {
        assert!(check_via_pipeline(&parse_formula("U(X). a(X)").unwrap(), &branch()).unwrap());
        assert!(!check_via_pipeline(&parse_formula("U(X). b(X)").unwrap(), &branch()).unwrap());
    }

    #[test]
    fn decoration_matches_fixpoint_engine() {
        let rt = branch();
        let phi = parse_formula("U(X). a(X)").unwrap();
        let out = compile(&phi, &rt).unwrap().output;
        let table = compute_type_regular(&phi, &rt).unwrap();
        assert_eq!(&decoration(&phi, out.letter(out.root()).unwrap()).unwrap(), table.root_type());
    }

    #[test]
    fn bottom_tree_uses_empty_type() {
        let bot = RegularTree::bottom();
        let phi = parse_formula("!U(X). a(X)").unwrap();
        assert!(check_via_pipeline(&phi, &bot).unwrap());
    }

    #[test]
    fn empty_sequence_is_identity() {
        assert_eq!(run(&OpSequence::default(), &branch()).unwrap().to_string(), branch().to_string());
    }

    #[test]
    fn decorated_input_rejected() {
        let rt = parse_regular_tree("root q; q = a|b(., q);").unwrap();
        assert!(matches!(
            check_via_pipeline(&parse_formula("U(X). a(X)").unwrap(), &rt),
            Err(PipelineError::DecoratedInput(_))
        ));
    }
}
