mod common;

use common::atoms;
use proptest::prelude::*;
use wmsotup::corpus::{random_formula, random_regular, rng, FormulaConfig};
use wmsotup::expressivity::sup_formula;
use wmsotup::pipeline::{check_via_pipeline, compile, decoration, run, Op};
use wmsotup::regular::{check_sentence, compute_type_regular};
use wmsotup::syntax::{parse_formula, parse_regular_tree};
use wmsotup::types::{empty_tree_type, tv};
use wmsotup::RegularTree;

const MIXED: &str = "root q; q = a(p, q); p = b(., .);";

#[test]
fn unbounding_sequence_shape() {
    let phi = parse_formula("U(X). a(X)").unwrap();
    let c = compile(&phi, &parse_regular_tree(MIXED).unwrap()).unwrap();
    let kinds: Vec<&str> = c
        .ops
        .ops
        .iter()
        .map(|op| match op {
            Op::Apply(_) => "apply",
            Op::SupReflect(_) => "sup",
            Op::Reflect(_) => "reflect",
        })
        .collect();
    // decorate, F, SUP reflection, 2 types x 2 index sets, cleanup
    assert_eq!(kinds, ["apply", "apply", "sup", "reflect", "reflect", "reflect", "reflect", "apply"]);
}

#[test]
fn negation_reuses_the_sequence() {
    let rt = parse_regular_tree(MIXED).unwrap();
    let pos = compile(&parse_formula("a(X)").unwrap(), &rt).unwrap();
    let neg = compile(&parse_formula("!a(X)").unwrap(), &rt).unwrap();
    assert_eq!(pos.ops.len(), 1);
    assert_eq!(pos.ops.len(), neg.ops.len());
    assert_eq!(pos.output, neg.output);
}

#[test]
fn rerunning_the_sequence_reproduces_the_output() {
    let phi = parse_formula("U(X). a(X)").unwrap();
    let rt = parse_regular_tree("root q; q = a(., q);").unwrap();
    let c = compile(&phi, &rt).unwrap();
    assert_eq!(run(&c.ops, &rt).unwrap(), c.output);
    let root = c.output.letter(c.output.root()).unwrap();
    let table = compute_type_regular(&phi, &rt).unwrap();
    assert_eq!(&decoration(&phi, root).unwrap(), table.root_type());
}

#[test]
fn empty_tree_uses_the_empty_type() {
    for s in ["U(X). a(X)", "Efin X. !(X <= X)", "!(Efin X. a(X))"] {
        let phi = parse_formula(s).unwrap();
        let want = tv(&phi, &empty_tree_type(&phi)).unwrap();
        assert_eq!(check_via_pipeline(&phi, &RegularTree::bottom()).unwrap(), want, "{s}");
    }
}

#[test]
fn sup_formula_without_letters() {
    // with no letters the formula only asks for a member
    let phi = sup_formula(&[]).unwrap();
    for (text, want) in [
        ("root q; q = nd(s, e); s = a(., t); t = b(., q); e = c(.,.);", true),
        ("root q; q = nd(q, q);", false),
    ] {
        let rt = parse_regular_tree(text).unwrap();
        assert_eq!(check_sentence(&phi, &rt).unwrap(), want, "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cfg = FormulaConfig { max_qdepth: 2, sentence: true, ..FormulaConfig::small() };
        let phi = random_formula(&mut r, &cfg);
        let rt = random_regular(&mut r, &atoms(&["a", "b"]), 3, 0.3);
        prop_assert_eq!(check_via_pipeline(&phi, &rt).unwrap(), check_sentence(&phi, &rt).unwrap(), "{} on {}", phi, rt);
    }
}
