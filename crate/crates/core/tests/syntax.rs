use proptest::prelude::*;
use wmsotup::corpus::{random_formula, random_nd_tree, random_regular, random_transducer, random_tree, rng, FormulaConfig};
use wmsotup::syntax::{parse_formula, parse_regular_tree, parse_tree, Node};
use wmsotup::transducer::parse_transducer;
use wmsotup::Letter;

fn letters() -> Vec<Letter> {
    ["a", "b", "nd", "a|tt|ff"].iter().map(|s| Letter::parse_token(s).unwrap()).collect()
}

proptest! {
    #[test]
    fn tree_round_trip(seed in any::<u64>(), n in 0usize..20) {
        let t = random_tree(&mut rng(seed), &letters(), n);
        let s = t.to_string();
        prop_assert_eq!(parse_tree(&s).unwrap(), t);
    }

    #[test]
    fn regular_round_trip(seed in any::<u64>(), states in 1usize..8, nd in any::<bool>()) {
        let mut r = rng(seed);
        let rt = if nd { random_nd_tree(&mut r, &letters(), states) } else { random_regular(&mut r, &letters(), states, 0.3) };
        let back = parse_regular_tree(&rt.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), rt.to_string());
        prop_assert_eq!(back, rt);
    }

    #[test]
    fn formula_round_trip(seed in any::<u64>(), sentence in any::<bool>()) {
        let cfg = FormulaConfig { max_size: 16, sentence, ..FormulaConfig::small() };
        let f = random_formula(&mut rng(seed), &cfg);
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn transducer_round_trip(seed in any::<u64>()) {
        let l = letters();
        let t = random_transducer(&mut rng(seed), &l[..2], &l, 5);
        prop_assert_eq!(parse_transducer(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn regular_truncation_is_prefix(seed in any::<u64>(), d in 0usize..6) {
        let rt = random_regular(&mut rng(seed), &letters(), 4, 0.3);
        let deep = rt.truncate(d + 1);
        let shallow = rt.truncate(d);
        for a in shallow.addresses() {
            prop_assert_eq!(shallow.letter_at(&a), deep.letter_at(&a));
        }
    }
}

#[test]
fn tree_examples() {
    assert!(parse_tree(".").unwrap().is_empty());
    let t = parse_tree("a(b,.)").unwrap();
    assert_eq!(t.size(), 2);
    assert_eq!(t.root().unwrap().left.root().unwrap().letter, Letter::atom("b"));
    assert!(t.root().unwrap().right.is_empty());
    assert_eq!(parse_tree("a(b(.,.),c)").unwrap().size(), 3);
}

#[test]
fn formula_scope_is_maximal() {
    let f = parse_formula("Efin X. a(X) & b(X)").unwrap();
    match f.node() {
        Node::Efin(_, body) => assert!(matches!(body.node(), Node::And(..))),
        _ => panic!("expected Efin at the top: {f}"),
    }
    let f = parse_formula("U(X1,X2). Efin Y. a(X1) & b(X2) & X1 <= Y & X2 <= Y").unwrap();
    assert!(f.is_sentence());
    assert_eq!(f.quantifier_depth(), 2);
}

#[test]
fn regular_examples() {
    let rt = parse_regular_tree("root q; q = a(., q);").unwrap();
    assert_eq!(rt.truncate(0).to_string(), ".");
    assert_eq!(rt.truncate(2).to_string(), "a(.,a)");
    let rt = parse_regular_tree("root q; q = a(q, q);").unwrap();
    assert_eq!(rt.truncate(2).to_string(), "a(a,a)");
    let rt = parse_regular_tree("root q; q = nd(p, e); p = a(., q); e = c(.,.);").unwrap();
    assert_eq!(rt.truncate(4).to_string(), "nd(a(.,nd(a,c)),c)");
}

#[test]
fn parse_errors_carry_locations() {
    for bad in ["a(b,", "a(,)", "a b"] {
        assert!(parse_tree(bad).is_err(), "{bad}");
    }
    let e = parse_formula("Efin . a(X)").unwrap_err();
    assert!(!e.to_string().is_empty());
    assert!(parse_regular_tree("root q; q = a(., p);").is_err());
}
