mod common;

use std::collections::BTreeSet;

use common::{all_valuations, atoms};
use proptest::prelude::*;
use wmsotup::corpus::{random_regular, random_transducer, rng};
use wmsotup::oracle::brute_type;
use wmsotup::sup::{count_profiles, nd_language, ND_BOT};
use wmsotup::syntax::{parse_formula, parse_tree};
use wmsotup::transducer::{build_f, parse_transducer, var_marker, Rhs, Transducer};
use wmsotup::types::{Composer, PhiType};
use wmsotup::{FiniteTree, Letter, Var};

fn cut(t: &FiniteTree, d: usize) -> FiniteTree {
    match (t.root(), d) {
        (None, _) | (_, 0) => FiniteTree::empty(),
        (Some(n), d) => FiniteTree::node(n.letter.clone(), cut(&n.left, d - 1), cut(&n.right, d - 1)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // Bare calls consume input without output, at most |Q| in a row, so
    // output depth D only reads input depth below (D + 1) * (|Q| + 1).
    #[test]
    fn regular_application_commutes_with_truncation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ab = atoms(&["a", "b"]);
        let rt = random_regular(&mut r, &ab, 3, 0.3);
        let tr = random_transducer(&mut r, &ab, &atoms(&["a", "b", "c"]), 3);
        tr.validate().unwrap();
        let d = 4;
        let deep = (d + 1) * (tr.states().len() + 1);
        let lhs = tr.apply_regular(&rt).unwrap().truncate(d);
        let rhs = cut(&tr.apply_finite(&rt.truncate(deep)).unwrap(), d);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn random_transducers_validate(seed in any::<u64>()) {
        let ab = atoms(&["a", "b"]);
        prop_assert!(random_transducer(&mut rng(seed), &ab, &ab, 5).validate().is_ok());
    }
}

#[test]
fn identity_on_regular_trees() {
    let ab: BTreeSet<Letter> = atoms(&["a", "b"]).into_iter().collect();
    let id = Transducer::identity(ab.clone());
    let mut r = rng(12);
    for _ in 0..50 {
        let rt = random_regular(&mut r, &atoms(&["a", "b"]), 4, 0.3);
        assert_eq!(id.apply_regular(&rt).unwrap().truncate(8), rt.truncate(8));
    }
}

#[test]
fn doubling_is_nonlinear() {
    let text = "states q; initial q;
        delta q a -> a(a((q,L),(q,L)),a((q,R),(q,R)));
        delta q b -> b;
        delta q bot -> .;";
    let d = parse_transducer(text).unwrap();
    d.validate().unwrap();
    assert_eq!(d.apply_finite(&parse_tree("a(b,.)").unwrap()).unwrap().to_string(), "a(a(b,b),a)");
}

#[test]
fn epsilon_cycles_are_rejected() {
    let text = "states p q; initial p;
        delta p a -> (q,L); delta p bot -> .;
        delta q a -> (p,R); delta q bot -> .;";
    assert!(parse_transducer(text).unwrap().validate().is_err());
}

fn letter_with_type(name: &str, ty: &PhiType) -> Letter {
    Letter::from_components(vec![
        wmsotup::syntax::Component::Name(name.into()),
        wmsotup::syntax::Component::Type(ty.clone()),
    ])
}

#[test]
fn type_transducer_for_a_letter() {
    let psi = parse_formula("a(X)").unwrap();
    let xs = [Var::new("X")];
    let (tt, ff) = (PhiType::tt(), PhiType::ff());
    let alphabet = vec![(letter_with_type("a", &tt), tt.clone()), (letter_with_type("b", &tt), tt.clone())];
    let f = build_f(&mut Composer::new(), &psi, &xs, &alphabet).unwrap();
    let mut types = f.types.clone();
    types.sort();
    let mut want = vec![tt.clone(), ff.clone()];
    want.sort();
    assert_eq!(types, want);
    assert_eq!(f.transducer.states().len(), 3);
    let state = |t: &PhiType| f.types.iter().position(|x| x == t).unwrap() + 1;
    assert_eq!(f.transducer.rule(state(&tt), None), Some(&Rhs::bot()));
    assert_eq!(f.transducer.rule(state(&ff), None), Some(&Rhs::leaf(Letter::atom(ND_BOT))));
    f.transducer.validate().unwrap();

    // a single a-node: X = {} and X = {root} both satisfy a(X)
    let t1 = FiniteTree::leaf(letter_with_type("a", &tt));
    let marker = var_marker(&xs[0]);
    let counts = |ty: &PhiType| -> BTreeSet<usize> {
        let out = f.transducer.apply_finite_from(state(ty), &t1).unwrap();
        nd_language(&out, 100).trees.iter().map(|v| v.count(&marker)).collect()
    };
    let plain = parse_tree("a").unwrap();
    for (ty, name) in [(&tt, "tt"), (&ff, "ff")] {
        let brute: BTreeSet<usize> = all_valuations(&plain, &xs)
            .into_iter()
            .filter(|v| brute_type(&psi, &plain, v).unwrap() == *ty)
            .map(|v| v[&xs[0]].len())
            .collect();
        assert_eq!(counts(ty), brute, "{name}");
    }
    assert_eq!(counts(&tt), [0, 1].into());
    let out = f.transducer.apply_finite_from(state(&tt), &t1).unwrap();
    assert_eq!(count_profiles(&out, &[marker], 5), [vec![0], vec![1]].into());
}
