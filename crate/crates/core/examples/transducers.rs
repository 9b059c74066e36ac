//! Top-down transducers on finite and regular trees, and the type
//! transducer for `U(X). a(X)`.

use wmsotup::syntax::{parse_formula, parse_regular_tree, parse_tree, Component};
use wmsotup::transducer::{build_f, parse_transducer};
use wmsotup::types::{Composer, PhiType};
use wmsotup::{Letter, Var};

fn main() {
    let doubling = parse_transducer(
        "states q; initial q;
         delta q a -> a(a((q,L),(q,L)),a((q,R),(q,R)));
         delta q b -> b;
         delta q bot -> .;",
    )
    .unwrap();
    doubling.validate().unwrap();
    println!("{doubling}");
    let t = parse_tree("a(b,a(b,.))").unwrap();
    println!("finite:  {t}  =>  {}", doubling.apply_finite(&t).unwrap());
    let rt = parse_regular_tree("root q; q = a(b, q); b = b(., .);").unwrap();
    let out = doubling.apply_regular(&rt).unwrap();
    println!("regular: {}=>\n{}", rt, out.minimize());

    let psi = parse_formula("a(X)").unwrap();
    let tt = PhiType::tt();
    let letter = |n: &str| Letter::from_components(vec![Component::Name(n.into()), Component::Type(tt.clone())]);
    let alphabet = vec![(letter("a"), tt.clone()), (letter("b"), tt.clone())];
    let f = build_f(&mut Composer::new(), &psi, &[Var::new("X")], &alphabet).unwrap();
    println!("type transducer for {psi}: {} states over types {:?}", f.transducer.states().len(), f.types);
    println!("{}", f.transducer);
}
