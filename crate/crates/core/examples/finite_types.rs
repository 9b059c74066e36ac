//! Bottom-up types on a finite tree, checked against brute force.
//!
//! cargo run --example finite_types -- "a(b,a(.,b))" "Efin X. Efin Y. X childR Y & b(Y)"

use wmsotup::oracle::{brute_type, eval_semantics};
use wmsotup::syntax::{parse_formula, parse_tree};
use wmsotup::types::{compute_type_finite, pht_bound, tv};
use wmsotup::Valuation;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tree = args.first().map_or("a(b,a(.,b))", String::as_str);
    let formula = args.get(1).map_or("Efin X. Efin Y. X childR Y & b(Y)", String::as_str);
    let t = parse_tree(tree).expect("tree");
    let phi = parse_formula(formula).expect("formula");
    let v = Valuation::new();

    let ty = compute_type_finite(&phi, &t, &v).expect("type");
    println!("tree     {t}");
    println!("formula  {phi}");
    println!("type     {ty}");
    match pht_bound(&phi) {
        Some(n) => println!("at most  {n} types"),
        None => println!("at most  (too many to count)"),
    }
    if phi.is_sentence() {
        println!("tv       {}", tv(&phi, &ty).unwrap());
    }
    let brute = brute_type(&phi, &t, &v).expect("brute force");
    println!("brute    {}", if brute == ty { "agrees" } else { "DISAGREES" });
    if phi.is_sentence() {
        println!("holds    {}", eval_semantics(&phi, &t, &v).unwrap());
    }
}
