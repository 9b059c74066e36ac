//! Sentences on regular infinite trees with the fixpoint engine.

use wmsotup::regular::{check_sentence, compute_type_regular};
use wmsotup::syntax::{parse_formula, parse_regular_tree};

fn main() {
    let trees = [
        ("a-branch", "root q; q = a(., q);"),
        ("a/b comb", "root r; r = c(p, q); p = a(., p); q = b(., q);"),
        ("alternating", "root p; p = a(q, .); q = b(p, .);"),
    ];
    let sentences = [
        "U(X). a(X)",
        "U(X). b(X)",
        "U(X, Y). a(X) & b(Y)",
        "Efin X. Efin Y. a(X) & X childL Y & b(Y)",
        "!(Efin X. c(X) & !(X <= X))",
    ];
    for (name, text) in trees {
        let rt = parse_regular_tree(text).unwrap();
        println!("{name}: {}", text);
        for s in sentences {
            let phi = parse_formula(s).unwrap();
            println!("  {:<45} {}", s, check_sentence(&phi, &rt).unwrap());
        }
    }

    let rt = parse_regular_tree("root p; p = a(q, .); q = b(p, .);").unwrap();
    let phi = parse_formula("U(X). a(X)").unwrap();
    let table = compute_type_regular(&phi, &rt).unwrap();
    println!("\ntypes of {phi} per state:\n{}", table.dump());
}
