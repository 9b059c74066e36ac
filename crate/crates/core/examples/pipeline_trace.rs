//! Compile a sentence into transducers, SUP reflections and path
//! reflections, then print each stage.

use wmsotup::pipeline::{compile_sentence, run_observed};
use wmsotup::regular::check_sentence;
use wmsotup::syntax::{parse_formula, parse_regular_tree};

fn main() {
    let rt = parse_regular_tree("root q; q = a(p, q); p = b(., .);").unwrap();
    let phi = parse_formula("U(X). a(X)").unwrap();
    let compiled = compile_sentence(&phi, &rt, false).unwrap();
    println!("{} operations for {phi}", compiled.ops.len());
    run_observed(&compiled.ops, &rt, |i, op, t| {
        println!("--- {:>2} {op}: {} states", i + 1, t.len());
        let text = t.to_string();
        for line in text.lines().take(4) {
            println!("    {line}");
        }
    })
    .unwrap();
    let root = compiled.output.letter(compiled.output.root()).unwrap();
    println!("root letter {root}, fixpoint engine says {}", check_sentence(&phi, &rt).unwrap());
}
