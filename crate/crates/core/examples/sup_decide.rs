//! Simultaneous unboundedness on nd-trees, with the language seen
//! through truncations.

use std::collections::BTreeSet;

use wmsotup::sup::{count_profiles, decide_sup, nd_language, tree_to_grammar, ND_BOT};
use wmsotup::syntax::{parse_regular_tree, LetterSet};
use wmsotup::Letter;

fn set(names: &[&str]) -> LetterSet {
    names.iter().map(|n| Letter::atom(n)).collect()
}

fn main() {
    let rt = parse_regular_tree("root q; q = nd(s, e); s = a(., t); t = b(., q); e = c(.,.);").unwrap();
    let g = tree_to_grammar(&rt);
    println!("{rt}\ngrammar:\n{g}");
    for a in [set(&[]), set(&["a"]), set(&["a", "b"]), set(&["c"]), set(&["a", "c"])] {
        let names: Vec<&str> = a.iter().map(|l| l.base()).collect();
        println!("SUP {{{}}} = {}", names.join(","), decide_sup(&g, &a).unwrap());
    }

    let bot = Letter::atom(ND_BOT);
    let letters = [Letter::atom("a"), Letter::atom("b"), Letter::atom("c")];
    for depth in [2, 5, 8, 11] {
        let t = rt.truncate_with(depth, Some(&bot));
        let members: BTreeSet<String> = nd_language(&t, 100).trees.iter().map(|v| v.to_string()).collect();
        let profiles = count_profiles(&t, &letters, 10);
        println!("depth {depth:>2}: {} members, counts (a,b,c) {:?}", members.len(), profiles);
    }
}
