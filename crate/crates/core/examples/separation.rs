//! The T1/T2 trunk trees and the chain periodicity scan.

use wmsotup::expressivity::{chain_period_scan, make_t, minmax_statistic, T12Spec, Which};
use wmsotup::syntax::parse_formula;
use wmsotup::Letter;

fn main() {
    let ab = [Letter::atom("a"), Letter::atom("b")];
    for p in 1..=3 {
        print!("p={p}  depth:");
        for depth in (p..=8 * p).step_by(p) {
            print!(" {depth:>2}");
        }
        println!();
        for which in [Which::T1, Which::T2] {
            print!("  {which:?}      ");
            for depth in (p..=8 * p).step_by(p) {
                let t = make_t(T12Spec { which, p, depth }).unwrap();
                print!(" {:>2}", minmax_statistic(&t, &ab, 10_000).unwrap());
            }
            println!();
        }
    }

    for s in ["a(X)", "Efin Y. Y childL X & a(Y)", "b(X) & Efin Y. X childL Y"] {
        let psi = parse_formula(s).unwrap();
        let r = chain_period_scan(&psi, 12, 12, "a", "b").unwrap();
        match r.stable {
            Some((m0, n0, p)) => println!("{s}: period {p} from ({m0},{n0}), {} reachable types", r.reachable),
            None => println!("{s}: no period in the box"),
        }
    }
}
