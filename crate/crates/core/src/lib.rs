//! Model checking for weak MSO with a tuple unbounding quantifier over
//! finite and regular binary trees.
//!
//! Two independent decision engines are provided for regular trees:
//! a least-fixpoint type computation ([`regular`]) and an operation
//! pipeline built from tree transducers, SUP reflection and path-label
//! reflections ([`pipeline`]). Brute-force definitional oracles for
//! finite trees live in [`oracle`].
//!
//! The `examples/` directory of this crate holds one runnable program per
//! capability:
//!
//! * `finite_types`: parse a formula and a finite tree, compute its type
//!   bottom-up and compare with the brute-force oracle.
//! * `regular_check`: evaluate sentences on regular infinite trees.
//! * `sup_decide`: simultaneous unboundedness on nd-trees.
//! * `transducers`: run transducers over finite and regular trees.
//! * `pipeline_trace`: compile a sentence into an operation sequence and
//!   watch each stage.
//! * `separation`: the T1/T2 vault trees and the chain periodicity scan.
//!
//! ```
//! use wmsotup::{regular, syntax};
//! let rt = syntax::parse_regular_tree("root q; q = a(., q);").unwrap();
//! let phi = syntax::parse_formula("U(X). a(X)").unwrap();
//! assert!(regular::check_sentence(&phi, &rt).unwrap());
//! ```

pub mod cli;
pub mod corpus;
pub mod expressivity;
pub mod oracle;
pub mod pipeline;
pub mod regular;
pub mod sup;
pub mod syntax;
pub mod transducer;
pub mod types;

pub use syntax::{Dir, FiniteTree, Formula, Letter, RegularTree, Valuation, Var};
pub use types::PhiType;

use std::sync::OnceLock;

/// Reads the `WMSOTUP_GUARD` override for enumeration guards.
pub fn guard_override() -> Option<usize> {
    static GUARD: OnceLock<Option<usize>> = OnceLock::new();
    *GUARD.get_or_init(|| {
        std::env::var("WMSOTUP_GUARD")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    })
}
