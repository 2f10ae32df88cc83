//! Document spanners as variable-set automata.
//!
//! The crate compiles capture-variable regex formulas into sequential
//! variable-set automata, implements the schemaless spanner algebra on
//! those automata (union, concatenation, Cartesian product, natural join,
//! intersection, difference, projection), and evaluates the skyline
//! operator — the maximal extracted mappings under a domination rule —
//! both by direct filtering and by compiling the rule into the automaton.
//! It also exports the Boolean abstraction of a spanner on a document as a
//! nondeterministic read-once branching program, and ships generators for
//! the SAT reductions and blowup families used to stress those components.

pub mod autops;
pub mod domination;
pub mod error;
pub mod eval;
pub mod genbench;
pub mod nrobp;
pub mod regexformula;
pub mod skyline;
pub mod spancore;

pub use error::{Error, Result};
