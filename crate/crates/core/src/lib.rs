//! Alternating bottom-up automata over unordered, edge-labelled data trees.

pub mod aut;
pub mod auta;
pub mod autc;
pub mod auto;
pub mod autp;
pub mod dfa;
pub mod error;
pub mod filter;
pub mod oracle;
pub mod pattern;
pub mod presburger;
pub mod schema;
pub mod syntax;
pub mod tree;

pub use aut::{Answer, Aut, Emptiness, EvalStats, HorizontalClass, Rule};
pub use error::{Error, Result};
pub use filter::{Atom, Filter, StateId, StateSet};
pub use pattern::{PatternAcceptor, Regex};
pub use presburger::{AnnotatedMultiset, CountingExpr, Formula, SatResult};
pub use tree::{tree_equal, Arity, DataTree, DataValue};
