//! Conjunctive queries over word equations.
//!
//! The crate decides acyclicity of FC-CQs (conjunctive queries whose atoms are
//! word equations `x = α` and regular constraints `x in /γ/`), builds acyclic
//! binary decompositions with join trees, evaluates them with semi-join
//! reduction over a suffix-array word index, and compiles regex-based document
//! spanners into equivalent queries.

pub mod cqdecomp;
pub mod eval;
pub mod hypergraph;
pub mod normalize;
pub mod pattern;
pub mod query;
pub mod regex;
pub mod spanner;
pub mod strings;

pub use query::{FcCq, Pattern, RegexConstraint, Symbol, Variable, WordEquation};
pub use strings::{Span, WordIndex};
