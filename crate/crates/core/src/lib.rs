//! Tolerances of finite algebras.
//!
//! The crate computes with binary relations on small finite universes:
//! tolerances and congruences of an algebra, the representable, weakly
//! representable and nest-representable tolerances, `{∘, ∩, +}`-terms and
//! their labeled graphs, and the Maltsev conditions attached to graph
//! inclusions. The [`checker`] module ties these together into identity
//! checks and a per-algebra consistency report.

pub mod algebra;
pub mod caps;
pub mod checker;
pub mod classify;
pub mod condition;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod relation;
pub mod term;

pub use algebra::{enumerate_closed, generate_closed, is_compatible, ClosureMode, FiniteAlgebra, Operation};
pub use caps::Caps;
pub use error::{Error, Result};
pub use relation::{BinaryRelation, Shape};
pub use graph::{is_regular_term, LabeledGraph, TupleRelation};
pub use term::{Bindings, Term, TermOp};
pub use classify::{
    is_representable, is_weakly_representable, nest_representable_set, replay_derivation, NestDerivation,
    ToleranceCatalog,
};
pub use condition::{
    bounded_term_search, check_witnesses, generate_condition, Identity, MaltsevCondition, SearchMode, SearchOutcome,
    SearchStatus, WitnessAssignment, WitnessReport, WitnessTerm,
};
pub use checker::{
    check_congruence_inclusion, check_graph_inclusion, check_inclusion_over, check_nest_inclusion, plus_free_forms,
    theorem_report, PlusFreeForms,
    MaltsevStatus, RelationSet, Sampling, TheoremCase, TheoremOptions, TheoremReport, Verdict,
};
