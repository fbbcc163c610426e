//! Inputs shared by the benchmarks.

use tolkit_core::{generate_condition, BinaryRelation, LabeledGraph, MaltsevCondition, Term};

/// A reflexive relation on `n` elements with a deterministic scatter of pairs.
pub fn scattered(n: usize, salt: usize) -> BinaryRelation {
    let pairs = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| (x * 7 + y * 13 + salt).is_multiple_of(5));
    BinaryRelation::reflexive_with(n, pairs).expect("in range")
}

pub fn graph(term: &str) -> LabeledGraph {
    LabeledGraph::of_term(&Term::parse(term).expect("term")).expect("plus-free")
}

/// The condition for `a;b ⊆ b;a`.
pub fn permutability() -> MaltsevCondition {
    generate_condition(&graph("a;b"), &graph("b;a")).expect("regular")
}
