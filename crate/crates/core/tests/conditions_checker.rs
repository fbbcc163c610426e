use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use tolkit_core::{
    bounded_term_search, check_graph_inclusion, check_inclusion_over, check_witnesses, corpus, generate_condition,
    Caps, FiniteAlgebra, LabeledGraph, MaltsevCondition, Operation, RelationSet, Sampling, SearchMode,
    SearchStatus, Term,
};

const SUITE: [(&str, &str); 4] = [("a;b", "b;a"), ("a&b", "a;b"), ("a&(b;g)", "(a&b);(a&g)"), ("a;b;a", "b;a;b")];

fn term(s: &str) -> Term {
    Term::parse(s).unwrap()
}

fn condition(p: &str, q: &str) -> MaltsevCondition {
    let g = LabeledGraph::of_term(&term(p)).unwrap();
    let h = LabeledGraph::of_term(&term(q)).unwrap();
    generate_condition(&g, &h).unwrap()
}

fn binary_algebra(n: usize, table: Vec<usize>) -> FiniteAlgebra {
    FiniteAlgebra::new(
        n,
        vec![Operation {
            name: "f".into(),
            arity: 2,
            table,
        }],
    )
    .unwrap()
}

/// A ternary term operation with t(x,y,y) = x and t(x,x,y) = y, by closing
/// the projections under the operations as value tables.
fn naive_maltsev(alg: &FiniteAlgebra) -> bool {
    let n = alg.size();
    let len = n * n * n;
    let digit = |i: usize, j: usize| (i / n.pow(2 - j as u32)) % n;
    let mut clone: BTreeSet<Vec<usize>> = (0..3).map(|j| (0..len).map(|i| digit(i, j)).collect()).collect();
    loop {
        let mut next = clone.clone();
        for op in alg.operations() {
            for f in &clone {
                for g in &clone {
                    let args = |i: usize| match op.arity {
                        1 => vec![f[i]],
                        _ => vec![f[i], g[i]],
                    };
                    next.insert((0..len).map(|i| op.apply(n, &args(i))).collect());
                }
            }
        }
        if next == clone {
            break;
        }
        clone = next;
    }
    let at = |x: usize, y: usize, z: usize| (x * n + y) * n + z;
    clone
        .iter()
        .any(|f| (0..n).all(|x| (0..n).all(|y| f[at(x, y, y)] == x && f[at(x, x, y)] == y)))
}

#[test]
fn clone_search_decides_every_two_element_groupoid() {
    let c = condition("a;b", "b;a");
    for code in 0..16usize {
        let table: Vec<usize> = (0..4).map(|i| code >> i & 1).collect();
        let alg = binary_algebra(2, table.clone());
        let outcome = bounded_term_search(&alg, &c, SearchMode::ExhaustiveClone, &Caps::default()).unwrap();
        let expected = if naive_maltsev(&alg) { SearchStatus::Found } else { SearchStatus::NotFoundDefinitive };
        assert_eq!(outcome.status, expected, "table {table:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn depth_and_clone_searches_agree(table in prop::collection::vec(0usize..3, 9), depth in 0usize..3) {
        let alg = binary_algebra(3, table);
        let c = condition("a;b", "b;a");
        let caps = Caps::default();
        let bounded = bounded_term_search(&alg, &c, SearchMode::Depth(depth), &caps).unwrap();
        prop_assert_ne!(bounded.status, SearchStatus::NotFoundDefinitive);
        // Most ternary clones on three elements are huge; only small ones are compared.
        let small = Caps { max_clone: 2000, ..caps };
        let Ok(full) = bounded_term_search(&alg, &c, SearchMode::ExhaustiveClone, &small) else {
            return Ok(());
        };
        if bounded.status == SearchStatus::Found {
            prop_assert_eq!(full.status, SearchStatus::Found);
        }
        prop_assert_eq!(full.status == SearchStatus::Found, naive_maltsev(&alg));
    }
}

#[test]
fn witnesses_persist_to_squares() {
    let caps = Caps::default();
    for entry in corpus::all().into_iter().filter(|e| e.algebra.size() <= 3) {
        let square = entry.algebra.product(&entry.algebra).unwrap();
        for (p, q) in SUITE {
            let c = condition(p, q);
            let outcome = bounded_term_search(&entry.algebra, &c, SearchMode::ExhaustiveClone, &caps).unwrap();
            if let Some(a) = outcome.assignment {
                assert!(check_witnesses(&entry.algebra, &c, &a).unwrap().pass);
                assert!(check_witnesses(&square, &c, &a).unwrap().pass, "{} {p} ⊆ {q}", entry.id);
            }
        }
    }
}

#[test]
fn graph_and_term_verdicts_agree() {
    let caps = Caps::default();
    for entry in corpus::all() {
        for (p, q) in SUITE {
            let (tp, tq) = (term(p), term(q));
            let (g, h) = (LabeledGraph::of_term(&tp).unwrap(), LabeledGraph::of_term(&tq).unwrap());
            for set in [RelationSet::Congruences, RelationSet::Nest] {
                let relations = set.relations(&entry.algebra, &caps).unwrap();
                let by_term = check_inclusion_over(&tp, &tq, &relations, &caps, None).unwrap();
                let by_graph = check_graph_inclusion(&entry.algebra, &g, &h, set, &caps, None).unwrap();
                assert_eq!(by_term.holds, by_graph.holds, "{} {p} ⊆ {q} {set:?}", entry.id);
                assert_eq!(by_term.evaluated, by_graph.evaluated);
            }
        }
    }
}

#[test]
fn substituted_premises_get_harder() {
    let caps = Caps::default();
    for entry in corpus::all() {
        let relations = RelationSet::Nest.relations(&entry.algebra, &caps).unwrap();
        for (p, q) in [("a+b", "b;a;b"), ("a+b", "b;a"), ("a&(b+g)", "(a&b)+(a&g)")] {
            let p = term(p);
            let q = term(q);
            let mut previous = true;
            for n in 2..=6 {
                let holds = check_inclusion_over(&p.plus_substitute(n).unwrap(), &q, &relations, &caps, None)
                    .unwrap()
                    .holds;
                assert!(previous || !holds, "{} {p} n={n}", entry.id);
                previous = holds;
            }
        }
    }
}

#[test]
fn sampling_is_reproducible() {
    let set3 = FiniteAlgebra::bare(3).unwrap();
    let caps = Caps::default();
    let relations = RelationSet::Congruences.relations(&set3, &caps).unwrap();
    let run = |seed| {
        check_inclusion_over(&term("a;b"), &term("b;a"), &relations, &caps, Some(Sampling { samples: 3, seed }))
            .unwrap()
    };
    assert_eq!(run(9), run(9));
    assert!(!run(9).exhaustive);
}

#[test]
fn corpus_files_match_constructors() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    for entry in corpus::all() {
        let text = std::fs::read_to_string(dir.join(format!("{}.json", entry.id))).unwrap();
        let alg: FiniteAlgebra = serde_json::from_str(&text).unwrap();
        assert_eq!(alg, entry.algebra, "{}", entry.id);
        assert_eq!(corpus::by_id(entry.id), Some(alg));
    }
}
