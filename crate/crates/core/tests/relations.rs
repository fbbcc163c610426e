use std::collections::BTreeSet;

use proptest::prelude::*;
use tolkit_core::BinaryRelation;

fn relation(n: usize) -> impl Strategy<Value = BinaryRelation> {
    prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
        let pairs = (0..n * n).filter(|&i| bits[i]).map(|i| (i / n, i % n));
        BinaryRelation::from_pairs(n, pairs).unwrap()
    })
}

fn reflexive(n: usize) -> impl Strategy<Value = BinaryRelation> {
    relation(n).prop_map(move |r| r.join(&BinaryRelation::diagonal(n).unwrap()).unwrap())
}

fn sized<S: Strategy, F: Fn(usize) -> S>(f: F) -> impl Strategy<Value = (S::Value, S::Value, S::Value)> {
    (1usize..=4).prop_flat_map(move |n| (f(n), f(n), f(n)))
}

fn naive_compose(a: &BinaryRelation, b: &BinaryRelation) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for (x, y) in a.pairs() {
        for (y2, z) in b.pairs() {
            if y == y2 {
                out.insert((x, z));
            }
        }
    }
    out
}

/// Transitive closure.
fn warshall(n: usize, r: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut m = vec![vec![false; n]; n];
    for &(x, y) in r {
        m[x][y] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if m[i][k] && m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| m[i][j]).collect()
}

proptest! {
    #[test]
    fn composition_matches_definition((a, b, _) in sized(relation)) {
        let c: BTreeSet<_> = a.compose(&b).unwrap().pairs().collect();
        prop_assert_eq!(c, naive_compose(&a, &b));
    }

    #[test]
    fn composition_is_associative((a, b, c) in sized(relation)) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn converse_laws((a, b, _) in sized(relation)) {
        prop_assert_eq!(a.converse().converse(), a.clone());
        prop_assert_eq!(
            a.compose(&b).unwrap().converse(),
            b.converse().compose(&a.converse()).unwrap()
        );
        prop_assert_eq!(a.meet(&b).unwrap().converse(), a.converse().meet(&b.converse()).unwrap());
    }

    #[test]
    fn lattice_laws((a, b, c) in sized(relation)) {
        prop_assert_eq!(a.meet(&b).unwrap(), b.meet(&a).unwrap());
        prop_assert_eq!(a.join(&b).unwrap(), b.join(&a).unwrap());
        prop_assert_eq!(a.meet(&a.join(&b).unwrap()).unwrap(), a.clone());
        prop_assert!(a.meet(&b).unwrap().is_subset(&a).unwrap());
        // Composition distributes over union.
        prop_assert_eq!(
            a.compose(&b.join(&c).unwrap()).unwrap(),
            a.compose(&b).unwrap().join(&a.compose(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn composition_is_monotone((a, b, c) in sized(relation)) {
        let bigger = b.join(&c).unwrap();
        prop_assert!(a.compose(&b).unwrap().is_subset(&a.compose(&bigger).unwrap()).unwrap());
        prop_assert!(b.compose(&a).unwrap().is_subset(&bigger.compose(&a).unwrap()).unwrap());
    }

    #[test]
    fn alternating_powers((a, b, _) in sized(relation), k in 1usize..6) {
        let mut expected = a.clone();
        for i in 1..k {
            expected = expected.compose(if i % 2 == 0 { &a } else { &b }).unwrap();
        }
        prop_assert_eq!(a.alt_power(&b, k).unwrap(), expected);
        prop_assert_eq!(a.alt_power(&b, k + 1).unwrap(), a.alt_power(&b, k).unwrap().compose(if k % 2 == 0 { &a } else { &b }).unwrap());
    }

    #[test]
    fn plus_join_closed_form((a, b, _) in sized(relation)) {
        // Odd powers are a∘(b∘a)ʲ, even powers are (a∘b)ʲ with j ≥ 1.
        let n = a.size();
        let ba = naive_compose(&b, &a);
        let ab = naive_compose(&a, &b);
        let mut star = warshall(n, &ba);
        star.extend((0..n).map(|x| (x, x)));
        let odd = naive_compose(&a, &BinaryRelation::from_pairs(n, star).unwrap());
        let mut expected: BTreeSet<_> = warshall(n, &ab);
        expected.extend(odd);
        let got: BTreeSet<_> = a.plus_join(&b).unwrap().pairs().collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn plus_join_of_reflexive_relations((a, b, _) in sized(reflexive)) {
        let p = a.plus_join(&b).unwrap();
        prop_assert!(a.join(&b).unwrap().is_subset(&p).unwrap());
        prop_assert!(p.is_transitive());
        prop_assert_eq!(p.clone(), b.plus_join(&a).unwrap());
    }

    #[test]
    fn json_round_trip((a, _, _) in sized(relation)) {
        let text = serde_json::to_string(&a).unwrap();
        let back: BinaryRelation = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &a);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
