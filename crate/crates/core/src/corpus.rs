//! The small algebras shipped as `corpus/*.json`.

use crate::algebra::{FiniteAlgebra, Operation};

pub struct CorpusEntry {
    pub id: &'static str,
    pub algebra: FiniteAlgebra,
}

fn binary(name: &str, size: usize, f: impl Fn(usize, usize) -> usize) -> Operation {
    let table = (0..size)
        .flat_map(|x| (0..size).map(move |y| (x, y)))
        .map(|(x, y)| f(x, y))
        .collect();
    Operation {
        name: name.into(),
        arity: 2,
        table,
    }
}

/// ℤₙ with `add` only.
pub fn cyclic_group_add_only(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::new(n, vec![binary("add", n, |x, y| (x + y) % n)]).expect("valid tables")
}

/// ℤₙ in the group signature: binary `add`, unary `neg`.
pub fn cyclic_group(n: usize) -> FiniteAlgebra {
    let neg = Operation {
        name: "neg".into(),
        arity: 1,
        table: (0..n).map(|x| (n - x) % n).collect(),
    };
    FiniteAlgebra::new(n, vec![binary("add", n, |x, y| (x + y) % n), neg]).expect("valid tables")
}

fn lattice(size: usize, leq: impl Fn(usize, usize) -> bool) -> FiniteAlgebra {
    let glb = |x: usize, y: usize| {
        (0..size)
            .filter(|&z| leq(z, x) && leq(z, y))
            .find(|&z| (0..size).all(|w| !(leq(w, x) && leq(w, y)) || leq(w, z)))
            .expect("lattice order")
    };
    let lub = |x: usize, y: usize| {
        (0..size)
            .filter(|&z| leq(x, z) && leq(y, z))
            .find(|&z| (0..size).all(|w| !(leq(x, w) && leq(y, w)) || leq(z, w)))
            .expect("lattice order")
    };
    FiniteAlgebra::new(size, vec![binary("meet", size, glb), binary("join", size, lub)])
        .expect("valid tables")
}

/// The chain `0 < 1 < … < k-1` as a lattice.
pub fn chain(k: usize) -> FiniteAlgebra {
    lattice(k, |x, y| x <= y)
}

/// The pentagon: `0 < 1 < 2 < 4`, `0 < 3 < 4`, with 3 incomparable to 1 and 2.
pub fn pentagon() -> FiniteAlgebra {
    lattice(5, |x, y| {
        x == y || x == 0 || y == 4 || (x == 1 && y == 2)
    })
}

pub fn all() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry { id: "set2", algebra: FiniteAlgebra::bare(2).expect("valid") },
        CorpusEntry { id: "set3", algebra: FiniteAlgebra::bare(3).expect("valid") },
        CorpusEntry { id: "z2", algebra: cyclic_group_add_only(2) },
        CorpusEntry { id: "z4", algebra: cyclic_group(4) },
        CorpusEntry { id: "chain2", algebra: chain(2) },
        CorpusEntry { id: "chain3", algebra: chain(3) },
        CorpusEntry { id: "n5", algebra: pentagon() },
    ]
}

pub fn by_id(id: &str) -> Option<FiniteAlgebra> {
    all().into_iter().find(|e| e.id == id).map(|e| e.algebra)
}
