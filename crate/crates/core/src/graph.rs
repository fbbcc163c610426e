//! Edge-labeled graphs with distinguished vertices.
//!
//! `G(R₁, …, Rₙ)` is the set of tuples `(a₁, …, a_h)` for which the vertices
//! can be mapped into the universe so that distinguished vertex `ℓ` goes to
//! `a_ℓ` and every edge labeled `α` lands in the relation bound to `α`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{BinaryRelation, MAX_UNIVERSE};
use crate::term::{Bindings, Term, TermOp};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub label: String,
}

/// Invariants: edges are undirected with `u < v` (no self-loops), sorted and
/// free of duplicates; every label is declared; at least one distinguished
/// vertex. Distinguished vertices may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct LabeledGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    distinguished: Vec<usize>,
    labels: Vec<String>,
}

/// On-disk form: `{"vertices", "edges": [[u, v, "label"]], "distinguished", "labels"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, String)>,
    pub distinguished: Vec<usize>,
    pub labels: Vec<String>,
}

impl TryFrom<GraphFile> for LabeledGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        LabeledGraph::new(f.vertices, f.edges, f.distinguished, f.labels)
    }
}

impl From<LabeledGraph> for GraphFile {
    fn from(g: LabeledGraph) -> Self {
        GraphFile {
            vertices: g.vertex_count,
            edges: g.edges.into_iter().map(|e| (e.u, e.v, e.label)).collect(),
            distinguished: g.distinguished,
            labels: g.labels,
        }
    }
}

impl LabeledGraph {
    pub fn new(
        vertex_count: usize,
        edges: Vec<(usize, usize, String)>,
        distinguished: Vec<usize>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidGraph(msg));
        if vertex_count == 0 {
            return bad("a graph needs at least one vertex".into());
        }
        if distinguished.is_empty() {
            return bad("a graph needs at least one distinguished vertex".into());
        }
        if let Some(&d) = distinguished.iter().find(|&&d| d >= vertex_count) {
            return bad(format!("distinguished vertex {d} out of range"));
        }
        let declared: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
        if declared.len() != labels.len() {
            return bad("duplicate label".into());
        }
        let mut normalized = BTreeSet::new();
        for (u, v, label) in edges {
            if u >= vertex_count || v >= vertex_count {
                return bad(format!("edge ({u}, {v}) out of range"));
            }
            if u == v {
                return bad(format!("self-loop at vertex {u}"));
            }
            if !declared.contains(label.as_str()) {
                return Err(Error::UnknownLabel(label));
            }
            let edge = Edge {
                u: u.min(v),
                v: u.max(v),
                label,
            };
            if !normalized.insert(edge.clone()) {
                return bad(format!("duplicate edge ({}, {}, {})", edge.u, edge.v, edge.label));
            }
        }
        Ok(LabeledGraph {
            vertex_count,
            edges: normalized.into_iter().collect(),
            distinguished,
            labels,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn distinguished(&self) -> &[usize] {
        &self.distinguished
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The series-parallel graph of a `{∘, ∩}`-term, with distinguished
    /// vertices `[source, sink]`. Composition glues a sink to a source,
    /// intersection identifies both sources and both sinks. Vertices are
    /// numbered in order of discovery from the source.
    pub fn of_term(term: &Term) -> Result<LabeledGraph> {
        if term.has_plus() {
            return Err(Error::UnsupportedPlus);
        }
        let mut raw = Vec::new();
        let mut next = 2;
        build(term, 0, 1, &mut next, &mut raw);

        let mut renumber = BTreeMap::new();
        renumber.insert(0usize, 0usize);
        for (u, v, _) in &raw {
            for x in [*u, *v] {
                let fresh = renumber.len();
                renumber.entry(x).or_insert(fresh);
            }
        }
        let mut edges: Vec<(usize, usize, String)> = raw
            .into_iter()
            .map(|(u, v, l)| (renumber[&u], renumber[&v], l))
            .collect();
        // `a&a` builds the same edge twice; parallel same-label edges are idempotent.
        edges.sort();
        edges.dedup();
        LabeledGraph::new(
            renumber.len(),
            edges,
            vec![0, renumber[&1]],
            term.variables().into_iter().collect(),
        )
    }

    /// Connected components of the subgraph spanned by `label`'s edges, each
    /// sorted, listed by smallest member. Untouched vertices are singletons.
    pub fn label_classes(&self, label: &str) -> Result<Vec<Vec<usize>>> {
        if !self.labels.iter().any(|l| l == label) {
            return Err(Error::UnknownLabel(label.to_string()));
        }
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut root = x;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = x;
            while parent[cur] != root {
                let up = parent[cur];
                parent[cur] = root;
                cur = up;
            }
            root
        }
        for e in self.edges.iter().filter(|e| e.label == label) {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.vertex_count {
            let root = find(&mut parent, x);
            classes.entry(root).or_default().push(x);
        }
        Ok(classes.into_values().collect())
    }

    /// The first label having a class of more than two vertices, with that
    /// class's size.
    pub fn regularity_violation(&self) -> Option<(String, usize)> {
        self.labels.iter().find_map(|label| {
            let classes = self.label_classes(label).expect("declared label");
            classes
                .iter()
                .map(Vec::len)
                .max()
                .filter(|&n| n > 2)
                .map(|n| (label.clone(), n))
        })
    }

    /// Every label's classes have at most two vertices.
    pub fn is_regular(&self) -> bool {
        self.regularity_violation().is_none()
    }

    /// Evaluates `G(R₁, …, Rₙ)` on a universe of `universe` elements.
    pub fn eval(&self, bindings: &Bindings, universe: usize) -> Result<TupleRelation> {
        if universe == 0 || universe > MAX_UNIVERSE {
            return Err(Error::InvalidSize(universe));
        }
        let mut bound: Vec<&BinaryRelation> = Vec::with_capacity(self.labels.len());
        for label in &self.labels {
            let rel = bindings
                .get(label)
                .ok_or_else(|| Error::UnboundLabel(label.clone()))?;
            if rel.size() != universe {
                return Err(Error::SizeMismatch {
                    expected: universe,
                    found: rel.size(),
                });
            }
            let shape = rel.shape();
            if !(shape.reflexive && shape.symmetric) {
                return Err(Error::NotReflexiveSymmetric(label.clone()));
            }
            bound.push(rel);
        }
        let label_index: BTreeMap<&str, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            let rel = bound[label_index[e.label.as_str()]];
            adjacency[e.u].push((e.v, rel));
            adjacency[e.v].push((e.u, rel));
        }
        let mut search = Search {
            adjacency,
            full: if universe == 64 { u64::MAX } else { (1 << universe) - 1 },
            value: vec![None; self.vertex_count],
        };

        let mut order: Vec<usize> = Vec::new();
        for &d in &self.distinguished {
            if !order.contains(&d) {
                order.push(d);
            }
        }
        let mut tuples = BTreeSet::new();
        search.distinguished(&order, &self.distinguished, &mut tuples);
        Ok(TupleRelation {
            size: universe,
            arity: self.distinguished.len(),
            tuples,
        })
    }
}

fn build(term: &Term, source: usize, sink: usize, next: &mut usize, out: &mut Vec<(usize, usize, String)>) {
    match term {
        Term::Var(name) => out.push((source, sink, name.clone())),
        Term::Node(TermOp::Compose, l, r) => {
            let middle = *next;
            *next += 1;
            build(l, source, middle, next, out);
            build(r, middle, sink, next, out);
        }
        Term::Node(TermOp::Meet, l, r) => {
            build(l, source, sink, next, out);
            build(r, source, sink, next, out);
        }
        Term::Node(TermOp::Plus, _, _) => unreachable!("checked by of_term"),
    }
}

/// Per-call scratch state for the homomorphism search.
struct Search<'a> {
    adjacency: Vec<Vec<(usize, &'a BinaryRelation)>>,
    full: u64,
    value: Vec<Option<usize>>,
}

impl Search<'_> {
    fn domain(&self, v: usize) -> u64 {
        self.adjacency[v]
            .iter()
            .filter_map(|&(u, rel)| self.value[u].map(|x| rel.row(x)))
            .fold(self.full, |acc, row| acc & row)
    }

    /// Assigns the distinct distinguished vertices in order, then asks
    /// whether the rest extends.
    fn distinguished(&mut self, order: &[usize], listed: &[usize], out: &mut BTreeSet<Vec<usize>>) {
        let Some((&v, rest)) = order.split_first() else {
            if self.extends() {
                out.insert(listed.iter().map(|&d| self.value[d].expect("assigned")).collect());
            }
            return;
        };
        let mut domain = self.domain(v);
        while domain != 0 {
            let x = domain.trailing_zeros() as usize;
            domain &= domain - 1;
            self.value[v] = Some(x);
            self.distinguished(rest, listed, out);
        }
        self.value[v] = None;
    }

    /// Most-constrained-vertex-first backtracking over unassigned vertices.
    fn extends(&mut self) -> bool {
        let mut best: Option<(u32, usize, u64)> = None;
        for v in 0..self.value.len() {
            if self.value[v].is_some() {
                continue;
            }
            let domain = self.domain(v);
            let count = domain.count_ones();
            if best.is_none_or(|(c, _, _)| count < c) {
                best = Some((count, v, domain));
            }
            if count == 0 {
                break;
            }
        }
        let Some((_, v, mut domain)) = best else {
            return true;
        };
        while domain != 0 {
            let x = domain.trailing_zeros() as usize;
            domain &= domain - 1;
            self.value[v] = Some(x);
            if self.extends() {
                self.value[v] = None;
                return true;
            }
        }
        self.value[v] = None;
        false
    }
}

/// An `arity`-ary relation on `{0, …, size-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleRelation {
    pub size: usize,
    pub arity: usize,
    pub tuples: BTreeSet<Vec<usize>>,
}

impl TupleRelation {
    pub fn from_binary(rel: &BinaryRelation) -> TupleRelation {
        TupleRelation {
            size: rel.size(),
            arity: 2,
            tuples: rel.pairs().map(|(a, b)| vec![a, b]).collect(),
        }
    }

    pub fn is_subset(&self, other: &TupleRelation) -> bool {
        self.tuples.is_subset(&other.tuples)
    }
}

pub fn is_regular_term(term: &Term) -> Result<bool> {
    Ok(LabeledGraph::of_term(term)?.is_regular())
}
