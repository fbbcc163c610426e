//! Binary relations on a finite universe `{0, …, n-1}`.
//!
//! A relation is stored as one 64-bit row mask per element: bit `b` of row
//! `a` is set iff `(a, b)` belongs to the relation. Universes are therefore
//! limited to 64 elements, far beyond what the exhaustive searches in this
//! crate can handle anyway.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_UNIVERSE: usize = 64;

/// An exact binary relation on `{0, …, size-1}`.
///
/// Ordering is lexicographic over the rows, each row compared as the integer
/// whose bit `b` is the membership of `(a, b)`. This is the canonical order
/// used for every enumeration and every "first counterexample" in the crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RelationFile", into = "RelationFile")]
pub struct BinaryRelation {
    size: usize,
    rows: Vec<u64>,
}

/// Reflexivity, symmetry and transitivity flags of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub reflexive: bool,
    pub symmetric: bool,
    pub transitive: bool,
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size > MAX_UNIVERSE {
        return Err(Error::InvalidSize(size));
    }
    Ok(())
}

fn full_mask(size: usize) -> u64 {
    if size == 64 {
        u64::MAX
    } else {
        (1u64 << size) - 1
    }
}

impl BinaryRelation {
    pub fn empty(size: usize) -> Result<Self> {
        check_size(size)?;
        Ok(BinaryRelation {
            size,
            rows: vec![0; size],
        })
    }

    /// The diagonal Δ.
    pub fn diagonal(size: usize) -> Result<Self> {
        check_size(size)?;
        Ok(BinaryRelation {
            size,
            rows: (0..size).map(|a| 1u64 << a).collect(),
        })
    }

    /// The full relation ∇.
    pub fn full(size: usize) -> Result<Self> {
        check_size(size)?;
        Ok(BinaryRelation {
            size,
            rows: vec![full_mask(size); size],
        })
    }

    pub fn from_pairs<I>(size: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rel = Self::empty(size)?;
        for (a, b) in pairs {
            rel.insert(a, b)?;
        }
        Ok(rel)
    }

    /// Δ together with the given pairs.
    pub fn reflexive_with<I>(size: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rel = Self::diagonal(size)?;
        for (a, b) in pairs {
            rel.insert(a, b)?;
        }
        Ok(rel)
    }

    /// Δ together with the given pairs and their reverses.
    pub fn symmetric_with<I>(size: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rel = Self::diagonal(size)?;
        for (a, b) in pairs {
            rel.insert(a, b)?;
            rel.insert(b, a)?;
        }
        Ok(rel)
    }

    pub(crate) fn from_rows(size: usize, rows: Vec<u64>) -> Self {
        debug_assert_eq!(rows.len(), size);
        debug_assert!(rows.iter().all(|r| r & !full_mask(size) == 0));
        BinaryRelation { size, rows }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Row mask of `a`: bit `b` is set iff `(a, b)` is in the relation.
    pub fn row(&self, a: usize) -> u64 {
        self.rows[a]
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.size && b < self.size && self.rows[a] >> b & 1 == 1
    }

    pub fn insert(&mut self, a: usize, b: usize) -> Result<bool> {
        for e in [a, b] {
            if e >= self.size {
                return Err(Error::Range {
                    element: e,
                    size: self.size,
                });
            }
        }
        let fresh = self.rows[a] >> b & 1 == 0;
        self.rows[a] |= 1 << b;
        Ok(fresh)
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size).flat_map(move |a| {
            (0..self.size).filter_map(move |b| self.contains(a, b).then_some((a, b)))
        })
    }

    fn same_size(&self, other: &Self) -> Result<()> {
        if self.size != other.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                found: other.size,
            });
        }
        Ok(())
    }

    /// Relational product: `(a, c)` iff `a self b` and `b other c` for some `b`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let rows = self
            .rows
            .iter()
            .map(|&row| {
                let mut out = 0u64;
                let mut bits = row;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out |= other.rows[b];
                    bits &= bits - 1;
                }
                out
            })
            .collect();
        Ok(Self::from_rows(self.size, rows))
    }

    pub fn converse(&self) -> Self {
        let mut rows = vec![0u64; self.size];
        for (a, b) in self.pairs() {
            rows[b] |= 1 << a;
        }
        Self::from_rows(self.size, rows)
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let rows = self.rows.iter().zip(&other.rows).map(|(x, y)| x & y).collect();
        Ok(Self::from_rows(self.size, rows))
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let rows = self.rows.iter().zip(&other.rows).map(|(x, y)| x | y).collect();
        Ok(Self::from_rows(self.size, rows))
    }

    /// Alternating composition with `factors` factors starting from `self`:
    /// `0 → Δ`, `1 → self`, `2 → self∘other`, `3 → self∘other∘self`, …
    pub fn alt_power(&self, other: &Self, factors: usize) -> Result<Self> {
        self.same_size(other)?;
        let mut acc = Self::diagonal(self.size)?;
        for i in 0..factors {
            let factor = if i % 2 == 0 { self } else { other };
            acc = acc.compose(factor)?;
        }
        Ok(acc)
    }

    /// `self + other`: the union of all alternating powers with at least one
    /// factor.
    ///
    /// The walk stops once a (power, next factor) state repeats, after which
    /// the powers cycle and the union can no longer grow. For reflexive
    /// arguments the powers increase, so this is the point where two
    /// successive partial unions coincide.
    pub fn plus_join(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let mut power = self.clone();
        let mut union = self.clone();
        let mut next_is_other = true;
        let mut seen = HashSet::new();
        while seen.insert((power.clone(), next_is_other)) {
            let factor = if next_is_other { other } else { self };
            power = power.compose(factor)?;
            next_is_other = !next_is_other;
            union = union.join(&power)?;
        }
        Ok(union)
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        self.same_size(other)?;
        Ok(self.rows.iter().zip(&other.rows).all(|(x, y)| x & !y == 0))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.size).all(|a| self.rows[a] >> a & 1 == 1)
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.converse()
    }

    pub fn is_transitive(&self) -> bool {
        self.compose(self)
            .and_then(|sq| sq.is_subset(self))
            .unwrap_or(false)
    }

    pub fn shape(&self) -> Shape {
        Shape {
            reflexive: self.is_reflexive(),
            symmetric: self.is_symmetric(),
            transitive: self.is_transitive(),
        }
    }

    pub fn is_equivalence(&self) -> bool {
        let s = self.shape();
        s.reflexive && s.symmetric && s.transitive
    }
}

impl fmt::Debug for BinaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryRelation({}; {})", self.size, self)
    }
}

/// Prints the pair list, e.g. `{(0,0),(0,1),(1,1)}`.
impl fmt::Display for BinaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, b)) in self.pairs().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({a},{b})")?;
        }
        f.write_str("}")
    }
}

/// On-disk form: `{"size": n, "pairs": [[a, b], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationFile {
    pub size: usize,
    pub pairs: Vec<[usize; 2]>,
}

impl TryFrom<RelationFile> for BinaryRelation {
    type Error = Error;

    fn try_from(file: RelationFile) -> Result<Self> {
        BinaryRelation::from_pairs(file.size, file.pairs.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<BinaryRelation> for RelationFile {
    fn from(rel: BinaryRelation) -> Self {
        RelationFile {
            size: rel.size,
            pairs: rel.pairs().map(|(a, b)| [a, b]).collect(),
        }
    }
}

/// Pair lists without the size, for containers that store the size once.
pub(crate) mod pair_list {
    use super::BinaryRelation;
    use crate::error::Result;

    pub fn to_pairs(rel: &BinaryRelation) -> Vec<[usize; 2]> {
        rel.pairs().map(|(a, b)| [a, b]).collect()
    }

    pub fn from_pairs(size: usize, pairs: Vec<[usize; 2]>) -> Result<BinaryRelation> {
        BinaryRelation::from_pairs(size, pairs.into_iter().map(|[a, b]| (a, b)))
    }
}
