//! Finite algebras given by operation tables, compatibility of relations, and
//! enumeration of compatible reflexive relations, tolerances and congruences.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::relation::{BinaryRelation, MAX_UNIVERSE};

/// A basic operation. `table` is the row-major flattening of the
/// `arity`-dimensional value array, first argument most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operation {
    pub name: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

impl Operation {
    pub fn apply(&self, size: usize, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        let index = args.iter().fold(0, |acc, &a| acc * size + a);
        self.table[index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlgebraFile", into = "AlgebraFile")]
pub struct FiniteAlgebra {
    size: usize,
    operations: Vec<Operation>,
}

/// On-disk form: `{"size": n, "operations": [{"name", "arity", "table"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub size: usize,
    pub operations: Vec<Operation>,
}

impl TryFrom<AlgebraFile> for FiniteAlgebra {
    type Error = Error;

    fn try_from(file: AlgebraFile) -> Result<Self> {
        FiniteAlgebra::new(file.size, file.operations)
    }
}

impl From<FiniteAlgebra> for AlgebraFile {
    fn from(alg: FiniteAlgebra) -> Self {
        AlgebraFile {
            size: alg.size,
            operations: alg.operations,
        }
    }
}

impl FiniteAlgebra {
    /// Validates the tables: exact length `size^arity`, entries in range,
    /// unique names.
    pub fn new(size: usize, operations: Vec<Operation>) -> Result<Self> {
        if size == 0 || size > MAX_UNIVERSE {
            return Err(Error::InvalidSize(size));
        }
        let mut names = HashSet::new();
        for op in &operations {
            if !names.insert(op.name.as_str()) {
                return Err(Error::DuplicateName(op.name.clone()));
            }
            let expected = u32::try_from(op.arity)
                .ok()
                .and_then(|k| size.checked_pow(k))
                .ok_or_else(|| Error::Shape {
                    name: op.name.clone(),
                    expected: usize::MAX,
                    found: op.table.len(),
                })?;
            if op.table.len() != expected {
                return Err(Error::Shape {
                    name: op.name.clone(),
                    expected,
                    found: op.table.len(),
                });
            }
            if let Some(&bad) = op.table.iter().find(|&&v| v >= size) {
                return Err(Error::Range { element: bad, size });
            }
        }
        Ok(FiniteAlgebra { size, operations })
    }

    /// A set with no operations.
    pub fn bare(size: usize) -> Result<Self> {
        Self::new(size, Vec::new())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn operation(&self, name: &str) -> Option<&Operation> {
        self.operations.iter().find(|op| op.name == name)
    }

    /// The direct product `self × other`; element `(x, y)` is encoded as
    /// `x * other.size + y`. Both algebras must have the same signature.
    pub fn product(&self, other: &FiniteAlgebra) -> Result<FiniteAlgebra> {
        let size = self.size * other.size;
        let mut ops = Vec::new();
        for op in &self.operations {
            let rhs = other
                .operation(&op.name)
                .filter(|o| o.arity == op.arity)
                .ok_or_else(|| Error::UnknownOperation(op.name.clone()))?;
            let count = size.pow(op.arity as u32);
            let mut table = Vec::with_capacity(count);
            let mut args = vec![0usize; op.arity];
            let mut left = vec![0usize; op.arity];
            let mut right = vec![0usize; op.arity];
            for index in 0..count {
                let mut rest = index;
                for slot in (0..op.arity).rev() {
                    args[slot] = rest % size;
                    rest /= size;
                }
                for (i, &a) in args.iter().enumerate() {
                    left[i] = a / other.size;
                    right[i] = a % other.size;
                }
                table.push(op.apply(self.size, &left) * other.size + rhs.apply(other.size, &right));
            }
            ops.push(Operation {
                name: op.name.clone(),
                arity: op.arity,
                table,
            });
        }
        if other.operations.len() != self.operations.len() {
            return Err(Error::Arity("product of algebras with different signatures".into()));
        }
        FiniteAlgebra::new(size, ops)
    }
}

/// Which class of relations a closure or enumeration ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureMode {
    CompatibleReflexive,
    Tolerance,
    Congruence,
}

impl ClosureMode {
    fn symmetric(self) -> bool {
        !matches!(self, ClosureMode::CompatibleReflexive)
    }

    fn transitive(self) -> bool {
        matches!(self, ClosureMode::Congruence)
    }

    pub fn admits(self, rel: &BinaryRelation) -> bool {
        let s = rel.shape();
        s.reflexive
            && (!self.symmetric() || s.symmetric)
            && (!self.transitive() || s.transitive)
    }
}

fn check_universe(alg: &FiniteAlgebra, rel: &BinaryRelation) -> Result<()> {
    if rel.size() != alg.size() {
        return Err(Error::SizeMismatch {
            expected: alg.size(),
            found: rel.size(),
        });
    }
    Ok(())
}

/// Whether every basic operation maps tuples of related pairs to a related pair.
pub fn is_compatible(alg: &FiniteAlgebra, rel: &BinaryRelation) -> Result<bool> {
    check_universe(alg, rel)?;
    let pairs: Vec<(usize, usize)> = rel.pairs().collect();
    let n = alg.size();
    for op in alg.operations() {
        if op.arity == 0 {
            let c = op.table[0];
            if !rel.contains(c, c) {
                return Ok(false);
            }
            continue;
        }
        if pairs.is_empty() {
            continue;
        }
        let mut choice = vec![0usize; op.arity];
        let mut left = vec![0usize; op.arity];
        let mut right = vec![0usize; op.arity];
        loop {
            for (slot, &c) in choice.iter().enumerate() {
                left[slot] = pairs[c].0;
                right[slot] = pairs[c].1;
            }
            if !rel.contains(op.apply(n, &left), op.apply(n, &right)) {
                return Ok(false);
            }
            if !advance(&mut choice, pairs.len()) {
                break;
            }
        }
    }
    Ok(true)
}

/// Odometer over `{0..base}^len`, last slot fastest. Returns false on wrap.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Worklist closure. Pairs in `done` are already closed among themselves;
/// everything in `queue` still has to be combined with them.
struct Closure<'a> {
    alg: &'a FiniteAlgebra,
    mode: ClosureMode,
    present: BinaryRelation,
    done: Vec<(usize, usize)>,
    done_rel: BinaryRelation,
    done_conv: BinaryRelation,
    queue: Vec<(usize, usize)>,
}

impl<'a> Closure<'a> {
    fn from_closed(alg: &'a FiniteAlgebra, mode: ClosureMode, closed: &BinaryRelation) -> Self {
        Closure {
            alg,
            mode,
            present: closed.clone(),
            done: closed.pairs().collect(),
            done_rel: closed.clone(),
            done_conv: closed.converse(),
            queue: Vec::new(),
        }
    }

    fn add(&mut self, a: usize, b: usize) {
        // In range by construction: every caller draws from the universe.
        if self.present.insert(a, b).unwrap_or(false) {
            self.queue.push((a, b));
        }
        if self.mode.symmetric() && self.present.insert(b, a).unwrap_or(false) {
            self.queue.push((b, a));
        }
    }

    fn run(mut self) -> BinaryRelation {
        let n = self.alg.size();
        while let Some((a, b)) = self.queue.pop() {
            self.done.push((a, b));
            self.done_rel.insert(a, b).expect("in range");
            self.done_conv.insert(b, a).expect("in range");

            if self.mode.transitive() {
                // (c, a) ∘ (a, b) and (a, b) ∘ (b, d)
                let mut before = self.done_conv.row(a);
                while before != 0 {
                    let c = before.trailing_zeros() as usize;
                    before &= before - 1;
                    self.add(c, b);
                }
                let mut after = self.done_rel.row(b);
                while after != 0 {
                    let d = after.trailing_zeros() as usize;
                    after &= after - 1;
                    self.add(a, d);
                }
            }

            let newest = self.done.len() - 1;
            for op_index in 0..self.alg.operations().len() {
                let op = &self.alg.operations()[op_index];
                let k = op.arity;
                if k == 0 {
                    continue;
                }
                // Tuples over `done` that contain the newest pair, enumerated
                // once each by the first slot where it occurs.
                let mut produced = Vec::new();
                let mut left = vec![0usize; k];
                let mut right = vec![0usize; k];
                for first in 0..k {
                    let bases: Vec<usize> = (0..k)
                        .map(|slot| match slot.cmp(&first) {
                            std::cmp::Ordering::Less => newest,
                            std::cmp::Ordering::Equal => 1,
                            std::cmp::Ordering::Greater => newest + 1,
                        })
                        .collect();
                    if bases.contains(&0) {
                        continue;
                    }
                    let mut choice = vec![0usize; k];
                    loop {
                        for slot in 0..k {
                            let idx = if slot == first { newest } else { choice[slot] };
                            left[slot] = self.done[idx].0;
                            right[slot] = self.done[idx].1;
                        }
                        produced.push((op.apply(n, &left), op.apply(n, &right)));
                        if !advance_mixed(&mut choice, &bases) {
                            break;
                        }
                    }
                }
                for (x, y) in produced {
                    self.add(x, y);
                }
            }
        }
        self.present
    }
}

fn advance_mixed(digits: &mut [usize], bases: &[usize]) -> bool {
    for (d, &base) in digits.iter_mut().zip(bases).rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn least_closed(alg: &FiniteAlgebra, mode: ClosureMode) -> BinaryRelation {
    let empty = BinaryRelation::empty(alg.size()).expect("validated size");
    let mut closure = Closure::from_closed(alg, mode, &empty);
    for a in 0..alg.size() {
        closure.add(a, a);
    }
    closure.run()
}

/// Least relation of the given mode containing `closed ∪ extra`, where
/// `closed` is already of that mode.
fn extend_closed(
    alg: &FiniteAlgebra,
    mode: ClosureMode,
    closed: &BinaryRelation,
    extra: impl IntoIterator<Item = (usize, usize)>,
) -> BinaryRelation {
    let mut closure = Closure::from_closed(alg, mode, closed);
    for (a, b) in extra {
        closure.add(a, b);
    }
    closure.run()
}

/// The least relation of `mode` containing `seed`.
pub fn generate_closed(
    alg: &FiniteAlgebra,
    seed: &[(usize, usize)],
    mode: ClosureMode,
) -> Result<BinaryRelation> {
    for &(a, b) in seed {
        for e in [a, b] {
            if e >= alg.size() {
                return Err(Error::Range {
                    element: e,
                    size: alg.size(),
                });
            }
        }
    }
    let base = least_closed(alg, mode);
    Ok(extend_closed(alg, mode, &base, seed.iter().copied()))
}

/// Every relation of `mode` on `alg`, in canonical order.
///
/// Starts from the least one and repeatedly closes `R ∪ {pair}` for every
/// missing pair; every closed relation is reached this way because it is the
/// union of a chain of such one-pair extensions.
pub fn enumerate_closed(
    alg: &FiniteAlgebra,
    mode: ClosureMode,
    caps: &Caps,
) -> Result<Vec<BinaryRelation>> {
    Caps::check("universe size", alg.size() as u128, caps.max_size as u128)?;
    let n = alg.size();
    let start = least_closed(alg, mode);
    let mut seen: HashSet<BinaryRelation> = HashSet::new();
    let mut frontier = VecDeque::new();
    seen.insert(start.clone());
    frontier.push_back(start);
    while let Some(rel) = frontier.pop_front() {
        for a in 0..n {
            for b in 0..n {
                if rel.contains(a, b) || (mode.symmetric() && b < a) {
                    continue;
                }
                let next = extend_closed(alg, mode, &rel, [(a, b)]);
                if !seen.contains(&next) {
                    seen.insert(next.clone());
                    Caps::check("enumerated relations", seen.len() as u128, caps.max_set as u128)?;
                    frontier.push_back(next);
                }
            }
        }
    }
    let sorted: BTreeSet<BinaryRelation> = seen.into_iter().collect();
    Ok(sorted.into_iter().collect())
}
