//! Representable, weakly representable and nest-representable tolerances.
//!
//! A tolerance `Θ` is representable when `Θ = R ∘ R⌣` for a compatible
//! reflexive relation `R`, and weakly representable when it is an
//! intersection of such. The nest-representable tolerances form the least
//! set that contains the representable ones and is closed under
//! intersections and under `Ψ ↦ R ∘ Ψ ∘ R⌣` for compatible reflexive `R`.
//!
//! On a finite algebra every one of these families is finite, so arbitrary
//! intersections reduce to iterated binary meets and the least set is a
//! fixpoint reached after finitely many rounds.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{enumerate_closed, is_compatible, ClosureMode, FiniteAlgebra};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::relation::{pair_list, BinaryRelation};

/// How a tolerance was obtained from the formation rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NestDerivation {
    /// `R ∘ R⌣`.
    Rep(BinaryRelation),
    /// Intersection of the children.
    Meet(Vec<NestDerivation>),
    /// `R ∘ Ψ ∘ R⌣` where `Ψ` is the child.
    Conj(BinaryRelation, Box<NestDerivation>),
}

impl NestDerivation {
    /// Rule depth: 0 for `Rep`, one more than the deepest child otherwise.
    pub fn depth(&self) -> usize {
        match self {
            NestDerivation::Rep(_) => 0,
            NestDerivation::Meet(children) => {
                1 + children.iter().map(NestDerivation::depth).max().unwrap_or(0)
            }
            NestDerivation::Conj(_, child) => 1 + child.depth(),
        }
    }

    fn witnesses<'a>(&'a self, out: &mut Vec<&'a BinaryRelation>) {
        match self {
            NestDerivation::Rep(r) => out.push(r),
            NestDerivation::Meet(children) => children.iter().for_each(|c| c.witnesses(out)),
            NestDerivation::Conj(r, child) => {
                out.push(r);
                child.witnesses(out);
            }
        }
    }
}

fn conjugate(r: &BinaryRelation, psi: &BinaryRelation) -> Result<BinaryRelation> {
    r.compose(&psi.compose(&r.converse())?)
}

fn represent(r: &BinaryRelation) -> BinaryRelation {
    r.compose(&r.converse()).expect("same universe")
}

/// Recomputes the tolerance a derivation denotes, checking every witness.
pub fn replay_derivation(alg: &FiniteAlgebra, d: &NestDerivation) -> Result<BinaryRelation> {
    let check_witness = |r: &BinaryRelation| -> Result<()> {
        if r.size() != alg.size() {
            return Err(Error::SizeMismatch {
                expected: alg.size(),
                found: r.size(),
            });
        }
        if !r.is_reflexive() || !is_compatible(alg, r)? {
            return Err(Error::BadWitness);
        }
        Ok(())
    };
    let out = match d {
        NestDerivation::Rep(r) => {
            check_witness(r)?;
            represent(r)
        }
        NestDerivation::Meet(children) => {
            let (first, rest) = children
                .split_first()
                .ok_or_else(|| Error::InvalidDerivation("MEET without children".into()))?;
            let mut acc = replay_derivation(alg, first)?;
            for child in rest {
                acc = acc.meet(&replay_derivation(alg, child)?)?;
            }
            acc
        }
        NestDerivation::Conj(r, child) => {
            check_witness(r)?;
            conjugate(r, &replay_derivation(alg, child)?)?
        }
    };
    debug_assert!(ClosureMode::Tolerance.admits(&out));
    Ok(out)
}

/// Result of the weak-representability test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakRepresentation {
    pub holds: bool,
    /// The inclusion-minimal representable tolerances containing `T`; their
    /// intersection is the least weakly representable tolerance above `T`.
    pub witnesses: Vec<BinaryRelation>,
}

/// Everything the classification needs, enumerated once per algebra.
struct Context {
    compatible_reflexive: Vec<BinaryRelation>,
    tolerances: Vec<BinaryRelation>,
    /// Representable tolerance → preferred witness.
    representable: BTreeMap<BinaryRelation, BinaryRelation>,
}

/// Witness preference: fewest pairs, then the largest in canonical order.
fn preferred(a: &BinaryRelation, b: &BinaryRelation) -> bool {
    (a.len(), Reverse(a)) < (b.len(), Reverse(b))
}

impl Context {
    fn new(alg: &FiniteAlgebra, caps: &Caps) -> Result<Self> {
        let compatible_reflexive = enumerate_closed(alg, ClosureMode::CompatibleReflexive, caps)?;
        let tolerances = enumerate_closed(alg, ClosureMode::Tolerance, caps)?;
        let mut representable: BTreeMap<BinaryRelation, BinaryRelation> = BTreeMap::new();
        for r in &compatible_reflexive {
            let t = represent(r);
            match representable.get(&t) {
                Some(best) if !preferred(r, best) => {}
                _ => {
                    representable.insert(t, r.clone());
                }
            }
        }
        Ok(Context {
            compatible_reflexive,
            tolerances,
            representable,
        })
    }

    fn weak(&self, t: &BinaryRelation) -> WeakRepresentation {
        let above: Vec<&BinaryRelation> = self
            .representable
            .keys()
            .filter(|x| t.is_subset(x).expect("same universe"))
            .collect();
        let full = BinaryRelation::full(t.size()).expect("valid size");
        let meet = above
            .iter()
            .fold(full, |acc, x| acc.meet(x).expect("same universe"));
        let witnesses = above
            .iter()
            .filter(|x| {
                !above
                    .iter()
                    .any(|y| y != *x && y.is_subset(x).expect("same universe"))
            })
            .map(|x| (*x).clone())
            .collect();
        WeakRepresentation {
            holds: meet == *t,
            witnesses,
        }
    }
}

fn require_tolerance(alg: &FiniteAlgebra, t: &BinaryRelation) -> Result<()> {
    if t.size() != alg.size() {
        return Err(Error::SizeMismatch {
            expected: alg.size(),
            found: t.size(),
        });
    }
    if !ClosureMode::Tolerance.admits(t) || !is_compatible(alg, t)? {
        return Err(Error::NotATolerance);
    }
    Ok(())
}

/// A compatible reflexive `R` with `R ∘ R⌣ = T`, if one exists.
///
/// Only `R ⊆ T` can work, since a reflexive `R` lies inside `R ∘ R⌣`. Among
/// the witnesses the one with fewest pairs is returned (ties: largest in
/// canonical order).
pub fn is_representable(
    alg: &FiniteAlgebra,
    t: &BinaryRelation,
    caps: &Caps,
) -> Result<Option<BinaryRelation>> {
    require_tolerance(alg, t)?;
    let mut best: Option<BinaryRelation> = None;
    for r in enumerate_closed(alg, ClosureMode::CompatibleReflexive, caps)? {
        if !r.is_subset(t)? || represent(&r) != *t {
            continue;
        }
        if best.as_ref().is_none_or(|b| preferred(&r, b)) {
            best = Some(r);
        }
    }
    Ok(best)
}

/// Whether `T` is the intersection of the representable tolerances above it.
pub fn is_weakly_representable(
    alg: &FiniteAlgebra,
    t: &BinaryRelation,
    caps: &Caps,
) -> Result<WeakRepresentation> {
    require_tolerance(alg, t)?;
    Ok(Context::new(alg, caps)?.weak(t))
}

/// Least fixpoint of the intersection and conjugation rules above `seeds`,
/// conjugating by `conjugators`. Proceeds in rounds, so each member keeps a
/// derivation of minimal rule depth; ties go to the first discovery in
/// canonical order, meets before conjugates.
pub fn nest_closure(
    seeds: &BTreeMap<BinaryRelation, NestDerivation>,
    conjugators: &[BinaryRelation],
) -> Result<BTreeMap<BinaryRelation, NestDerivation>> {
    let mut members = seeds.clone();
    let mut layer: Vec<BinaryRelation> = seeds.keys().cloned().collect();
    while !layer.is_empty() {
        let mut fresh: BTreeMap<BinaryRelation, NestDerivation> = BTreeMap::new();
        for x in &layer {
            for (y, dy) in &members {
                let m = x.meet(y)?;
                if members.contains_key(&m) || fresh.contains_key(&m) {
                    continue;
                }
                let dx = members[x].clone();
                let children = if x <= y { vec![dx, dy.clone()] } else { vec![dy.clone(), dx] };
                fresh.insert(m, NestDerivation::Meet(children));
            }
        }
        for x in &layer {
            for r in conjugators {
                let c = conjugate(r, x)?;
                if members.contains_key(&c) || fresh.contains_key(&c) {
                    continue;
                }
                fresh.insert(c, NestDerivation::Conj(r.clone(), Box::new(members[x].clone())));
            }
        }
        layer = fresh.keys().cloned().collect();
        members.extend(fresh);
    }
    Ok(members)
}

/// Classification record of one tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub tolerance: BinaryRelation,
    pub is_congruence: bool,
    pub representable: Option<BinaryRelation>,
    pub weakly_representable: bool,
    pub weak_witnesses: Vec<BinaryRelation>,
    pub nest: Option<NestDerivation>,
}

/// Every tolerance of an algebra in canonical order, classified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CatalogFile", into = "CatalogFile")]
pub struct ToleranceCatalog {
    pub algebra: FiniteAlgebra,
    pub entries: Vec<CatalogEntry>,
}

impl ToleranceCatalog {
    pub fn tolerances(&self) -> impl Iterator<Item = &BinaryRelation> {
        self.entries.iter().map(|e| &e.tolerance)
    }

    fn select(&self, keep: impl Fn(&CatalogEntry) -> bool) -> Vec<BinaryRelation> {
        self.entries
            .iter()
            .filter(|e| keep(e))
            .map(|e| e.tolerance.clone())
            .collect()
    }

    pub fn congruences(&self) -> Vec<BinaryRelation> {
        self.select(|e| e.is_congruence)
    }

    pub fn representables(&self) -> Vec<BinaryRelation> {
        self.select(|e| e.representable.is_some())
    }

    pub fn weakly_representables(&self) -> Vec<BinaryRelation> {
        self.select(|e| e.weakly_representable)
    }

    pub fn nest_representables(&self) -> Vec<BinaryRelation> {
        self.select(|e| e.nest.is_some())
    }

    /// Replays every witness: representable witnesses must produce their
    /// tolerance, weak witnesses must be representable and meet to it, and
    /// derivations must replay to it.
    pub fn verify(&self) -> Result<()> {
        let bad = |what: &str, t: &BinaryRelation| Err(Error::Inconsistent(format!("{what} for {t}")));
        for e in &self.entries {
            require_tolerance(&self.algebra, &e.tolerance)?;
            if e.is_congruence != e.tolerance.is_transitive() {
                return bad("congruence flag", &e.tolerance);
            }
            if let Some(r) = &e.representable {
                if replay_derivation(&self.algebra, &NestDerivation::Rep(r.clone()))? != e.tolerance {
                    return bad("representable witness", &e.tolerance);
                }
            }
            if e.weakly_representable {
                let mut meet = BinaryRelation::full(self.algebra.size())?;
                for w in &e.weak_witnesses {
                    let is_rep = self
                        .entries
                        .iter()
                        .any(|o| o.tolerance == *w && o.representable.is_some());
                    if !is_rep {
                        return bad("weak witness", &e.tolerance);
                    }
                    meet = meet.meet(w)?;
                }
                if meet != e.tolerance {
                    return bad("weak witness family", &e.tolerance);
                }
            }
            if let Some(d) = &e.nest {
                if replay_derivation(&self.algebra, d)? != e.tolerance {
                    return bad("derivation", &e.tolerance);
                }
            }
        }
        Ok(())
    }
}

/// Classifies every tolerance of `alg`.
pub fn nest_representable_set(alg: &FiniteAlgebra, caps: &Caps) -> Result<ToleranceCatalog> {
    let ctx = Context::new(alg, caps)?;
    let seeds: BTreeMap<BinaryRelation, NestDerivation> = ctx
        .representable
        .iter()
        .map(|(t, r)| (t.clone(), NestDerivation::Rep(r.clone())))
        .collect();
    let nest = nest_closure(&seeds, &ctx.compatible_reflexive)?;
    let tolerance_set: BTreeSet<&BinaryRelation> = ctx.tolerances.iter().collect();
    if let Some(stray) = nest.keys().find(|t| !tolerance_set.contains(t)) {
        return Err(Error::Inconsistent(format!(
            "formation rules produced a non-tolerance {stray}"
        )));
    }
    let entries = ctx
        .tolerances
        .iter()
        .map(|t| {
            let weak = ctx.weak(t);
            CatalogEntry {
                tolerance: t.clone(),
                is_congruence: t.is_transitive(),
                representable: ctx.representable.get(t).cloned(),
                weakly_representable: weak.holds,
                weak_witnesses: if weak.holds { weak.witnesses } else { Vec::new() },
                nest: nest.get(t).cloned(),
            }
        })
        .collect();
    Ok(ToleranceCatalog {
        algebra: alg.clone(),
        entries,
    })
}

type Pairs = Vec<[usize; 2]>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum DerivationFile {
    #[serde(rename = "REP")]
    Rep { witness: Pairs },
    #[serde(rename = "MEET")]
    Meet { children: Vec<DerivationFile> },
    #[serde(rename = "CONJ")]
    Conj {
        witness: Pairs,
        child: Box<DerivationFile>,
    },
}

impl DerivationFile {
    fn from_derivation(d: &NestDerivation) -> Self {
        match d {
            NestDerivation::Rep(r) => DerivationFile::Rep {
                witness: pair_list::to_pairs(r),
            },
            NestDerivation::Meet(cs) => DerivationFile::Meet {
                children: cs.iter().map(DerivationFile::from_derivation).collect(),
            },
            NestDerivation::Conj(r, c) => DerivationFile::Conj {
                witness: pair_list::to_pairs(r),
                child: Box::new(DerivationFile::from_derivation(c)),
            },
        }
    }

    fn into_derivation(self, size: usize) -> Result<NestDerivation> {
        Ok(match self {
            DerivationFile::Rep { witness } => NestDerivation::Rep(pair_list::from_pairs(size, witness)?),
            DerivationFile::Meet { children } => NestDerivation::Meet(
                children
                    .into_iter()
                    .map(|c| c.into_derivation(size))
                    .collect::<Result<_>>()?,
            ),
            DerivationFile::Conj { witness, child } => NestDerivation::Conj(
                pair_list::from_pairs(size, witness)?,
                Box::new(child.into_derivation(size)?),
            ),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntryFile {
    pub tolerance: Pairs,
    pub is_congruence: bool,
    pub representable: Option<Pairs>,
    pub weakly_representable: bool,
    pub weak_witnesses: Vec<Pairs>,
    pub nest_representable: bool,
    pub derivation: Option<DerivationFile>,
}

/// On-disk form of a catalog: the algebra followed by one record per tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub algebra: FiniteAlgebra,
    pub entries: Vec<CatalogEntryFile>,
}

impl From<ToleranceCatalog> for CatalogFile {
    fn from(c: ToleranceCatalog) -> Self {
        let entries = c
            .entries
            .iter()
            .map(|e| CatalogEntryFile {
                tolerance: pair_list::to_pairs(&e.tolerance),
                is_congruence: e.is_congruence,
                representable: e.representable.as_ref().map(pair_list::to_pairs),
                weakly_representable: e.weakly_representable,
                weak_witnesses: e.weak_witnesses.iter().map(pair_list::to_pairs).collect(),
                nest_representable: e.nest.is_some(),
                derivation: e.nest.as_ref().map(DerivationFile::from_derivation),
            })
            .collect();
        CatalogFile {
            algebra: c.algebra,
            entries,
        }
    }
}

impl TryFrom<CatalogFile> for ToleranceCatalog {
    type Error = Error;

    fn try_from(f: CatalogFile) -> Result<Self> {
        let n = f.algebra.size();
        let mut entries = Vec::with_capacity(f.entries.len());
        for e in f.entries {
            let nest = e.derivation.map(|d| d.into_derivation(n)).transpose()?;
            if nest.is_some() != e.nest_representable {
                return Err(Error::InvalidDerivation(
                    "nest_representable flag disagrees with derivation".into(),
                ));
            }
            entries.push(CatalogEntry {
                tolerance: pair_list::from_pairs(n, e.tolerance)?,
                is_congruence: e.is_congruence,
                representable: e.representable.map(|p| pair_list::from_pairs(n, p)).transpose()?,
                weakly_representable: e.weakly_representable,
                weak_witnesses: e
                    .weak_witnesses
                    .into_iter()
                    .map(|p| pair_list::from_pairs(n, p))
                    .collect::<Result<_>>()?,
                nest,
            });
        }
        Ok(ToleranceCatalog {
            algebra: f.algebra,
            entries,
        })
    }
}

/// All witness relations used by a derivation, outermost first.
pub fn derivation_witnesses(d: &NestDerivation) -> Vec<&BinaryRelation> {
    let mut out = Vec::new();
    d.witnesses(&mut out);
    out
}
