//! Inclusion checks `p(Θ…) ⊆ q(Θ…)` over the congruences or the
//! nest-representable tolerances of an algebra, their graph counterparts,
//! and the per-algebra theorem report tying them to Maltsev conditions.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{enumerate_closed, ClosureMode, FiniteAlgebra};
use crate::caps::Caps;
use crate::classify::nest_representable_set;
use crate::condition::{
    bounded_term_search, check_witnesses, generate_condition, Counterexample, SearchMode, SearchOutcome,
    SearchStatus, WitnessAssignment,
};
use crate::error::{Error, Result};
use crate::graph::{LabeledGraph, TupleRelation};
use crate::relation::BinaryRelation;
use crate::term::{Bindings, Term};

/// Which relations the variables range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationSet {
    Congruences,
    Nest,
}

impl RelationSet {
    pub fn relations(self, alg: &FiniteAlgebra, caps: &Caps) -> Result<Vec<BinaryRelation>> {
        match self {
            RelationSet::Congruences => enumerate_closed(alg, ClosureMode::Congruence, caps),
            RelationSet::Nest => Ok(nest_representable_set(alg, caps)?.nest_representables()),
        }
    }
}

/// Random spot-checking in place of the exhaustive quantifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionCounterexample {
    pub bindings: BTreeMap<String, BinaryRelation>,
    /// First tuple (lexicographically) of the left side missing on the right.
    pub tuple: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    /// False when the bindings were sampled.
    pub exhaustive: bool,
    /// Binding tuples evaluated.
    pub evaluated: u128,
    pub counterexample: Option<InclusionCounterexample>,
}

fn same_names(left: Vec<String>, right: Vec<String>) -> Result<Vec<String>> {
    let l: BTreeSet<String> = left.iter().cloned().collect();
    if l != right.iter().cloned().collect() {
        return Err(Error::VariableMismatch { left, right });
    }
    Ok(l.into_iter().collect())
}

/// Runs `test` on binding tuples drawn from `relations`, stopping at the
/// first failure. Exhaustive runs go through tuples with the first name
/// varying fastest.
fn quantify(
    names: &[String],
    relations: &[BinaryRelation],
    caps: &Caps,
    sampling: Option<Sampling>,
    mut test: impl FnMut(&Bindings) -> Result<Option<Vec<usize>>>,
) -> Result<Verdict> {
    let k = names.len();
    let bind = |digits: &[usize]| -> Bindings {
        names
            .iter()
            .zip(digits)
            .map(|(n, &d)| (n.clone(), relations[d].clone()))
            .collect()
    };
    let mut evaluated = 0u128;
    let verdict = |bindings: Bindings, tuple: Option<Vec<usize>>, evaluated, exhaustive| Verdict {
        holds: tuple.is_none(),
        exhaustive,
        evaluated,
        counterexample: tuple.map(|tuple| InclusionCounterexample { bindings, tuple }),
    };
    if relations.is_empty() {
        return Ok(verdict(Bindings::new(), None, 0, true));
    }
    if let Some(s) = sampling {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        for _ in 0..s.samples {
            let digits: Vec<usize> = (0..k).map(|_| rng.gen_range(0..relations.len())).collect();
            let bindings = bind(&digits);
            evaluated += 1;
            if let Some(t) = test(&bindings)? {
                return Ok(verdict(bindings, Some(t), evaluated, false));
            }
        }
        return Ok(verdict(Bindings::new(), None, evaluated, false));
    }
    let total = (relations.len() as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    Caps::check("binding tuples", total, caps.max_evals)?;
    let mut digits = vec![0usize; k];
    loop {
        let bindings = bind(&digits);
        evaluated += 1;
        if let Some(t) = test(&bindings)? {
            return Ok(verdict(bindings, Some(t), evaluated, true));
        }
        let mut slot = 0;
        loop {
            if slot == k {
                return Ok(verdict(Bindings::new(), None, evaluated, true));
            }
            digits[slot] += 1;
            if digits[slot] < relations.len() {
                break;
            }
            digits[slot] = 0;
            slot += 1;
        }
    }
}

/// `p ⊆ q` for every binding of the variables to members of `relations`.
pub fn check_inclusion_over(
    p: &Term,
    q: &Term,
    relations: &[BinaryRelation],
    caps: &Caps,
    sampling: Option<Sampling>,
) -> Result<Verdict> {
    let names = same_names(
        p.variables().into_iter().collect(),
        q.variables().into_iter().collect(),
    )?;
    quantify(&names, relations, caps, sampling, |b| {
        let (left, right) = (p.eval(b)?, q.eval(b)?);
        let missing = left.pairs().find(|&(x, y)| !right.contains(x, y));
        Ok(missing.map(|(x, y)| vec![x, y]))
    })
}

pub fn check_congruence_inclusion(
    alg: &FiniteAlgebra,
    p: &Term,
    q: &Term,
    caps: &Caps,
    sampling: Option<Sampling>,
) -> Result<Verdict> {
    same_names(p.variables().into_iter().collect(), q.variables().into_iter().collect())?;
    let relations = RelationSet::Congruences.relations(alg, caps)?;
    check_inclusion_over(p, q, &relations, caps, sampling)
}

pub fn check_nest_inclusion(
    alg: &FiniteAlgebra,
    p: &Term,
    q: &Term,
    caps: &Caps,
    sampling: Option<Sampling>,
) -> Result<Verdict> {
    same_names(p.variables().into_iter().collect(), q.variables().into_iter().collect())?;
    let relations = RelationSet::Nest.relations(alg, caps)?;
    check_inclusion_over(p, q, &relations, caps, sampling)
}

/// `G ⊆ H` as tuple relations for every binding of the labels.
pub fn check_graph_inclusion(
    alg: &FiniteAlgebra,
    g: &LabeledGraph,
    h: &LabeledGraph,
    mode: RelationSet,
    caps: &Caps,
    sampling: Option<Sampling>,
) -> Result<Verdict> {
    let (left, right): (BTreeSet<_>, BTreeSet<_>) = (g.labels().iter().collect(), h.labels().iter().collect());
    if left != right {
        return Err(Error::LabelMismatch {
            left: g.labels().to_vec(),
            right: h.labels().to_vec(),
        });
    }
    if g.distinguished().len() != h.distinguished().len() {
        return Err(Error::DistinguishedMismatch {
            left: g.distinguished().len(),
            right: h.distinguished().len(),
        });
    }
    let names: Vec<String> = left.into_iter().cloned().collect();
    let relations = mode.relations(alg, caps)?;
    quantify(&names, &relations, caps, sampling, |b| {
        let (l, r): (TupleRelation, TupleRelation) = (g.eval(b, alg.size())?, h.eval(b, alg.size())?);
        Ok(l.tuples.iter().find(|t| !r.tuples.contains(*t)).cloned())
    })
}

/// Which clause of the theorem a pair of terms falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremCase {
    /// Both terms are `{∘, ∩}`-terms and `p` is regular.
    PlusFree,
    /// A `+` occurs; `p₃` or `p₄` is regular.
    WithPlus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regularity {
    pub premise_regular: bool,
    /// Regularity of `p₃` and `p₄` when a `+` occurs.
    pub p3_regular: Option<bool>,
    pub p4_regular: Option<bool>,
    /// The `n` whose `pₙ` was used for the condition.
    pub substitution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaltsevStatus {
    Certified,
    DefinitivelyAbsent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaltsevReport {
    pub status: MaltsevStatus,
    pub arity: usize,
    pub identities: usize,
    pub witness: Option<WitnessAssignment>,
    /// Why a supplied witness failed.
    pub counterexample: Option<Counterexample>,
    pub search: Option<SearchOutcome>,
}

/// Verdicts for the `+`-free forms actually fed to the condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutedVerdicts {
    pub congruence: Verdict,
    pub nest: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consistency {
    /// A certified condition came with a true nest verdict.
    pub certified_implies_nest: bool,
    /// Every true nest verdict came with a true congruence verdict.
    pub nest_implies_congruence: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub algebra: String,
    pub premise: String,
    pub conclusion: String,
    pub case: TheoremCase,
    pub premise_used: String,
    pub conclusion_used: String,
    pub regularity: Regularity,
    pub congruence: Verdict,
    pub nest: Verdict,
    pub substituted: Option<SubstitutedVerdicts>,
    pub maltsev: MaltsevReport,
    pub consistency: Consistency,
    pub notes: Vec<String>,
}

impl TheoremReport {
    /// Both inclusions hold on the algebra.
    pub fn holds(&self) -> bool {
        self.congruence.holds && self.nest.holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremOptions {
    pub witness: Option<WitnessAssignment>,
    /// Search when no witness is given or the given one fails. `None`
    /// searches the whole clone.
    pub search: Option<SearchMode>,
    /// `n` for expanding `+` in the conclusion.
    pub expand: usize,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        TheoremOptions {
            witness: None,
            search: None,
            expand: 3,
        }
    }
}

fn graph_of(t: &Term) -> Result<LabeledGraph> {
    LabeledGraph::of_term(t)
}

/// The `+`-free premise and conclusion a condition is generated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlusFreeForms {
    pub case: TheoremCase,
    pub premise: Term,
    pub conclusion: Term,
    pub regularity: Regularity,
}

/// Applies the regularity gate. A `+`-free `p` must be regular; otherwise `pₙ`
/// is taken for the first regular `n` among 3 and 4, and `q` is expanded
/// with `expand` factors.
pub fn plus_free_forms(p: &Term, q: &Term, expand: usize) -> Result<PlusFreeForms> {
    let case = if p.has_plus() || q.has_plus() {
        TheoremCase::WithPlus
    } else {
        TheoremCase::PlusFree
    };
    let (premise, regularity) = match case {
        TheoremCase::PlusFree => {
            if let Some((label, class_size)) = graph_of(p)?.regularity_violation() {
                return Err(Error::RegularityViolation { label, class_size });
            }
            (
                p.clone(),
                Regularity {
                    premise_regular: true,
                    p3_regular: None,
                    p4_regular: None,
                    substitution: None,
                },
            )
        }
        TheoremCase::WithPlus => {
            let p3 = p.plus_substitute(3)?;
            let p4 = p.plus_substitute(4)?;
            let (r3, r4) = (graph_of(&p3)?.is_regular(), graph_of(&p4)?.is_regular());
            let (n, used) = match (r3, r4) {
                (true, _) => (3, p3),
                (false, true) => (4, p4),
                _ => return Err(Error::RegularityGate(format!("neither p3 nor p4 of `{p}` is regular"))),
            };
            (
                used,
                Regularity {
                    premise_regular: graph_of(p).map(|g| g.is_regular()).unwrap_or(false),
                    p3_regular: Some(r3),
                    p4_regular: Some(r4),
                    substitution: Some(n),
                },
            )
        }
    };
    let conclusion = if q.has_plus() { q.plus_substitute(expand)? } else { q.clone() };
    Ok(PlusFreeForms {
        case,
        premise,
        conclusion,
        regularity,
    })
}

/// Checks the algebra-local implications of the theorem for `p ⊆ q`.
///
/// Errors with [`Error::Inconsistent`] if a certified condition meets a
/// failing nest inclusion, or a nest inclusion holds while the congruence
/// inclusion fails.
pub fn theorem_report(
    id: &str,
    alg: &FiniteAlgebra,
    p: &Term,
    q: &Term,
    options: &TheoremOptions,
    caps: &Caps,
) -> Result<TheoremReport> {
    same_names(p.variables().into_iter().collect(), q.variables().into_iter().collect())?;
    let forms = plus_free_forms(p, q, options.expand)?;
    let (case, p_used, q_used, regularity) = (forms.case, forms.premise, forms.conclusion, forms.regularity);
    let mut notes = vec![
        "verdicts are for this algebra only; no variety-level certificate is claimed".to_string(),
    ];
    if let Some(n) = regularity.substitution {
        notes.push(format!(
            "case (ii): condition built from p{n} and q{}; `+` is evaluated exactly in the verdicts",
            options.expand
        ));
    }

    let catalog = nest_representable_set(alg, caps)?;
    let congruences = catalog.congruences();
    let nest_set = catalog.nest_representables();
    let congruence = check_inclusion_over(p, q, &congruences, caps, None)?;
    let nest = check_inclusion_over(p, q, &nest_set, caps, None)?;
    let substituted = match case {
        TheoremCase::PlusFree => None,
        TheoremCase::WithPlus => Some(SubstitutedVerdicts {
            congruence: check_inclusion_over(&p_used, &q_used, &congruences, caps, None)?,
            nest: check_inclusion_over(&p_used, &q_used, &nest_set, caps, None)?,
        }),
    };

    let condition = generate_condition(&graph_of(&p_used)?, &graph_of(&q_used)?)?;
    let mut maltsev = MaltsevReport {
        status: MaltsevStatus::Inconclusive,
        arity: condition.arity(),
        identities: condition.identities().len(),
        witness: None,
        counterexample: None,
        search: None,
    };
    if let Some(w) = &options.witness {
        let report = check_witnesses(alg, &condition, w)?;
        if report.pass {
            maltsev.status = MaltsevStatus::Certified;
            maltsev.witness = Some(w.clone());
        } else {
            maltsev.counterexample = report.counterexample;
        }
    }
    if maltsev.status != MaltsevStatus::Certified && (options.witness.is_none() || options.search.is_some()) {
        let mode = options.search.unwrap_or(SearchMode::ExhaustiveClone);
        match bounded_term_search(alg, &condition, mode, caps) {
            Ok(outcome) => {
                maltsev.status = match outcome.status {
                    SearchStatus::Found => MaltsevStatus::Certified,
                    SearchStatus::NotFoundDefinitive => MaltsevStatus::DefinitivelyAbsent,
                    SearchStatus::Inconclusive => MaltsevStatus::Inconclusive,
                };
                if outcome.status == SearchStatus::Found {
                    maltsev.witness = outcome.assignment.clone();
                }
                maltsev.search = Some(outcome);
            }
            Err(Error::CapExceeded { what, count, cap }) => {
                notes.push(format!("term search stopped: {what} exceeds cap ({count} > {cap})"));
            }
            Err(e) => return Err(e),
        }
    }
    if maltsev.status == MaltsevStatus::DefinitivelyAbsent {
        notes.push("the condition fails on this algebra, so it fails in every variety containing it".into());
    }

    let used_nest = substituted.as_ref().map_or(&nest, |s| &s.nest);
    let consistency = Consistency {
        certified_implies_nest: maltsev.status != MaltsevStatus::Certified || used_nest.holds,
        nest_implies_congruence: (!nest.holds || congruence.holds)
            && substituted.as_ref().is_none_or(|s| !s.nest.holds || s.congruence.holds),
    };
    if !consistency.certified_implies_nest {
        return Err(Error::Inconsistent(format!(
            "certified condition for `{p_used}` ⊆ `{q_used}` but the nest inclusion fails on {id}"
        )));
    }
    if !consistency.nest_implies_congruence {
        return Err(Error::Inconsistent(format!(
            "nest inclusion holds but the congruence inclusion fails on {id}"
        )));
    }

    Ok(TheoremReport {
        algebra: id.to_string(),
        premise: p.to_string(),
        conclusion: q.to_string(),
        case,
        premise_used: p_used.to_string(),
        conclusion_used: q_used.to_string(),
        regularity,
        congruence,
        nest,
        substituted,
        maltsev,
        consistency,
        notes,
    })
}
