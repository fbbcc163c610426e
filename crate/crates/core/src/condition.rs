//! Maltsev conditions attached to a pair of labeled graphs.
//!
//! For a regular premise graph `G` with vertices `0..m` and a conclusion graph
//! `H`, the condition asks for one `m`-ary term `t_w` per vertex `w` of `H`
//! such that
//!
//! * `t_w(x₀, …, x_{m-1}) ≈ x_j` whenever `w` is the `ℓ`-th distinguished
//!   vertex of `H` and `j` the `ℓ`-th distinguished vertex of `G`;
//! * `t_w ≈ t_{w′}` after collapsing the variables along the `α`-classes of
//!   `G`, for every edge `{w, w′}` of `H` labeled `α`. Each class is
//!   collapsed onto its smallest member.
//!
//! Terms satisfying the condition on an algebra witness the inclusion
//! `G(Θ…) ⊆ H(Θ…)` for its nest-representable tolerances.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::graph::LabeledGraph;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Identity {
    /// `symbol(x₀, …) ≈ x_variable`.
    Projection { symbol: String, variable: usize },
    /// `left(x_{c(0)}, …) ≈ right(x_{c(0)}, …)` with `c = collapse`.
    Edge {
        label: String,
        left: String,
        right: String,
        collapse: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConditionFile", into = "ConditionFile")]
pub struct MaltsevCondition {
    arity: usize,
    symbols: Vec<String>,
    identities: Vec<Identity>,
}

/// On-disk form: `{"arity": m, "symbols": [...], "identities": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionFile {
    pub arity: usize,
    pub symbols: Vec<String>,
    pub identities: Vec<Identity>,
}

impl TryFrom<ConditionFile> for MaltsevCondition {
    type Error = Error;

    fn try_from(f: ConditionFile) -> Result<Self> {
        MaltsevCondition::new(f.arity, f.symbols, f.identities)
    }
}

impl From<MaltsevCondition> for ConditionFile {
    fn from(c: MaltsevCondition) -> Self {
        ConditionFile {
            arity: c.arity,
            symbols: c.symbols,
            identities: c.identities,
        }
    }
}

impl MaltsevCondition {
    pub fn new(arity: usize, symbols: Vec<String>, identities: Vec<Identity>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidCondition(m));
        if arity == 0 {
            return bad("arity must be positive".into());
        }
        let known: BTreeSet<&str> = symbols.iter().map(String::as_str).collect();
        if known.len() != symbols.len() {
            return bad("duplicate symbol".into());
        }
        for id in &identities {
            match id {
                Identity::Projection { symbol, variable } => {
                    if !known.contains(symbol.as_str()) {
                        return bad(format!("unknown symbol `{symbol}`"));
                    }
                    if *variable >= arity {
                        return bad(format!("variable x{variable} out of range"));
                    }
                }
                Identity::Edge {
                    left,
                    right,
                    collapse,
                    ..
                } => {
                    for s in [left, right] {
                        if !known.contains(s.as_str()) {
                            return bad(format!("unknown symbol `{s}`"));
                        }
                    }
                    if collapse.len() != arity
                        || collapse.iter().any(|&c| c >= arity || collapse[c] != c)
                    {
                        return bad(format!("collapse {collapse:?} is not a retraction of {arity} variables"));
                    }
                }
            }
        }
        Ok(MaltsevCondition {
            arity,
            symbols,
            identities,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn identities(&self) -> &[Identity] {
        &self.identities
    }
}

/// Builds `M(G, H)`.
pub fn generate_condition(premise: &LabeledGraph, conclusion: &LabeledGraph) -> Result<MaltsevCondition> {
    if let Some((label, class_size)) = premise.regularity_violation() {
        return Err(Error::RegularityViolation { label, class_size });
    }
    let left: BTreeSet<&String> = premise.labels().iter().collect();
    let right: BTreeSet<&String> = conclusion.labels().iter().collect();
    if left != right {
        return Err(Error::LabelMismatch {
            left: premise.labels().to_vec(),
            right: conclusion.labels().to_vec(),
        });
    }
    if premise.distinguished().len() != conclusion.distinguished().len() {
        return Err(Error::DistinguishedMismatch {
            left: premise.distinguished().len(),
            right: conclusion.distinguished().len(),
        });
    }
    let m = premise.vertex_count();
    let symbol = |w: usize| format!("t{w}");
    let symbols = (0..conclusion.vertex_count()).map(symbol).collect();

    let mut identities: Vec<Identity> = premise
        .distinguished()
        .iter()
        .zip(conclusion.distinguished())
        .map(|(&j, &w)| Identity::Projection {
            symbol: symbol(w),
            variable: j,
        })
        .collect();
    for label in premise.labels() {
        let mut collapse: Vec<usize> = (0..m).collect();
        for class in premise.label_classes(label)? {
            for &v in &class {
                collapse[v] = class[0];
            }
        }
        for e in conclusion.edges().iter().filter(|e| &e.label == label) {
            identities.push(Identity::Edge {
                label: label.clone(),
                left: symbol(e.u),
                right: symbol(e.v),
                collapse: collapse.clone(),
            });
        }
    }
    MaltsevCondition::new(m, symbols, identities)
}

/// A term over the basic operations of an algebra in variables `x0, x1, …`.
///
/// Written as the tree `{"var": i}` / `{"op": name, "args": [...]}`; the
/// function-call string `add(x0,neg(x1))` is accepted wherever a term is read.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WitnessTerm {
    Var(usize),
    Apply(String, Vec<WitnessTerm>),
}

impl WitnessTerm {
    pub fn apply(op: &str, args: Vec<WitnessTerm>) -> WitnessTerm {
        WitnessTerm::Apply(op.to_string(), args)
    }

    pub fn depth(&self) -> usize {
        match self {
            WitnessTerm::Var(_) => 0,
            WitnessTerm::Apply(_, args) => 1 + args.iter().map(WitnessTerm::depth).max().unwrap_or(0),
        }
    }

    fn validate(&self, alg: &FiniteAlgebra, arity: usize) -> Result<()> {
        match self {
            WitnessTerm::Var(i) if *i >= arity => {
                Err(Error::Arity(format!("variable x{i} in a term of arity {arity}")))
            }
            WitnessTerm::Var(_) => Ok(()),
            WitnessTerm::Apply(name, args) => {
                let op = alg
                    .operation(name)
                    .ok_or_else(|| Error::UnknownOperation(name.clone()))?;
                if op.arity != args.len() {
                    return Err(Error::Arity(format!(
                        "`{name}` takes {} arguments, got {}",
                        op.arity,
                        args.len()
                    )));
                }
                args.iter().try_for_each(|a| a.validate(alg, arity))
            }
        }
    }

    /// Evaluates a validated term.
    pub fn eval(&self, alg: &FiniteAlgebra, values: &[usize]) -> usize {
        match self {
            WitnessTerm::Var(i) => values[*i],
            WitnessTerm::Apply(name, args) => {
                let op = alg.operation(name).expect("validated term");
                let args: Vec<usize> = args.iter().map(|a| a.eval(alg, values)).collect();
                op.apply(alg.size(), &args)
            }
        }
    }
}

impl fmt::Display for WitnessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessTerm::Var(i) => write!(f, "x{i}"),
            WitnessTerm::Apply(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for WitnessTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        let mut pos = 0;
        let term = parse_witness(&chars, &mut pos, s.len())?;
        if pos != chars.len() {
            return Err(Error::Parse {
                position: chars[pos].0,
                message: "trailing input".into(),
            });
        }
        Ok(term)
    }
}

fn parse_witness(chars: &[(usize, char)], pos: &mut usize, end: usize) -> Result<WitnessTerm> {
    let at = |pos: usize| chars.get(pos).map_or(end, |(i, _)| *i);
    let start = *pos;
    while *pos < chars.len() && (chars[*pos].1.is_alphanumeric() || chars[*pos].1 == '_') {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse {
            position: at(*pos),
            message: "expected a variable or an operation name".into(),
        });
    }
    let name: String = chars[start..*pos].iter().map(|(_, c)| c).collect();
    if chars.get(*pos).map(|(_, c)| *c) != Some('(') {
        return name
            .strip_prefix('x')
            .and_then(|d| d.parse().ok())
            .map(WitnessTerm::Var)
            .ok_or(Error::Parse {
                position: at(start),
                message: format!("`{name}` is not a variable x<index>"),
            });
    }
    *pos += 1;
    let mut args = Vec::new();
    if chars.get(*pos).map(|(_, c)| *c) == Some(')') {
        *pos += 1;
        return Ok(WitnessTerm::Apply(name, args));
    }
    loop {
        args.push(parse_witness(chars, pos, end)?);
        match chars.get(*pos).map(|(_, c)| *c) {
            Some(',') => *pos += 1,
            Some(')') => {
                *pos += 1;
                return Ok(WitnessTerm::Apply(name, args));
            }
            _ => {
                return Err(Error::Parse {
                    position: at(*pos),
                    message: "expected `,` or `)`".into(),
                })
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WitnessTermFile {
    Var { var: usize },
    Apply { op: String, args: Vec<WitnessTermFile> },
    Text(String),
}

impl Serialize for WitnessTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        fn to_file(t: &WitnessTerm) -> WitnessTermFile {
            match t {
                WitnessTerm::Var(i) => WitnessTermFile::Var { var: *i },
                WitnessTerm::Apply(op, args) => WitnessTermFile::Apply {
                    op: op.clone(),
                    args: args.iter().map(to_file).collect(),
                },
            }
        }
        to_file(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for WitnessTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        fn from_file(f: WitnessTermFile) -> Result<WitnessTerm> {
            Ok(match f {
                WitnessTermFile::Var { var } => WitnessTerm::Var(var),
                WitnessTermFile::Apply { op, args } => {
                    WitnessTerm::Apply(op, args.into_iter().map(from_file).collect::<Result<_>>()?)
                }
                WitnessTermFile::Text(s) => s.parse()?,
            })
        }
        from_file(WitnessTermFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Terms for the symbols of a condition, all of the same arity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessAssignment {
    pub arity: usize,
    pub terms: BTreeMap<String, WitnessTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Index into the condition's identity list.
    pub identity: usize,
    /// Values of `x₀, …, x_{m-1}` after collapsing.
    pub arguments: Vec<usize>,
    pub left: String,
    pub left_value: usize,
    /// The right-hand symbol, or `x<j>` for a projection identity.
    pub right: String,
    pub right_value: usize,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self
            .arguments
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",");
        write!(
            f,
            "identity {}: {}({args}) = {} but {} = {}",
            self.identity, self.left, self.left_value, self.right, self.right_value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub pass: bool,
    pub assignments_checked: u64,
    pub counterexample: Option<Counterexample>,
    pub note: String,
}

const PERSISTENCE_NOTE: &str = "identities valid on the algebra hold in every algebra of the variety it generates";

/// Positions `x` with `collapse[x] == x`, i.e. the free variables of an identity.
fn representatives(collapse: &[usize]) -> Vec<usize> {
    collapse
        .iter()
        .enumerate()
        .filter(|&(i, &c)| i == c)
        .map(|(i, _)| i)
        .collect()
}

/// Calls `f` with every assignment of `values` to the `free` positions,
/// the other positions copied from their representative. Lexicographic with
/// the first free position most significant. Stops early when `f` returns
/// false; returns the number of assignments visited.
fn for_each_collapsed(
    n: usize,
    collapse: &[usize],
    mut f: impl FnMut(&[usize]) -> bool,
) -> u64 {
    let free = representatives(collapse);
    let mut digits = vec![0usize; free.len()];
    let mut values = vec![0usize; collapse.len()];
    let mut visited = 0;
    loop {
        for (i, &c) in collapse.iter().enumerate() {
            values[i] = digits[free.iter().position(|&p| p == c).expect("retraction")];
        }
        visited += 1;
        if !f(&values) {
            return visited;
        }
        let mut slot = digits.len();
        loop {
            if slot == 0 {
                return visited;
            }
            slot -= 1;
            digits[slot] += 1;
            if digits[slot] < n {
                break;
            }
            digits[slot] = 0;
        }
    }
}

/// Evaluates every identity of `cond` on `alg` under `assignment`.
pub fn check_witnesses(
    alg: &FiniteAlgebra,
    cond: &MaltsevCondition,
    assignment: &WitnessAssignment,
) -> Result<WitnessReport> {
    if assignment.arity != cond.arity {
        return Err(Error::Arity(format!(
            "witnesses have arity {}, the condition needs {}",
            assignment.arity, cond.arity
        )));
    }
    for s in &cond.symbols {
        let t = assignment
            .terms
            .get(s)
            .ok_or_else(|| Error::MissingSymbol(s.clone()))?;
        t.validate(alg, cond.arity)?;
    }
    let identity_map: Vec<usize> = (0..cond.arity).collect();
    let mut checked = 0;
    for (index, id) in cond.identities.iter().enumerate() {
        let mut failure = None;
        let (left, collapse) = match id {
            Identity::Projection { symbol, .. } => (symbol, &identity_map),
            Identity::Edge { left, collapse, .. } => (left, collapse),
        };
        let lhs = &assignment.terms[left];
        checked += for_each_collapsed(alg.size(), collapse, |values| {
            let lv = lhs.eval(alg, values);
            let (right, rv) = match id {
                Identity::Projection { variable, .. } => (format!("x{variable}"), values[*variable]),
                Identity::Edge { right, .. } => (right.clone(), assignment.terms[right].eval(alg, values)),
            };
            if lv != rv {
                failure = Some(Counterexample {
                    identity: index,
                    arguments: values.to_vec(),
                    left: left.clone(),
                    left_value: lv,
                    right,
                    right_value: rv,
                });
                return false;
            }
            true
        });
        if failure.is_some() {
            return Ok(WitnessReport {
                pass: false,
                assignments_checked: checked,
                counterexample: failure,
                note: PERSISTENCE_NOTE.into(),
            });
        }
    }
    Ok(WitnessReport {
        pass: true,
        assignments_checked: checked,
        counterexample: None,
        note: PERSISTENCE_NOTE.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Terms of depth at most the given bound.
    Depth(usize),
    /// The whole clone of `m`-ary term operations.
    ExhaustiveClone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchStatus {
    Found,
    NotFoundDefinitive,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub assignment: Option<WitnessAssignment>,
    /// Number of distinct term operations searched.
    pub operations: usize,
    /// Depth of the deepest layer generated.
    pub depth: usize,
    /// Whether the generated operations are the whole clone.
    pub saturated: bool,
}

/// The `m`-ary term operations of an algebra, grown layer by layer. Each
/// operation is kept once (by value table) with the first, hence shallowest,
/// term found for it.
pub struct TermClone<'a> {
    alg: &'a FiniteAlgebra,
    arity: usize,
    len: usize,
    tables: Vec<Vec<u8>>,
    terms: Vec<WitnessTerm>,
    index: HashMap<Vec<u8>, usize>,
    layer_start: usize,
    depth: usize,
    saturated: bool,
    work: u128,
}

impl<'a> TermClone<'a> {
    /// Starts from the projections.
    pub fn new(alg: &'a FiniteAlgebra, arity: usize, caps: &Caps) -> Result<Self> {
        if alg.size() > u8::MAX as usize + 1 {
            return Err(Error::InvalidSize(alg.size()));
        }
        let len = u32::try_from(arity)
            .ok()
            .and_then(|k| alg.size().checked_pow(k))
            .unwrap_or(usize::MAX);
        Caps::check("term operation table length", len as u128, caps.max_clone as u128)?;
        let mut clone = TermClone {
            alg,
            arity,
            len,
            tables: Vec::new(),
            terms: Vec::new(),
            index: HashMap::new(),
            layer_start: 0,
            depth: 0,
            saturated: false,
            work: 0,
        };
        for j in 0..arity {
            let stride = alg.size().pow((arity - 1 - j) as u32);
            let table = (0..len).map(|i| ((i / stride) % alg.size()) as u8).collect();
            clone.insert(table, WitnessTerm::Var(j));
        }
        Ok(clone)
    }

    fn insert(&mut self, table: Vec<u8>, term: WitnessTerm) -> bool {
        if self.index.contains_key(&table) {
            return false;
        }
        self.index.insert(table.clone(), self.tables.len());
        self.tables.push(table);
        self.terms.push(term);
        true
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tables(&self) -> &[Vec<u8>] {
        &self.tables
    }

    pub fn terms(&self) -> &[WitnessTerm] {
        &self.terms
    }

    /// Applies every basic operation to argument tuples that use at least one
    /// operation of the newest layer. Returns whether anything new appeared.
    pub fn grow(&mut self, caps: &Caps) -> Result<bool> {
        if self.saturated {
            return Ok(false);
        }
        let end = self.tables.len();
        let (old, newest) = (self.layer_start, end);
        let first_layer = self.depth == 0;
        let n = self.alg.size();
        let mut produced = false;
        for op in self.alg.operations() {
            let k = op.arity;
            if k == 0 {
                if first_layer {
                    let table = vec![op.table[0] as u8; self.len];
                    produced |= self.insert(table, WitnessTerm::apply(&op.name, Vec::new()));
                }
                continue;
            }
            for first in 0..k {
                // Slots before `first` take older operations, `first` takes the
                // newest layer, later slots take anything.
                let ranges: Vec<(usize, usize)> = (0..k)
                    .map(|s| match s.cmp(&first) {
                        std::cmp::Ordering::Less => (0, old),
                        std::cmp::Ordering::Equal => (old, newest),
                        std::cmp::Ordering::Greater => (0, newest),
                    })
                    .collect();
                if ranges.iter().any(|(a, b)| a >= b) {
                    continue;
                }
                let mut choice: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                let mut args = vec![0usize; k];
                loop {
                    self.work += 1;
                    Caps::check("term operation evaluations", self.work, caps.max_evals)?;
                    let table: Vec<u8> = (0..self.len)
                        .map(|i| {
                            for (slot, &c) in choice.iter().enumerate() {
                                args[slot] = self.tables[c][i] as usize;
                            }
                            op.apply(n, &args) as u8
                        })
                        .collect();
                    if !self.index.contains_key(&table) {
                        let term = WitnessTerm::apply(
                            &op.name,
                            choice.iter().map(|&c| self.terms[c].clone()).collect(),
                        );
                        self.insert(table, term);
                        produced = true;
                        Caps::check("clone size", self.tables.len() as u128, caps.max_clone as u128)?;
                    }
                    let mut slot = k;
                    let advanced = loop {
                        if slot == 0 {
                            break false;
                        }
                        slot -= 1;
                        choice[slot] += 1;
                        if choice[slot] < ranges[slot].1 {
                            break true;
                        }
                        choice[slot] = ranges[slot].0;
                    };
                    if !advanced {
                        break;
                    }
                }
            }
        }
        self.layer_start = end;
        if produced {
            self.depth += 1;
        } else {
            self.saturated = true;
        }
        Ok(produced)
    }
}

/// Looks for terms satisfying `cond` on `alg`.
///
/// `Depth(d)` searches the term operations of depth at most `d` and can only
/// answer `Found` or `Inconclusive`. `ExhaustiveClone` builds the whole
/// `m`-ary clone, so a failure there is definitive for this algebra.
pub fn bounded_term_search(
    alg: &FiniteAlgebra,
    cond: &MaltsevCondition,
    mode: SearchMode,
    caps: &Caps,
) -> Result<SearchOutcome> {
    let mut clone = TermClone::new(alg, cond.arity, caps)?;
    match mode {
        SearchMode::Depth(d) => {
            while clone.depth() < d && clone.grow(caps)? {}
        }
        SearchMode::ExhaustiveClone => while clone.grow(caps)? {},
    }
    let solution = solve(&clone, cond);
    let status = match (&solution, mode) {
        (Some(_), _) => SearchStatus::Found,
        (None, SearchMode::ExhaustiveClone) => SearchStatus::NotFoundDefinitive,
        (None, SearchMode::Depth(_)) => SearchStatus::Inconclusive,
    };
    let assignment = solution.map(|chosen| WitnessAssignment {
        arity: cond.arity,
        terms: cond
            .symbols
            .iter()
            .zip(chosen)
            .map(|(s, t)| (s.clone(), clone.terms[t].clone()))
            .collect(),
    });
    if let Some(a) = &assignment {
        let report = check_witnesses(alg, cond, a)?;
        if !report.pass {
            return Err(Error::Inconsistent(format!(
                "search produced a failing assignment: {}",
                report.counterexample.map(|c| c.to_string()).unwrap_or_default()
            )));
        }
    }
    Ok(SearchOutcome {
        status,
        assignment,
        operations: clone.len(),
        depth: clone.depth(),
        saturated: clone.is_saturated(),
    })
}

/// One binary constraint: the two symbols' tables agree on `positions`.
struct Constraint {
    left: usize,
    right: usize,
    positions: Vec<usize>,
}

/// Backtracking over symbols; candidates are tried in canonical table order.
/// Returns the chosen clone index per symbol.
fn solve(clone: &TermClone<'_>, cond: &MaltsevCondition) -> Option<Vec<usize>> {
    let n = clone.alg.size();
    let m = cond.arity;
    let symbol_index: HashMap<&str, usize> = cond
        .symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut canonical: Vec<usize> = (0..clone.len()).collect();
    canonical.sort_by(|&a, &b| clone.tables[a].cmp(&clone.tables[b]));

    let mut forced: Vec<Option<usize>> = vec![None; cond.symbols.len()];
    let mut constraints = Vec::new();
    for id in &cond.identities {
        match id {
            Identity::Projection { symbol, variable } => {
                let s = symbol_index[symbol.as_str()];
                // The projection onto x_j is always clone entry j.
                match forced[s] {
                    Some(previous) if clone.tables[previous] != clone.tables[*variable] => return None,
                    _ => forced[s] = Some(*variable),
                }
            }
            Identity::Edge {
                left,
                right,
                collapse,
                ..
            } => {
                let mut positions = Vec::new();
                for_each_collapsed(n, collapse, |values| {
                    positions.push(values.iter().fold(0, |acc, &v| acc * n + v));
                    true
                });
                debug_assert!(positions.iter().all(|&p| p < n.pow(m as u32)));
                constraints.push(Constraint {
                    left: symbol_index[left.as_str()],
                    right: symbol_index[right.as_str()],
                    positions,
                });
            }
        }
    }

    // Forced symbols first, then breadth-first along constraints, then the rest.
    let count = cond.symbols.len();
    let mut order: Vec<usize> = (0..count).filter(|&s| forced[s].is_some()).collect();
    let mut placed: Vec<bool> = (0..count).map(|s| forced[s].is_some()).collect();
    let mut cursor = 0;
    loop {
        while cursor < order.len() {
            let s = order[cursor];
            cursor += 1;
            for c in &constraints {
                for (a, b) in [(c.left, c.right), (c.right, c.left)] {
                    if a == s && !placed[b] {
                        placed[b] = true;
                        order.push(b);
                    }
                }
            }
        }
        match (0..count).find(|&s| !placed[s]) {
            Some(s) => {
                placed[s] = true;
                order.push(s);
            }
            None => break,
        }
    }

    let mut chosen: Vec<Option<usize>> = vec![None; count];
    let mut buckets = Buckets::new();
    if assign(clone, &order, 0, &forced, &constraints, &canonical, &mut chosen, &mut buckets) {
        Some(chosen.into_iter().map(|c| c.expect("assigned")).collect())
    } else {
        None
    }
}

/// Clone indices by their values on a constraint's positions, per constraint.
type Buckets = HashMap<(usize, usize), HashMap<Vec<u8>, Vec<usize>>>;

fn signature(table: &[u8], positions: &[usize]) -> Vec<u8> {
    positions.iter().map(|&p| table[p]).collect()
}

#[allow(clippy::too_many_arguments)]
fn assign(
    clone: &TermClone<'_>,
    order: &[usize],
    at: usize,
    forced: &[Option<usize>],
    constraints: &[Constraint],
    canonical: &[usize],
    chosen: &mut Vec<Option<usize>>,
    buckets: &mut Buckets,
) -> bool {
    let Some(&s) = order.get(at) else {
        return true;
    };
    // Constraints between `s` and an already chosen symbol, as (index, other).
    let active: Vec<(usize, usize)> = constraints
        .iter()
        .enumerate()
        .filter_map(|(k, c)| {
            let other = if c.left == s { c.right } else if c.right == s { c.left } else { return None };
            if other == s {
                return Some((k, s));
            }
            chosen[other].map(|_| (k, other))
        })
        .collect();

    let candidates: Vec<usize> = if let Some(f) = forced[s] {
        vec![f]
    } else if let Some(&(k, other)) = active.iter().find(|(_, o)| *o != s) {
        let bucket = buckets.entry((k, 0)).or_insert_with(|| {
            let mut map: HashMap<Vec<u8>, Vec<usize>> = HashMap::new();
            for &t in canonical {
                map.entry(signature(&clone.tables[t], &constraints[k].positions))
                    .or_default()
                    .push(t);
            }
            map
        });
        let key = signature(&clone.tables[chosen[other].expect("chosen")], &constraints[k].positions);
        bucket.get(&key).cloned().unwrap_or_default()
    } else {
        canonical.to_vec()
    };

    for t in candidates {
        let ok = active.iter().all(|&(k, other)| {
            let partner = if other == s { t } else { chosen[other].expect("chosen") };
            constraints[k]
                .positions
                .iter()
                .all(|&p| clone.tables[t][p] == clone.tables[partner][p])
        });
        if !ok {
            continue;
        }
        chosen[s] = Some(t);
        if assign(clone, order, at + 1, forced, constraints, canonical, chosen, buckets) {
            return true;
        }
    }
    chosen[s] = None;
    false
}
