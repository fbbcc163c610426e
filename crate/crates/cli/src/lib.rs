//! The `tolkit` command line.
//!
//! Machine output is JSON (standard output or `--out`); human summaries are
//! printed as lines starting with `# `. Exit codes: 0 success, 1 the checked
//! property fails, 2 usage or input error, 3 a cap was exceeded, 4 an internal
//! consistency violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tolkit_core::condition::WitnessAssignment;
use tolkit_core::{
    bounded_term_search, check_graph_inclusion, check_inclusion_over, check_witnesses, generate_condition,
    nest_representable_set, plus_free_forms, theorem_report, BinaryRelation, Bindings, Caps, Error, FiniteAlgebra,
    LabeledGraph, MaltsevCondition, RelationSet, Sampling, SearchMode, SearchStatus, Term, TheoremOptions,
    Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "tolkit", version, about = "Tolerance identities on finite algebras")]
struct Cli {
    #[command(flatten)]
    caps: CapArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CapArgs {
    /// Largest universe the enumerations accept.
    #[arg(long, global = true, env = "TOLKIT_MAX_SIZE")]
    max_size: Option<usize>,
    /// Largest number of relations an enumeration may produce.
    #[arg(long, global = true, env = "TOLKIT_MAX_SET")]
    max_set: Option<usize>,
    /// Largest number of binding tuples (or term evaluations) a check may use.
    #[arg(long, global = true, env = "TOLKIT_MAX_EVALS")]
    max_evals: Option<u128>,
    /// Largest clone of term operations the search may build.
    #[arg(long, global = true, env = "TOLKIT_MAX_CLONE")]
    max_clone: Option<usize>,
}

impl CapArgs {
    fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps {
            max_size: self.max_size.unwrap_or(d.max_size),
            max_set: self.max_set.unwrap_or(d.max_set),
            max_evals: self.max_evals.unwrap_or(d.max_evals),
            max_clone: self.max_clone.unwrap_or(d.max_clone),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that an algebra file is well formed.
    Validate { algebra: PathBuf },
    /// Tolerances with their congruence, representable, weak and nest flags.
    Classify {
        algebra: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a relation term under bindings.
    Eval {
        algebra: PathBuf,
        #[arg(long)]
        term: String,
        /// NAME=RELATION_FILE, repeatable.
        #[arg(long = "bind", value_name = "NAME=FILE")]
        bind: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check p ⊆ q over congruences and/or nest-representable tolerances.
    Check {
        algebra: PathBuf,
        #[arg(short, long)]
        p: String,
        #[arg(short, long)]
        q: String,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Graph(GraphCommand),
    #[command(subcommand)]
    Maltsev(MaltsevCommand),
    /// The theorem's algebra-local implications for p ⊆ q.
    Theorem {
        algebra: PathBuf,
        #[arg(short, long)]
        p: String,
        #[arg(short, long)]
        q: String,
        /// Witness assignment to certify the condition with.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        /// Factors used for `+` in the conclusion's condition form.
        #[arg(long, default_value_t = 3)]
        expand: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum GraphCommand {
    /// The series-parallel graph of a `+`-free term.
    OfTerm {
        #[arg(long)]
        term: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whether a term or graph is regular.
    Regular {
        #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
        term: Option<String>,
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Evaluate a graph under bindings.
    Eval {
        graph: PathBuf,
        #[arg(long = "bind", value_name = "NAME=FILE")]
        bind: Vec<String>,
        /// Universe size, needed only when nothing is bound.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check G ⊆ H over congruences and/or nest-representable tolerances.
    Check {
        algebra: PathBuf,
        #[arg(long)]
        premise: PathBuf,
        #[arg(long)]
        conclusion: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum MaltsevCommand {
    /// Generate the condition for a pair of terms or graphs.
    Gen {
        #[arg(short, long, requires = "q", conflicts_with = "premise")]
        p: Option<String>,
        #[arg(short, long)]
        q: Option<String>,
        #[arg(long, requires = "conclusion", required_unless_present = "p")]
        premise: Option<PathBuf>,
        #[arg(long)]
        conclusion: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        expand: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a witness assignment against a condition.
    Check {
        algebra: PathBuf,
        condition: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the algebra's term operations for witnesses.
    Search {
        algebra: PathBuf,
        condition: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Spot-check this many random binding tuples instead of all of them.
    #[arg(long)]
    sample: Option<u64>,
    #[arg(long, default_value_t = 0, requires = "sample")]
    seed: u64,
}

impl SampleArgs {
    fn sampling(&self) -> Option<Sampling> {
        self.sample.map(|samples| Sampling {
            samples,
            seed: self.seed,
        })
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, value_enum)]
    search: Option<SearchKind>,
    /// Depth bound for `--search depth`.
    #[arg(long, default_value_t = 3)]
    depth: usize,
}

impl SearchArgs {
    fn mode(&self) -> Option<SearchMode> {
        self.search.map(|k| match k {
            SearchKind::Depth => SearchMode::Depth(self.depth),
            SearchKind::Clone => SearchMode::ExhaustiveClone,
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SearchKind {
    Depth,
    Clone,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Congruences,
    Nest,
    Both,
}

impl Mode {
    fn sets(self) -> Vec<RelationSet> {
        match self {
            Mode::Congruences => vec![RelationSet::Congruences],
            Mode::Nest => vec![RelationSet::Nest],
            Mode::Both => vec![RelationSet::Congruences, RelationSet::Nest],
        }
    }
}

/// Failures of a command, before mapping to exit codes.
#[derive(Debug)]
enum Failure {
    Lib(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<i32, Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
}

impl Io<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "# {}", line.as_ref());
    }

    fn emit<T: Serialize>(&mut self, value: &T, path: Option<&Path>) -> std::result::Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
        text.push('\n');
        match path {
            Some(p) => {
                fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
                self.say(format!("wrote {}", p.display()));
            }
            None => {
                let _ = self.out.write_all(text.as_bytes());
            }
        }
        Ok(())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    // Summary lines from a redirected run are skipped.
    let json: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    serde_json::from_str(&json).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn algebra_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_term(s: &str) -> std::result::Result<Term, Failure> {
    Term::parse(s).map_err(|e| Failure::Input(format!("term `{s}`: {e}")))
}

fn read_bindings(binds: &[String]) -> std::result::Result<Bindings, Failure> {
    let mut out = Bindings::new();
    for item in binds {
        let (name, file) = item
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("binding `{item}` is not NAME=FILE")))?;
        let rel: BinaryRelation = read_json(Path::new(file))?;
        if out.insert(name.to_string(), rel).is_some() {
            return Err(Failure::Input(format!("`{name}` bound twice")));
        }
    }
    Ok(out)
}

fn describe(verdict: &Verdict) -> String {
    let scope = if verdict.exhaustive { "" } else { " (sampled, not exhaustive)" };
    match &verdict.counterexample {
        None => format!("holds over {} binding tuples{scope}", verdict.evaluated),
        Some(cx) => {
            let binds = cx
                .bindings
                .iter()
                .map(|(n, r)| format!("{n} = {r}"))
                .collect::<Vec<_>>()
                .join(", ");
            let tuple = cx.tuple.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            format!("fails{scope}: counterexample {binds}; tuple ({tuple})")
        }
    }
}

#[derive(Serialize)]
struct CheckOutput {
    algebra: String,
    premise: String,
    conclusion: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    congruences: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nest: Option<Verdict>,
}

#[derive(Serialize)]
struct EvalOutput {
    term: String,
    relation: BinaryRelation,
}

#[derive(Serialize)]
struct RegularOutput {
    regular: bool,
    violation: Option<Violation>,
}

#[derive(Serialize)]
struct Violation {
    label: String,
    class_size: usize,
}

#[derive(Serialize)]
struct TuplesOutput {
    size: usize,
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct ValidateOutput {
    algebra: String,
    size: usize,
    operations: Vec<(String, usize)>,
}

/// Runs the command line in `argv` (program name first).
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let caps = cli.caps.caps();
    let mut io = Io { out };
    match dispatch(cli.command, &caps, &mut io) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::CapExceeded { .. } => EXIT_CAP,
                Error::Inconsistent(_) => EXIT_INCONSISTENT,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn dispatch(command: Command, caps: &Caps, io: &mut Io<'_>) -> Outcome {
    match command {
        Command::Validate { algebra } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            io.say(format!("{}: valid algebra of size {}", algebra.display(), alg.size()));
            io.emit(
                &ValidateOutput {
                    algebra: algebra_id(&algebra),
                    size: alg.size(),
                    operations: alg.operations().iter().map(|o| (o.name.clone(), o.arity)).collect(),
                },
                None,
            )?;
            Ok(EXIT_OK)
        }
        Command::Classify { algebra, out } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let catalog = nest_representable_set(&alg, caps)?;
            io.say(format!(
                "{} tolerances: {} congruences, {} representable, {} weakly representable, {} nest-representable",
                catalog.entries.len(),
                catalog.congruences().len(),
                catalog.representables().len(),
                catalog.weakly_representables().len(),
                catalog.nest_representables().len()
            ));
            io.emit(&catalog, out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Eval {
            algebra,
            term,
            bind,
            out,
        } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let t = parse_term(&term)?;
            let bindings = read_bindings(&bind)?;
            for (name, rel) in &bindings {
                if rel.size() != alg.size() {
                    return Err(Error::SizeMismatch {
                        expected: alg.size(),
                        found: rel.size(),
                    }
                    .into());
                }
                if !tolkit_core::is_compatible(&alg, rel)? {
                    io.say(format!("note: `{name}` is not compatible with the algebra"));
                }
            }
            let relation = t.eval(&bindings)?;
            io.say(format!("{t} = {relation}"));
            io.emit(&EvalOutput { term: t.to_string(), relation }, out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Check {
            algebra,
            p,
            q,
            mode,
            sample,
            out,
        } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let (p, q) = (parse_term(&p)?, parse_term(&q)?);
            let mut report = CheckOutput {
                algebra: algebra_id(&algebra),
                premise: p.to_string(),
                conclusion: q.to_string(),
                congruences: None,
                nest: None,
            };
            for set in mode.sets() {
                let relations = set.relations(&alg, caps)?;
                let verdict = check_inclusion_over(&p, &q, &relations, caps, sample.sampling())?;
                io.say(format!("{}: {p} ⊆ {q} {}", set_name(set), describe(&verdict)));
                match set {
                    RelationSet::Congruences => report.congruences = Some(verdict),
                    RelationSet::Nest => report.nest = Some(verdict),
                }
            }
            let holds = report.congruences.iter().chain(&report.nest).all(|v| v.holds);
            io.emit(&report, out.as_deref())?;
            Ok(if holds { EXIT_OK } else { EXIT_FAILS })
        }
        Command::Graph(g) => graph(g, caps, io),
        Command::Maltsev(m) => maltsev(m, caps, io),
        Command::Theorem {
            algebra,
            p,
            q,
            witness,
            search,
            expand,
            out,
        } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let (p, q) = (parse_term(&p)?, parse_term(&q)?);
            let witness: Option<WitnessAssignment> = witness.as_deref().map(read_json).transpose()?;
            let options = TheoremOptions {
                witness,
                search: search.mode(),
                expand,
            };
            let report = theorem_report(&algebra_id(&algebra), &alg, &p, &q, &options, caps)?;
            let r = &report.regularity;
            io.say(match r.substitution {
                None => format!("case (i): premise {} is regular", report.premise),
                Some(n) => format!(
                    "case (ii): p3 regular {}, p4 regular {}; using p{n} = {} and {}",
                    r.p3_regular == Some(true),
                    r.p4_regular == Some(true),
                    report.premise_used,
                    report.conclusion_used
                ),
            });
            io.say(format!("congruences: {}", describe(&report.congruence)));
            io.say(format!("nest: {}", describe(&report.nest)));
            io.say(format!("maltsev condition: {:?}", report.maltsev.status));
            for note in &report.notes {
                io.say(note);
            }
            io.emit(&report, out.as_deref())?;
            Ok(if report.holds() { EXIT_OK } else { EXIT_FAILS })
        }
    }
}

fn set_name(set: RelationSet) -> &'static str {
    match set {
        RelationSet::Congruences => "congruences",
        RelationSet::Nest => "nest-representable tolerances",
    }
}

fn graph(command: GraphCommand, caps: &Caps, io: &mut Io<'_>) -> Outcome {
    match command {
        GraphCommand::OfTerm { term, out } => {
            let g = LabeledGraph::of_term(&parse_term(&term)?)?;
            io.say(format!("{} vertices, {} edges", g.vertex_count(), g.edges().len()));
            io.emit(&g, out.as_deref())?;
            Ok(EXIT_OK)
        }
        GraphCommand::Regular { term, graph } => {
            let g = match (term, graph) {
                (Some(t), _) => LabeledGraph::of_term(&parse_term(&t)?)?,
                (None, Some(path)) => read_json(&path)?,
                (None, None) => return Err(Failure::Input("give --term or --graph".into())),
            };
            let violation = g.regularity_violation();
            io.say(match &violation {
                None => "regular".to_string(),
                Some((l, n)) => format!("not regular: label `{l}` has a class of {n} vertices"),
            });
            let regular = violation.is_none();
            io.emit(
                &RegularOutput {
                    regular,
                    violation: violation.map(|(label, class_size)| Violation { label, class_size }),
                },
                None,
            )?;
            Ok(if regular { EXIT_OK } else { EXIT_FAILS })
        }
        GraphCommand::Eval { graph, bind, size, out } => {
            let g: LabeledGraph = read_json(&graph)?;
            let bindings = read_bindings(&bind)?;
            let universe = match (size, bindings.values().next()) {
                (Some(n), _) => n,
                (None, Some(r)) => r.size(),
                (None, None) => return Err(Failure::Input("no bindings; give --size".into())),
            };
            let rel = g.eval(&bindings, universe)?;
            io.say(format!("{} tuples", rel.tuples.len()));
            io.emit(
                &TuplesOutput {
                    size: rel.size,
                    arity: rel.arity,
                    tuples: rel.tuples.into_iter().collect(),
                },
                out.as_deref(),
            )?;
            Ok(EXIT_OK)
        }
        GraphCommand::Check {
            algebra,
            premise,
            conclusion,
            mode,
            sample,
            out,
        } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let g: LabeledGraph = read_json(&premise)?;
            let h: LabeledGraph = read_json(&conclusion)?;
            let mut report = CheckOutput {
                algebra: algebra_id(&algebra),
                premise: premise.display().to_string(),
                conclusion: conclusion.display().to_string(),
                congruences: None,
                nest: None,
            };
            for set in mode.sets() {
                let verdict = check_graph_inclusion(&alg, &g, &h, set, caps, sample.sampling())?;
                io.say(format!("{}: G ⊆ H {}", set_name(set), describe(&verdict)));
                match set {
                    RelationSet::Congruences => report.congruences = Some(verdict),
                    RelationSet::Nest => report.nest = Some(verdict),
                }
            }
            let holds = report.congruences.iter().chain(&report.nest).all(|v| v.holds);
            io.emit(&report, out.as_deref())?;
            Ok(if holds { EXIT_OK } else { EXIT_FAILS })
        }
    }
}

fn maltsev(command: MaltsevCommand, caps: &Caps, io: &mut Io<'_>) -> Outcome {
    match command {
        MaltsevCommand::Gen {
            p,
            q,
            premise,
            conclusion,
            expand,
            out,
        } => {
            let (g, h) = match (p, q, premise, conclusion) {
                (Some(p), Some(q), _, _) => {
                    let forms = plus_free_forms(&parse_term(&p)?, &parse_term(&q)?, expand)?;
                    if forms.regularity.substitution.is_some() {
                        io.say(format!("using {} ⊆ {}", forms.premise, forms.conclusion));
                    }
                    (
                        LabeledGraph::of_term(&forms.premise)?,
                        LabeledGraph::of_term(&forms.conclusion)?,
                    )
                }
                (_, _, Some(g), Some(h)) => (read_json(&g)?, read_json(&h)?),
                _ => return Err(Failure::Input("give -p and -q, or --premise and --conclusion".into())),
            };
            let condition = generate_condition(&g, &h)?;
            io.say(format!(
                "arity {}, {} symbols, {} identities",
                condition.arity(),
                condition.symbols().len(),
                condition.identities().len()
            ));
            io.emit(&condition, out.as_deref())?;
            Ok(EXIT_OK)
        }
        MaltsevCommand::Check {
            algebra,
            condition,
            witness,
            out,
        } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let cond: MaltsevCondition = read_json(&condition)?;
            let w: WitnessAssignment = read_json(&witness)?;
            let report = check_witnesses(&alg, &cond, &w)?;
            io.say(match &report.counterexample {
                None => format!("pass ({} assignments)", report.assignments_checked),
                Some(c) => format!("fail: {c}"),
            });
            let pass = report.pass;
            io.emit(&report, out.as_deref())?;
            Ok(if pass { EXIT_OK } else { EXIT_FAILS })
        }
        MaltsevCommand::Search {
            algebra,
            condition,
            search,
            out,
        } => {
            let alg: FiniteAlgebra = read_json(&algebra)?;
            let cond: MaltsevCondition = read_json(&condition)?;
            let mode = search.mode().unwrap_or(SearchMode::ExhaustiveClone);
            let outcome = bounded_term_search(&alg, &cond, mode, caps)?;
            io.say(format!(
                "{:?} after {} term operations (depth {})",
                outcome.status, outcome.operations, outcome.depth
            ));
            if let Some(a) = &outcome.assignment {
                for (s, t) in &a.terms {
                    io.say(format!("{s} = {t}"));
                }
            }
            let code = if outcome.status == SearchStatus::NotFoundDefinitive {
                EXIT_FAILS
            } else {
                EXIT_OK
            };
            io.emit(&outcome, out.as_deref())?;
            Ok(code)
        }
    }
}
