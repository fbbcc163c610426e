//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does. Expected values come from naive oracles
//! implemented here, independent of the library's algorithms.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tolkit_core::{
    is_regular_term, nest_representable_set, theorem_report, BinaryRelation, Bindings, Caps, Error, FiniteAlgebra,
    LabeledGraph, MaltsevStatus, Term, TheoremOptions,
};

type Pairs = BTreeSet<(usize, usize)>;

const CORPUS: [&str; 7] = ["set2", "set3", "z2", "z4", "chain2", "chain3", "n5"];

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(id: &str) -> FiniteAlgebra {
    let text = std::fs::read_to_string(corpus_dir().join(format!("{id}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn tolkit(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tolkit"))
        .args(args)
        .current_dir(corpus_dir().join(".."))
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json_of(stdout: &str) -> Value {
    let body: Vec<&str> = stdout.lines().filter(|l| !l.starts_with('#')).collect();
    serde_json::from_str(&body.join("\n")).unwrap()
}

// Naive relation algebra over pair sets.

fn pairs(r: &BinaryRelation) -> Pairs {
    r.pairs().collect()
}

fn relation(n: usize, p: &Pairs) -> BinaryRelation {
    BinaryRelation::from_pairs(n, p.iter().copied()).unwrap()
}

fn compose(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for &(x, y) in a {
        for &(y2, z) in b {
            if y == y2 {
                out.insert((x, z));
            }
        }
    }
    out
}

fn converse(a: &Pairs) -> Pairs {
    a.iter().map(|&(x, y)| (y, x)).collect()
}

fn diagonal(n: usize) -> Pairs {
    (0..n).map(|x| (x, x)).collect()
}

fn apply(alg: &FiniteAlgebra, op: usize, args: &[usize]) -> usize {
    let o = &alg.operations()[op];
    let index = args.iter().fold(0, |acc, &a| acc * alg.size() + a);
    o.table[index]
}

/// All tuples over `items` of length `k`.
fn tuples<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                items.iter().map(move |x| {
                    let mut t = t.clone();
                    t.push(x.clone());
                    t
                })
            })
            .collect();
    }
    out
}

fn images(alg: &FiniteAlgebra, r: &Pairs) -> Pairs {
    let list: Vec<(usize, usize)> = r.iter().copied().collect();
    let mut out = Pairs::new();
    for (i, op) in alg.operations().iter().enumerate() {
        for t in tuples(&list, op.arity) {
            let left: Vec<usize> = t.iter().map(|p| p.0).collect();
            let right: Vec<usize> = t.iter().map(|p| p.1).collect();
            out.insert((apply(alg, i, &left), apply(alg, i, &right)));
        }
    }
    out
}

fn compatible(alg: &FiniteAlgebra, r: &Pairs) -> bool {
    images(alg, r).is_subset(r)
}

fn naive_closure(alg: &FiniteAlgebra, seed: &Pairs) -> Pairs {
    let mut r = seed.clone();
    loop {
        let next: Pairs = r.union(&images(alg, &r)).copied().collect();
        if next == r {
            return r;
        }
        r = next;
    }
}

fn compatible_reflexive(alg: &FiniteAlgebra) -> BTreeSet<Pairs> {
    let n = alg.size();
    let start = naive_closure(alg, &diagonal(n));
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = vec![start];
    while let Some(r) = queue.pop() {
        for x in 0..n {
            for y in 0..n {
                if !r.contains(&(x, y)) {
                    let mut s = r.clone();
                    s.insert((x, y));
                    let c = naive_closure(alg, &s);
                    if seen.insert(c.clone()) {
                        queue.push(c);
                    }
                }
            }
        }
    }
    seen
}

fn tolerances(alg: &FiniteAlgebra) -> BTreeSet<Pairs> {
    let n = alg.size();
    let off: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    (0u64..1 << off.len())
        .map(|mask| {
            let mut r = diagonal(n);
            for (i, &(x, y)) in off.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    r.insert((x, y));
                    r.insert((y, x));
                }
            }
            r
        })
        .filter(|r| compatible(alg, r))
        .collect()
}

fn transitive(r: &Pairs) -> bool {
    compose(r, r).is_subset(r)
}

fn naive_term(t: &Term, b: &std::collections::BTreeMap<String, Pairs>) -> Pairs {
    use tolkit_core::TermOp;
    match t {
        Term::Var(v) => b[v].clone(),
        Term::Node(op, l, r) => {
            let (l, r) = (naive_term(l, b), naive_term(r, b));
            match op {
                TermOp::Compose => compose(&l, &r),
                TermOp::Meet => l.intersection(&r).copied().collect(),
                TermOp::Plus => unreachable!("plus-free"),
            }
        }
    }
}

fn random_term(rng: &mut ChaCha8Rng, leaves: usize) -> Term {
    if leaves == 1 {
        return Term::var(["a", "b", "g"][rng.gen_range(0..3)]);
    }
    let split = rng.gen_range(1..leaves);
    let (l, r) = (random_term(rng, split), random_term(rng, leaves - split));
    if rng.gen_bool(0.5) {
        Term::compose(l, r)
    } else {
        Term::meet(l, r)
    }
}

fn random_tolerance_like(rng: &mut ChaCha8Rng, n: usize) -> Pairs {
    let mut r = diagonal(n);
    for x in 0..n {
        for y in x + 1..n {
            if rng.gen_bool(0.4) {
                r.insert((x, y));
                r.insert((y, x));
            }
        }
    }
    r
}

fn criterion_1() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let cases = 300;
    for case in 0..cases {
        let n = rng.gen_range(1..=4);
        let leaves = rng.gen_range(1..=4);
        let term = random_term(&mut rng, leaves);
        if term.node_count() > 7 {
            return Err(format!("generator produced a term of size {}", term.node_count()));
        }
        let mut naive = std::collections::BTreeMap::new();
        let mut bindings = Bindings::new();
        for v in term.variables() {
            let r = random_tolerance_like(&mut rng, n);
            bindings.insert(v.clone(), relation(n, &r));
            naive.insert(v, r);
        }
        let expected: BTreeSet<Vec<usize>> = naive_term(&term, &naive).into_iter().map(|(x, y)| vec![x, y]).collect();
        let via_term: BTreeSet<Vec<usize>> = term.eval(&bindings).unwrap().pairs().map(|(x, y)| vec![x, y]).collect();
        let graph = LabeledGraph::of_term(&term).unwrap();
        let via_graph = graph.eval(&bindings, n).unwrap().tuples;
        if via_term != expected || via_graph != expected {
            return Err(format!("case {case}: `{term}` on {n} elements disagrees"));
        }
    }
    Ok(format!("{cases} random terms agree with graph evaluation and a naive evaluator"))
}

fn criterion_2() -> Result<String, String> {
    let caps = Caps::default();
    let mut summary = Vec::new();
    for id in CORPUS {
        let alg = load(id);
        let n = alg.size();
        let catalog = nest_representable_set(&alg, &caps).map_err(|e| format!("{id}: {e}"))?;
        let tols = tolerances(&alg);
        let cr = compatible_reflexive(&alg);
        let reps: BTreeSet<Pairs> = cr.iter().map(|r| compose(r, &converse(r))).collect();
        let weak = |t: &Pairs| {
            // Every pair outside t is excluded by some representable above t.
            let above: Vec<&Pairs> = reps.iter().filter(|s| t.is_subset(s)).collect();
            let separated = (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|p| !t.contains(p))
                .all(|p| above.iter().any(|s| !s.contains(&p)));
            let mut meet: Pairs = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect();
            for s in &above {
                meet = meet.intersection(s).copied().collect();
            }
            assert_eq!(separated, meet == *t, "{id}: separation and meet oracles disagree");
            separated
        };
        // Least set containing the representables closed under meets and
        // conjugation by compatible reflexive relations.
        let mut nest: BTreeSet<Pairs> = reps.clone();
        loop {
            let mut next = nest.clone();
            for a in &nest {
                for b in &nest {
                    next.insert(a.intersection(b).copied().collect());
                }
                for r in &cr {
                    next.insert(compose(&compose(r, a), &converse(r)));
                }
            }
            if next == nest {
                break;
            }
            nest = next;
        }

        let listed: BTreeSet<Pairs> = catalog.tolerances().map(pairs).collect();
        if listed != tols {
            return Err(format!("{id}: tolerance list differs from brute force"));
        }
        let set = |v: Vec<BinaryRelation>| v.iter().map(pairs).collect::<BTreeSet<_>>();
        let (con, rep, wk, ns) = (
            set(catalog.congruences()),
            set(catalog.representables()),
            set(catalog.weakly_representables()),
            set(catalog.nest_representables()),
        );
        if !(con.is_subset(&rep) && rep.is_subset(&wk) && wk.is_subset(&ns) && ns.is_subset(&tols)) {
            return Err(format!("{id}: inclusion chain broken"));
        }
        for e in &catalog.entries {
            let t = pairs(&e.tolerance);
            let flags = (e.is_congruence, e.representable.is_some(), e.weakly_representable, e.nest.is_some());
            let oracle = (transitive(&t), reps.contains(&t), weak(&t), nest.contains(&t));
            if flags != oracle {
                return Err(format!("{id}: flags {flags:?} vs oracle {oracle:?} for {}", e.tolerance));
            }
        }
        summary.push(format!("{id} {}/{}/{}/{}/{}", con.len(), rep.len(), wk.len(), ns.len(), tols.len()));
    }
    Ok(format!("chain and flags match brute force ({})", summary.join(", ")))
}

/// Whether the ternary clone of `alg` has a Maltsev operation, by closing
/// the projections under the operations naively.
fn has_maltsev_term(alg: &FiniteAlgebra) -> bool {
    let n = alg.size();
    let points: Vec<Vec<usize>> = tuples(&(0..n).collect::<Vec<_>>(), 3);
    let mut clone: BTreeSet<Vec<usize>> = (0..3).map(|j| points.iter().map(|p| p[j]).collect()).collect();
    loop {
        let list: Vec<Vec<usize>> = clone.iter().cloned().collect();
        let mut next = clone.clone();
        for (i, op) in alg.operations().iter().enumerate() {
            for args in tuples(&list, op.arity) {
                next.insert(
                    (0..points.len())
                        .map(|k| apply(alg, i, &args.iter().map(|f| f[k]).collect::<Vec<_>>()))
                        .collect(),
                );
            }
        }
        if next == clone {
            break;
        }
        clone = next;
    }
    let at = |x: usize, y: usize, z: usize| x * n * n + y * n + z;
    clone.iter().any(|f| {
        (0..n).all(|x| (0..n).all(|y| f[at(x, y, y)] == x && f[at(x, x, y)] == y))
    })
}

fn criterion_3() -> Result<String, String> {
    let dir = std::env::temp_dir().join(format!("tolkit-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cond = dir.join("maltsev.json");
    let (code, _, err) = tolkit(&["maltsev", "gen", "-p", "a;b", "-q", "b;a", "--out", cond.to_str().unwrap()]);
    if code != 0 {
        return Err(format!("maltsev gen exited {code}: {err}"));
    }
    let cap = Caps::default().max_clone;
    let mut seen = Vec::new();
    for id in CORPUS {
        let alg = load(id);
        if alg.size().pow(3) > cap {
            continue;
        }
        let path = format!("corpus/{id}.json");
        let (code, out, err) = tolkit(&["maltsev", "search", &path, cond.to_str().unwrap(), "--search", "clone"]);
        let status = json_of(&out)["status"].as_str().map(str::to_string);
        let expected = if has_maltsev_term(&alg) { "FOUND" } else { "NOT_FOUND_DEFINITIVE" };
        if status.as_deref() != Some(expected) || code != if expected == "FOUND" { 0 } else { 1 } {
            return Err(format!("{id}: search gave {status:?} (exit {code}, {err}), oracle {expected}"));
        }
        seen.push(format!("{id} {expected}"));
    }
    for (id, expected) in [("z2", "FOUND"), ("z4", "FOUND"), ("chain2", "NOT_FOUND_DEFINITIVE")] {
        if !seen.contains(&format!("{id} {expected}")) {
            return Err(format!("{id} should be {expected}"));
        }
    }
    let (code, out, err) = tolkit(&[
        "maltsev",
        "check",
        "corpus/z4.json",
        cond.to_str().unwrap(),
        "--witness",
        "corpus/z4-maltsev-witness.json",
    ]);
    let report = json_of(&out);
    if code != 0 || report["pass"] != Value::Bool(true) {
        return Err(format!("x0-x1+x2 on z4 failed (exit {code}): {err}"));
    }
    // Two projection identities over 64 triples, two collapsed ones over 16 pairs.
    if report["assignments_checked"] != 64 + 64 + 16 + 16 {
        return Err(format!("unexpected assignment count {}", report["assignments_checked"]));
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!("condition matches Maltsev-term existence: {}", seen.join(", ")))
}

fn criterion_4() -> Result<String, String> {
    let suite = [("a;b", "b;a"), ("a&b", "a;b"), ("a&(b;g)", "(a&b);(a&g)"), ("a;b;a", "b+a")];
    let caps = Caps::default();
    let mut certified = 0;
    let mut runs = 0;
    for id in CORPUS {
        let alg = load(id);
        for (p, q) in suite {
            let (p, q) = (Term::parse(p).unwrap(), Term::parse(q).unwrap());
            let report = match theorem_report(id, &alg, &p, &q, &TheoremOptions::default(), &caps) {
                Ok(r) => r,
                Err(Error::Inconsistent(m)) => return Err(format!("{id} {p} ⊆ {q}: {m}")),
                Err(e) => return Err(format!("{id} {p} ⊆ {q}: unexpected error {e}")),
            };
            runs += 1;
            let nest_used = report.substituted.as_ref().map_or(report.nest.holds, |s| s.nest.holds);
            if report.maltsev.status == MaltsevStatus::Certified {
                certified += 1;
                if !nest_used {
                    return Err(format!("{id} {p} ⊆ {q}: certified but nest inclusion fails"));
                }
            }
            if report.nest.holds && !report.congruence.holds {
                return Err(format!("{id} {p} ⊆ {q}: nest holds but congruence fails"));
            }
            if !(report.consistency.certified_implies_nest && report.consistency.nest_implies_congruence) {
                return Err(format!("{id} {p} ⊆ {q}: consistency flags down"));
            }
        }
    }
    Ok(format!("{runs} reports consistent, {certified} with certified conditions"))
}

fn criterion_5() -> Result<String, String> {
    let caps = Caps::default();
    for id in CORPUS {
        let alg = load(id);
        let catalog = nest_representable_set(&alg, &caps).map_err(|e| format!("{id}: {e}"))?;
        catalog.verify().map_err(|e| format!("{id}: {e}"))?;
        let nest: BTreeSet<Pairs> = catalog.nest_representables().iter().map(pairs).collect();
        let cr = compatible_reflexive(&alg);
        for a in &nest {
            for b in &nest {
                if !nest.contains(&a.intersection(b).copied().collect::<Pairs>()) {
                    return Err(format!("{id}: not closed under meets"));
                }
            }
            for r in &cr {
                if !nest.contains(&compose(&compose(r, a), &converse(r))) {
                    return Err(format!("{id}: not closed under conjugation"));
                }
            }
        }
    }
    let set2 = nest_representable_set(&load("set2"), &caps).unwrap().nest_representables();
    let expected = vec![BinaryRelation::diagonal(2).unwrap(), BinaryRelation::full(2).unwrap()];
    if set2 != expected {
        return Err(format!("bare 2-set nest set is {set2:?}"));
    }
    Ok("derivations replay, one more round adds nothing, bare 2-set gives {Δ, ∇}".into())
}

fn criterion_6() -> Result<String, String> {
    for (t, expected) in [("a;b", true), ("a&b", true), ("a;b;a", true), ("a;a", false)] {
        if is_regular_term(&Term::parse(t).unwrap()).unwrap() != expected {
            return Err(format!("`{t}` regularity should be {expected}"));
        }
    }
    let p3 = Term::parse("a+b").unwrap().plus_substitute(3).unwrap();
    if p3 != Term::parse("a;b;a").unwrap() || !LabeledGraph::of_term(&p3).unwrap().is_regular() {
        return Err(format!("p3 of a+b is {p3}"));
    }
    Ok("a;b, a&b, a;b;a regular; a;a not; (a+b)3 = a;b;a with regular graph".into())
}

fn criterion_7() -> Result<String, String> {
    let (code, out, _) = tolkit(&["check", "corpus/set3.json", "-p", "a;b", "-q", "b;a", "--mode", "congruences"]);
    if code != 1 {
        return Err(format!("exit code {code}"));
    }
    let cx = &json_of(&out)["congruences"]["counterexample"];
    let theta = |x: usize, y: usize| BinaryRelation::symmetric_with(3, [(x, y)]).unwrap();
    let read = |v: &Value| serde_json::from_value::<BinaryRelation>(v.clone()).unwrap();
    if read(&cx["bindings"]["a"]) != theta(0, 1) || read(&cx["bindings"]["b"]) != theta(1, 2) {
        return Err(format!("bindings {}", cx["bindings"]));
    }
    if cx["tuple"] != serde_json::json!([0, 2]) {
        return Err(format!("pair {}", cx["tuple"]));
    }
    Ok("exit 1 with a = θ01, b = θ12, pair (0,2)".into())
}

type Criterion = fn() -> Result<String, String>;

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion, u64); 7] = [
        ("term/graph oracle", criterion_1, 60),
        ("classification chain", criterion_2, 180),
        ("Maltsev reconstruction", criterion_3, 60),
        ("theorem consistency", criterion_4, 300),
        ("nest fixpoint soundness", criterion_5, 30),
        ("regularity truths", criterion_6, 1),
        ("known counterexample", criterion_7, 1),
    ];
    let mut stdout = std::io::stdout();
    let mut failed = Vec::new();
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let spent = start.elapsed();
        if result.is_ok() && spent > Duration::from_secs(*budget) {
            result = Err(format!("took {spent:.2?}, budget {budget}s"));
        }
        match result {
            Ok(detail) => writeln!(stdout, "PASS criterion {} ({name}): {detail} [{spent:.2?}]", i + 1).unwrap(),
            Err(why) => {
                writeln!(stdout, "FAIL criterion {} ({name}): {why} [{spent:.2?}]", i + 1).unwrap();
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
