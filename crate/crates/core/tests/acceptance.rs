//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 1 and 5 need the real solver portfolio (CBMC, ESBMC) on PATH.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cofact_core::config::RunConfig;
use cofact_core::frontend::{build_call_graph, extract_assertions, load_program, parse_program};
use cofact_core::model::{AssertionId, ImplicationGraph, VerificationStatus};
use cofact_core::pipeline::run_verify_only;
use cofact_core::portfolio::{default_portfolio, SolverConfig};
use cofact_core::report::without_elapsed;
use cofact_core::traversal::cg_traversal;
use cofact_core::verifier::micro::{MicroChecker, MicroModel};
use cofact_core::verifier::{dependency_closure, verify_all, PortfolioChecker, VerifyRunResult};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ids(v: &[usize]) -> BTreeSet<AssertionId> {
    v.iter().copied().map(AssertionId).collect()
}

/// Closure by direct recursion over the graph, no memo.
fn naive_closure(ig: &ImplicationGraph, j: AssertionId) -> BTreeSet<AssertionId> {
    match ig.entries.get(&j) {
        None => BTreeSet::from([j]),
        Some(d) => d.iter().flat_map(|x| naive_closure(ig, *x)).collect(),
    }
}

fn verify_file(path: &Path, k: u32, solvers: Vec<SolverConfig>, timeout: Duration) -> Result<VerifyRunResult, String> {
    let m = load_program(&read(path)).map_err(|e| e.to_string())?.with_bound(k);
    let seq = cg_traversal(&m, &build_call_graph(&m)).map_err(|e| e.to_string())?;
    let mut checker = PortfolioChecker { configs: solvers, timeout };
    verify_all(&m, &seq, k, &mut checker).map_err(|e| e.to_string())
}

fn statuses(r: &VerifyRunResult) -> BTreeMap<AssertionId, Option<VerificationStatus>> {
    r.attempted().into_iter().map(|id| (id, r.status(id))).collect()
}

fn verify_only_bubblesort() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let cfg = RunConfig { bound: 5, timeout_secs: 60.0, solvers: default_portfolio(), ..RunConfig::default() };
    let src = read(&fixtures().join("programs/bubblesort10.c"));
    let t = Instant::now();
    let r = run_verify_only(&src, &cfg, out.path(), None).map_err(|e| format!("exit {}: {e}", e.exit_code()))?;
    let secs = t.elapsed().as_secs_f64();
    let t = &r.totals;
    if t.attempted != 10 || t.verified != 10 || secs > 120.0 {
        return Err(format!("{} of {} verified in {secs:.1}s", t.verified, t.attempted));
    }
    Ok(format!("10/10 verified in {secs:.1}s"))
}

fn compositional_fixture() -> Outcome {
    let r = verify_file(&fixtures().join("programs/compositional.c"), 5, vec![enum_solver()], Duration::from_secs(60))?;
    let expected: BTreeMap<AssertionId, BTreeSet<AssertionId>> =
        [(AssertionId(1), ids(&[])), (AssertionId(2), ids(&[1]))].into();
    if r.ig.entries != expected || !r.ig.falsified.is_empty() || !r.unknown.is_empty() {
        return Err(format!("graph {:?}, falsified {:?}, unknown {:?}", r.ig.entries, r.ig.falsified, r.unknown));
    }
    let c = dependency_closure(&r.ig, &r.attempted(), AssertionId(2));
    if !c.is_empty() || c != naive_closure(&r.ig, AssertionId(2)) {
        return Err(format!("closure(2) = {c:?}"));
    }
    Ok("ig = {1: {}, 2: {1}}, closure(2) = {} as the naive oracle".into())
}

fn random_micro(rng: &mut ChaCha8Rng) -> MicroModel {
    let n = rng.random_range(1..=6);
    let execs = rng.random_range(1..=6);
    // Bias towards holding, so conditional results are common.
    let executions = (0..execs).map(|_| (0..n).map(|_| rng.random_bool(0.75)).collect()).collect();
    let timeouts = (1..=n).filter(|_| rng.random_bool(0.15)).map(AssertionId).collect();
    MicroModel { executions, timeouts }
}

fn theorem_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut cond, mut uncond) = (0, 0);
    for case in 0..1200 {
        let m = random_micro(&mut rng);
        let (model, seq) = m.program();
        let r = verify_all(&model, &seq, 5, &mut MicroChecker { model: &m, calls: 0 }).map_err(|e| e.to_string())?;
        let attempted = r.attempted();
        if attempted.len() != m.assertion_count() {
            return Err(format!("case {case}: {} of {} attempted", attempted.len(), m.assertion_count()));
        }
        for (&i, deps) in &r.ig.entries {
            if deps.iter().any(|d| d >= &i) {
                return Err(format!("case {case}: assertion {i} assumes a later one"));
            }
            let c = dependency_closure(&r.ig, &attempted, i);
            if c != naive_closure(&r.ig, i) {
                return Err(format!("case {case}: closure({i}) differs from the naive oracle"));
            }
            // Theorem 1 when c is empty, Theorem 2 otherwise.
            if !m.holds_under(i, &c) {
                return Err(format!("case {case}: {i} fails on an execution satisfying its closure {c:?}"));
            }
            if c.is_empty() {
                uncond += 1;
            } else {
                cond += 1;
            }
        }
        for &f in &r.ig.falsified {
            if m.holds_under(f, &BTreeSet::new()) {
                return Err(format!("case {case}: {f} falsified but holds on every execution"));
            }
        }
    }
    Ok(format!("1200 models, {uncond} unconditional and {cond} conditional results sound"))
}

/// A generated program: per function, statements in order.
#[derive(Clone)]
enum Stmt {
    Plain,
    Call(usize),
    Assert(usize),
}

struct Gen {
    funcs: Vec<Vec<Stmt>>,
    next_tag: usize,
}

impl Gen {
    fn name(i: usize) -> String {
        if i == 0 {
            "main".into()
        } else {
            format!("f{i}")
        }
    }

    fn random(rng: &mut ChaCha8Rng, acyclic: bool) -> Gen {
        let n = rng.random_range(1..=6);
        let mut g = Gen { funcs: Vec::new(), next_tag: 1 };
        for i in 0..n {
            let len = rng.random_range(0..=6);
            let mut body = Vec::new();
            for _ in 0..len {
                let r = rng.random_range(0..10);
                let callee = if acyclic {
                    (i + 1 < n).then(|| rng.random_range(i + 1..n))
                } else {
                    Some(rng.random_range(0..n))
                };
                body.push(match (r, callee) {
                    (0..=3, _) => Stmt::Assert(g.tag()),
                    (4..=6, Some(c)) => Stmt::Call(c),
                    _ => Stmt::Plain,
                });
            }
            g.funcs.push(body);
        }
        g
    }

    fn tag(&mut self) -> usize {
        self.next_tag += 1;
        self.next_tag - 1
    }

    fn source(&self) -> String {
        let mut s = String::from("#include <assert.h>\n\n");
        for i in 1..self.funcs.len() {
            s.push_str(&format!("int {}(int x);\n", Self::name(i)));
        }
        for (i, body) in self.funcs.iter().enumerate().rev() {
            let name = Self::name(i);
            s.push_str(&format!("\nint {name}({}) {{\n", if i == 0 { "void" } else { "int x" }));
            if i == 0 {
                s.push_str("    int x = 0;\n");
            }
            for st in body {
                match st {
                    Stmt::Plain => s.push_str("    x = x + 1;\n"),
                    Stmt::Call(c) => s.push_str(&format!("    x = {}(x);\n", Self::name(*c))),
                    Stmt::Assert(t) => s.push_str(&format!("    assert(x != -{t});\n")),
                }
            }
            s.push_str("    return x;\n}\n");
        }
        s
    }

    /// (function, predicate, logical line) for every assertion.
    fn expected_assertions(&self) -> Vec<(String, String, usize)> {
        let mut v = Vec::new();
        for (i, body) in self.funcs.iter().enumerate() {
            let mut line = usize::from(i == 0);
            for st in body {
                match st {
                    Stmt::Assert(t) => v.push((Self::name(i), format!("x != -{t}"), line)),
                    _ => line += 1,
                }
            }
        }
        v
    }

    /// Caller, callee, 1-based call-site logical line.
    fn calls(&self) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for (i, body) in self.funcs.iter().enumerate() {
            let mut line = usize::from(i == 0);
            for st in body {
                match st {
                    Stmt::Assert(_) => {}
                    Stmt::Call(c) => {
                        line += 1;
                        v.push((i, *c, line));
                    }
                    Stmt::Plain => line += 1,
                }
            }
        }
        v
    }
}

fn traversal_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut acyclic, mut cyclic, mut constraints) = (0, 0, 0);
    for case in 0..1400 {
        let is_acyclic = case % 7 != 0;
        let g = Gen::random(&mut rng, is_acyclic);
        let src = g.source();
        let m = parse_program(&src).map_err(|e| format!("case {case}: {e}\n{src}"))?;
        let seq = cg_traversal(&m, &build_call_graph(&m)).map_err(|e| format!("case {case}: {e}"))?;
        let expected = g.expected_assertions();
        let got: BTreeSet<&str> = seq.assertions.iter().map(|a| a.predicate.as_str()).collect();
        if seq.len() != expected.len() || got.len() != expected.len() {
            return Err(format!(
                "case {case}: {} assertions in the sequence, {} in the program",
                seq.len(),
                expected.len()
            ));
        }
        if !is_acyclic {
            cyclic += 1;
            continue;
        }
        acyclic += 1;
        let pos: BTreeMap<&str, usize> =
            seq.assertions.iter().enumerate().map(|(i, a)| (a.predicate.as_str(), i)).collect();
        for (caller, callee, line) in g.calls() {
            let callee_asserts = expected.iter().filter(|a| a.0 == Gen::name(callee));
            for ca in callee_asserts {
                for fa in expected.iter().filter(|a| a.0 == Gen::name(caller) && a.2 >= line) {
                    constraints += 1;
                    if pos[ca.1.as_str()] > pos[fa.1.as_str()] {
                        return Err(format!("case {case}: `{}` of {} after `{}` of {}\n{src}", ca.1, ca.0, fa.1, fa.0));
                    }
                }
            }
        }
    }
    Ok(format!("{acyclic} acyclic graphs ({constraints} ordering constraints), {cyclic} cyclic graphs terminate with all assertions"))
}

fn agreement() -> Outcome {
    let mut files: Vec<_> =
        std::fs::read_dir(fixtures().join("agreement")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    if files.len() < 10 {
        return Err(format!("only {} fixtures", files.len()));
    }
    let mut compared = 0;
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy();
        let oracle = verify_file(f, 5, vec![enum_solver()], Duration::from_secs(60))
            .map_err(|e| format!("{name}: oracle: {e}"))?;
        let portfolio = verify_file(f, 5, default_portfolio(), Duration::from_secs(60))
            .map_err(|e| format!("{name}: portfolio: {e}"))?;
        if statuses(&oracle) != statuses(&portfolio) {
            return Err(format!("{name}: portfolio {:?} vs enumeration {:?}", statuses(&portfolio), statuses(&oracle)));
        }
        compared += oracle.attempted().len();
    }
    Ok(format!("{} fixtures, {compared} assertions agree", files.len()))
}

fn line_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut g = Gen::random(&mut rng, true);
    while g.funcs.len() < 3 {
        g = Gen::random(&mut rng, true);
    }
    let mut before: BTreeMap<String, usize> = BTreeMap::new();
    for edit in 0..100 {
        let f = rng.random_range(0..g.funcs.len());
        let asserts: Vec<usize> =
            g.funcs[f].iter().enumerate().filter(|(_, s)| matches!(s, Stmt::Assert(_))).map(|(i, _)| i).collect();
        if !asserts.is_empty() && rng.random_bool(0.4) {
            g.funcs[f].remove(asserts[rng.random_range(0..asserts.len())]);
        } else {
            let at = rng.random_range(0..=g.funcs[f].len());
            let t = g.tag();
            g.funcs[f].insert(at, Stmt::Assert(t));
        }
        let src = g.source();
        let m = parse_program(&src).map_err(|e| format!("edit {edit}: {e}"))?;
        let got: Vec<(String, String, usize)> =
            extract_assertions(&m).into_iter().map(|a| (a.function, a.predicate, a.logical_line)).collect();
        let mut want = g.expected_assertions();
        let mut got_sorted = got.clone();
        want.sort();
        got_sorted.sort();
        if got_sorted != want {
            return Err(format!("edit {edit}: logical lines differ from the statement count\n{src}"));
        }
        for (_, p, l) in &got {
            if let Some(old) = before.get(p) {
                if old != l {
                    return Err(format!("edit {edit}: `{p}` moved from line {old} to {l}"));
                }
            }
        }
        before = got.into_iter().map(|(_, p, l)| (p, l)).collect();
    }
    Ok("100 assertion insert/remove edits, every logical line unchanged".into())
}

fn golden_files() -> Outcome {
    let cases = golden::cases();
    if cases.len() < 3 {
        return Err(format!("only {} golden cases", cases.len()));
    }
    let bad: Vec<String> = cases.iter().flat_map(|c| golden::check(c)).collect();
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    let (mut c, mut u) = (0, 0);
    for case in &cases {
        let r = golden::render(case);
        c += r.conditional;
        u += r.unconditional;
    }
    Ok(format!("{} cases byte-exact ({u} unconditional, {c} conditional facts), stripping gives P0", cases.len()))
}

fn files_under(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn same_output(a: &Path, b: &Path) -> Result<usize, String> {
    let (fa, fb) = (files_under(a), files_under(b));
    if fa.keys().ne(fb.keys()) {
        return Err("different file sets".into());
    }
    for (name, x) in &fa {
        let y = &fb[name];
        let equal = if name.ends_with(".json") {
            let parse = |b: &[u8]| {
                serde_json::from_slice::<serde_json::Value>(b)
                    .map(|v| without_elapsed(&v))
                    .map_err(|e| format!("{name}: {e}"))
            };
            parse(x)? == parse(y)?
        } else {
            x == y
        };
        if !equal {
            return Err(format!("{name} differs"));
        }
    }
    Ok(fa.len())
}

fn hermetic_replay() -> Outcome {
    let sets = replay_sets();
    if sets.len() < 3 {
        return Err(format!("only {} transcript sets", sets.len()));
    }
    let mut files = 0;
    for set in &sets {
        let name = set.file_name().unwrap().to_string_lossy();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for out in [a.path(), b.path()] {
            let (r, calls) = run_replay(set, out);
            r.map_err(|e| format!("{name}: {e}"))?;
            if calls != 0 {
                return Err(format!("{name}: {calls} provider calls"));
            }
        }
        files += same_output(a.path(), b.path()).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("{} sets replayed twice, zero provider calls, {files} output files identical", sets.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("verify-only bubblesort, 10 assertions, real portfolio", verify_only_bubblesort),
        ("compositional fixture", compositional_fixture),
        ("soundness theorems on micro-models", theorem_suite),
        ("traversal ordering on random call graphs", traversal_property),
        ("portfolio agrees with brute-force enumeration", agreement),
        ("logical-line stability under edits", line_stability),
        ("fact golden files", golden_files),
        ("hermetic replay", hermetic_replay),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    stdout.write_all(b"\n").unwrap();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let line = match check() {
            Ok(detail) => format!("PASS {} {name}: {detail}\n", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("FAIL {} {name}: {why}\n", i + 1)
            }
        };
        let line = line.trim_end().lines().map(str::trim).collect::<Vec<_>>().join("; ") + "\n";
        stdout.write_all(line.as_bytes()).unwrap();
        stdout.flush().unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
