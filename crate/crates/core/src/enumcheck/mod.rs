//! Bounded enumerative checker.
//!
//! Compiles the program against a runtime that answers every nondeterministic
//! input (`nondet_*()`, `scanf`) from a small integer domain and executes it
//! once per choice sequence, depth first, in forked children. Loops are
//! instrumented so that an iteration past the unwind bound is reported as an
//! unwinding-assertion failure (or pruned when unwinding assertions are off).
//! Output follows CBMC's report format and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use crate::error::FrontendError;
use crate::frontend::lexer::{lex, matching_close, Token, TokenKind};
use crate::portfolio::{parse_transcript, Outcome, SolverConfig, SolverFamily};

const PRELUDE: &str = include_str!("prelude.h");
const RUNTIME: &str = include_str!("runtime.c");
const SCANF: &str = include_str!("scanf.c");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumConfig {
    pub lo: i64,
    pub hi: i64,
    pub max_runs: u64,
    pub run_timeout: Duration,
    pub total_timeout: Duration,
    pub compiler: String,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            lo: -3,
            hi: 3,
            max_runs: 200_000,
            run_timeout: Duration::from_secs(2),
            total_timeout: Duration::from_secs(120),
            compiler: "gcc".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumReport {
    pub outcome: Outcome,
    pub exit_code: i32,
    pub stdout: String,
}

#[derive(Debug, thiserror::Error)]
pub enum EnumError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("enumeration harness failed to build:\n{0}")]
    Build(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn punct(src: &str, t: &Token, p: &str) -> bool {
    t.is_punct(src, p)
}

/// Wraps every `for`, `while` and `do ... while` condition in a call that
/// counts iterations per loop, and resets the count at `for` initialisers.
/// Returns the rewritten text and the number of loops found.
pub fn instrument_loops(src: &str) -> Result<(String, usize), FrontendError> {
    let toks = lex(src)?.tokens;
    let mut edits: Vec<(usize, usize, String)> = Vec::new();
    let mut loop_id = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Ident {
            continue;
        }
        let kw = t.text(src);
        if kw != "for" && kw != "while" {
            continue;
        }
        let Some(open) = toks.get(i + 1).filter(|n| punct(src, n, "(")).map(|_| i + 1) else {
            continue;
        };
        let Some(close) = matching_close(src, &toks, open) else {
            return Err(FrontendError::Parse { line: t.line + 1, message: format!("unbalanced `{kw}` header") });
        };
        let id = loop_id;
        loop_id += 1;
        if kw == "while" {
            wrap_cond(&mut edits, &toks[open + 1..close], toks[open].span.end, id);
            continue;
        }
        // Top-level `;` split the header into init; cond; step.
        let mut semis = Vec::new();
        let mut depth = 0i32;
        for (j, tok) in toks.iter().enumerate().take(close).skip(open + 1) {
            match tok.text(src) {
                "(" | "[" | "{" if tok.kind == TokenKind::Punct => depth += 1,
                ")" | "]" | "}" if tok.kind == TokenKind::Punct => depth -= 1,
                ";" if depth == 0 && tok.kind == TokenKind::Punct => semis.push(j),
                _ => {}
            }
        }
        if semis.len() != 2 {
            return Err(FrontendError::Parse { line: t.line + 1, message: "unsupported `for` header".into() });
        }
        reset_in_init(&mut edits, src, &toks[open + 1..semis[0]], toks[open].span.end, id);
        wrap_cond(&mut edits, &toks[semis[0] + 1..semis[1]], toks[semis[0]].span.end, id);
    }
    edits.sort_by_key(|e| e.0);
    let mut out = String::with_capacity(src.len() + edits.len() * 24);
    let mut at = 0;
    for (start, end, text) in edits {
        out.push_str(&src[at..start]);
        out.push_str(&text);
        at = end;
    }
    out.push_str(&src[at..]);
    Ok((out, loop_id))
}

fn wrap_cond(edits: &mut Vec<(usize, usize, String)>, cond: &[Token], empty_at: usize, id: usize) {
    match (cond.first(), cond.last()) {
        (Some(first), Some(last)) => {
            edits.push((first.span.start, first.span.start, format!("__enum_loop_cond({id}, !!(")));
            edits.push((last.span.end, last.span.end, "))".into()));
        }
        _ => edits.push((empty_at, empty_at, format!("__enum_loop_cond({id}, 1)"))),
    }
}

fn reset_in_init(edits: &mut Vec<(usize, usize, String)>, src: &str, init: &[Token], empty_at: usize, id: usize) {
    if init.is_empty() {
        edits.push((empty_at, empty_at, format!("__enum_loop_enter({id})")));
        return;
    }
    // Wrap the first initializer: valid for both `i = 0` and `int i = 0`.
    let mut depth = 0i32;
    let mut eq = None;
    for (j, t) in init.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "=" if depth == 0 => {
                eq = Some(j);
                break;
            }
            _ => {}
        }
    }
    let Some(eq) = eq else { return };
    let mut end = init.len() - 1;
    depth = 0;
    for (j, t) in init.iter().enumerate().skip(eq + 1) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                end = j - 1;
                break;
            }
            _ => {}
        }
    }
    if eq + 1 > end {
        return;
    }
    edits.push((init[eq + 1].span.start, init[eq + 1].span.start, format!("(__enum_loop_enter({id}), ")));
    edits.push((init[end].span.end, init[end].span.end, ")".into()));
}

/// A compiled enumeration harness for one program.
pub struct Harness {
    _dir: tempfile::TempDir,
    exe: PathBuf,
}

fn gcc(compiler: &str, args: &[&str]) -> Result<(), EnumError> {
    let out =
        Command::new(compiler).args(args).env("LC_ALL", "C").output().map_err(|e| {
            EnumError::Frontend(FrontendError::CompilerMissing { tool: compiler.to_string(), source: e })
        })?;
    if out.status.success() {
        Ok(())
    } else {
        Err(EnumError::Build(String::from_utf8_lossy(&out.stderr).into_owned()))
    }
}

impl Harness {
    pub fn build(source: &str, compiler: &str) -> Result<Harness, EnumError> {
        let dir = tempfile::Builder::new().prefix("cofact-enum-").tempdir()?;
        let p = |name: &str| dir.path().join(name);
        let (instrumented, _) = instrument_loops(source)?;
        std::fs::write(p("prelude.h"), PRELUDE)?;
        std::fs::write(p("program.c"), instrumented)?;
        std::fs::write(p("runtime.c"), RUNTIME)?;
        std::fs::write(p("scanf.c"), SCANF)?;
        let s = |name: &str| p(name).to_string_lossy().into_owned();
        let base = ["-std=gnu11", "-O0", "-fwrapv", "-w", "-c"];
        let program_args: Vec<String> = base
            .iter()
            .map(|a| a.to_string())
            .chain([
                "-Dmain=__enum_user_main".into(),
                "-include".into(),
                s("prelude.h"),
                s("program.c"),
                "-o".into(),
                s("program.o"),
            ])
            .collect();
        gcc(compiler, &program_args.iter().map(String::as_str).collect::<Vec<_>>())?;
        for unit in ["runtime", "scanf"] {
            let (c, o) = (s(&format!("{unit}.c")), s(&format!("{unit}.o")));
            let mut args: Vec<&str> = base.to_vec();
            args.extend([c.as_str(), "-o", o.as_str()]);
            gcc(compiler, &args)?;
        }
        let exe = p("harness");
        let (po, ro, so, e) = (s("program.o"), s("runtime.o"), s("scanf.o"), exe.to_string_lossy().into_owned());
        gcc(compiler, &[po.as_str(), ro.as_str(), so.as_str(), "-o", e.as_str()])?;
        Ok(Harness { _dir: dir, exe })
    }

    pub fn run(&self, bound: u32, unwinding_assertions: bool, cfg: &EnumConfig) -> Result<EnumReport, EnumError> {
        let mut cmd = Command::new(&self.exe);
        cmd.env("COFACT_ENUM_LO", cfg.lo.to_string())
            .env("COFACT_ENUM_HI", cfg.hi.to_string())
            .env("COFACT_ENUM_UNWIND", bound.to_string())
            .env("COFACT_ENUM_UNWIND_ASSERT", if unwinding_assertions { "1" } else { "0" })
            .env("COFACT_ENUM_MAX_RUNS", cfg.max_runs.to_string())
            .env("COFACT_ENUM_RUN_MS", cfg.run_timeout.as_millis().to_string());
        let never = AtomicBool::new(false);
        let raw = crate::portfolio::run_process(cmd, Instant::now() + cfg.total_timeout, &never)?;
        let (code, mut stdout) = match raw.termination {
            crate::portfolio::Termination::Exited(Some(c)) => (c, raw.stdout),
            _ => (5, format!("{}Enumeration exceeded its time budget\nVERIFICATION INCONCLUSIVE\n", raw.stdout)),
        };
        if !raw.stderr.is_empty() {
            stdout.push_str(&raw.stderr);
        }
        let prefix = format!("{}/", self._dir.path().display());
        let stdout = stdout.replace(&prefix, "");
        let outcome = parse_transcript(SolverFamily::Cbmc, Some(code), &stdout).outcome;
        Ok(EnumReport { outcome, exit_code: code, stdout })
    }
}

/// Builds and runs the harness for `source` in one go.
pub fn enum_check(
    source: &str,
    bound: u32,
    unwinding_assertions: bool,
    cfg: &EnumConfig,
) -> Result<EnumReport, EnumError> {
    Harness::build(source, &cfg.compiler)?.run(bound, unwinding_assertions, cfg)
}

/// A portfolio entry that runs the `cofact-enumcheck` binary. Meant for
/// hermetic tests and machines without a model checker; never part of the
/// default portfolio.
pub fn solver_config(binary: impl AsRef<Path>, lo: i64, hi: i64) -> SolverConfig {
    SolverConfig {
        name: "enumcheck".into(),
        binary: binary.as_ref().to_string_lossy().into_owned(),
        args: vec![format!("--domain={lo}:{hi}"), "--unwind".into(), "{unwind}".into(), "{file}".into()],
        dialect: "cbmc".into(),
        family: SolverFamily::Cbmc,
        unwinding_assertions: true,
        unwinding_on: vec!["--unwinding-assertions".into()],
        unwinding_off: vec!["--no-unwinding-assertions".into()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "#include <assert.h>\nint nondet_int(void);\n";

    fn check(body: &str, bound: u32, ua: bool) -> EnumReport {
        let src = format!("{HEAD}int main(void) {{\n{body}\n    return 0;\n}}\n");
        enum_check(&src, bound, ua, &EnumConfig::default()).unwrap()
    }

    #[test]
    fn instrumentation_shapes() {
        let (out, n) = instrument_loops("void f(int n) {\n    for (int i = 0, j = 1; i < n; i++) { }\n    while (n) n--;\n    for (;;) break;\n    do { n++; } while (n < 3);\n}\n").unwrap();
        assert_eq!(n, 4);
        assert!(
            out.contains("for (int i = (__enum_loop_enter(0), 0), j = 1; __enum_loop_cond(0, !!(i < n)); i++)"),
            "{out}"
        );
        assert!(out.contains("while (__enum_loop_cond(1, !!(n))) n--;"));
        assert!(out.contains("for (__enum_loop_enter(2);__enum_loop_cond(2, 1);)"), "{out}");
        assert!(out.contains("while (__enum_loop_cond(3, !!(n < 3)));"));
    }

    #[test]
    fn tautology_and_refutation() {
        let r = check("    int x = nondet_int();\n    assert(x == x);", 5, true);
        assert_eq!(r.outcome, Outcome::Verified, "{}", r.stdout);
        assert!(r.stdout.contains("Enumerated 7 executions"));
        let r = check("    int x = nondet_int();\n    assert(x > 0);", 5, true);
        assert_eq!(r.outcome, Outcome::Falsified);
        assert!(r.stdout.contains("input 1 = -3"), "{}", r.stdout);
    }

    #[test]
    fn assumptions_prune() {
        let r = check("    int x = nondet_int();\n    __CPROVER_assume(x > 0);\n    assert(x > 0);", 5, true);
        assert_eq!(r.outcome, Outcome::Verified, "{}", r.stdout);
        let r = check("    int x = nondet_int();\n    __ESBMC_assume(x >= -1);\n    assert(x * x <= 9);", 5, true);
        assert_eq!(r.outcome, Outcome::Verified, "{}", r.stdout);
    }

    #[test]
    fn scanf_inputs_enumerated() {
        let src = "#include <assert.h>\n#include <stdio.h>\nint main(void) {\n    int a, b;\n    if (scanf(\"%d %d\", &a, &b) != 2) return 1;\n    assert(a + b != 6);\n    return 0;\n}\n";
        let r = enum_check(src, 5, true, &EnumConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Falsified, "{}", r.stdout);
        assert!(r.stdout.contains("input 1 = 3\n  input 2 = 3"));
    }

    #[test]
    fn unwinding_bound() {
        let body = "    int s = 0;\n    for (int i = 0; i < 6; i++) s += i;\n    assert(s >= 0);";
        let r = check(body, 5, true);
        assert_eq!(r.outcome, Outcome::Falsified);
        assert!(r.stdout.contains("unwinding assertion loop.0"));
        assert_eq!(check(body, 6, true).outcome, Outcome::Verified);
        // Without unwinding assertions the long path is cut off.
        assert_eq!(check(body, 5, false).outcome, Outcome::Verified);
        // Re-entering a loop resets its count.
        let body = "    for (int r = 0; r < 3; r++) {\n        for (int i = 0; i < 4; i++) { }\n    }\n    assert(1);";
        assert_eq!(check(body, 5, true).outcome, Outcome::Verified);
    }

    #[test]
    fn budget_and_build_errors() {
        let src = format!("{HEAD}int main(void) {{\n    int a = nondet_int(), b = nondet_int();\n    assert(a + b < 100);\n    return 0;\n}}\n");
        let cfg = EnumConfig { max_runs: 10, ..EnumConfig::default() };
        let r = enum_check(&src, 5, true, &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Unknown);
        assert!(matches!(enum_check("int main(void) { return x; }\n", 5, true, &cfg), Err(EnumError::Build(_))));
    }

    #[test]
    fn runaway_execution_is_unknown() {
        let cfg = EnumConfig { run_timeout: Duration::from_millis(100), ..EnumConfig::default() };
        let src = format!("{HEAD}int main(void) {{\n    volatile int x = 1;\n    while (x) {{ }}\n    return 0;\n}}\n");
        let r = enum_check(&src, 0, true, &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Unknown, "{}", r.stdout);
    }
}
