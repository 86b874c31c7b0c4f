//! Bounded model checking through a portfolio of external solvers.
//!
//! Every configuration in the portfolio is launched at once on the same
//! query; the first definitive verdict wins and the other processes are
//! killed. A race that ends without a definitive verdict is `Unknown`.

mod process;
pub mod report;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::frontend::dialect;
use process::run_bounded;
pub use process::run_bounded as run_process;
pub use process::Termination;
pub use report::{parse_transcript, SolverFamily};

pub const DEFAULT_TIMEOUT_SECS: f64 = 60.0;
const UNWIND_SLOT: &str = "{unwind}";
const FILE_SLOT: &str = "{file}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Verified,
    Falsified,
    Unknown,
}

impl Outcome {
    pub fn is_definitive(self) -> bool {
        self != Outcome::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub name: String,
    pub binary: String,
    /// Argument template; must contain `{unwind}` and `{file}` once each.
    pub args: Vec<String>,
    pub dialect: String,
    pub family: SolverFamily,
    #[serde(default = "yes")]
    pub unwinding_assertions: bool,
    /// Extra arguments when unwinding assertions are on.
    #[serde(default)]
    pub unwinding_on: Vec<String>,
    /// Extra arguments when unwinding assertions are off.
    #[serde(default)]
    pub unwinding_off: Vec<String>,
}

fn yes() -> bool {
    true
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl SolverConfig {
    pub fn cbmc() -> Self {
        SolverConfig {
            name: "cbmc".into(),
            binary: "cbmc".into(),
            args: strings(&["--unwind", UNWIND_SLOT, "--no-standard-checks", "--trace", FILE_SLOT]),
            dialect: "cbmc".into(),
            family: SolverFamily::Cbmc,
            unwinding_assertions: true,
            unwinding_on: strings(&["--unwinding-assertions"]),
            unwinding_off: strings(&["--no-unwinding-assertions"]),
        }
    }

    pub fn cbmc_bitwuzla() -> Self {
        SolverConfig {
            name: "cbmc-bitwuzla".into(),
            args: strings(&["--unwind", UNWIND_SLOT, "--no-standard-checks", "--bitwuzla", "--trace", FILE_SLOT]),
            ..Self::cbmc()
        }
    }

    pub fn esbmc_bitwuzla() -> Self {
        SolverConfig {
            name: "esbmc-bitwuzla".into(),
            binary: "esbmc".into(),
            args: strings(&[
                "--unwind",
                UNWIND_SLOT,
                "--bitwuzla",
                "--no-bounds-check",
                "--no-pointer-check",
                "--no-div-by-zero-check",
                FILE_SLOT,
            ]),
            dialect: "esbmc".into(),
            family: SolverFamily::Esbmc,
            unwinding_assertions: true,
            unwinding_on: Vec::new(),
            unwinding_off: strings(&["--no-unwinding-assertions"]),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let count = |slot: &str| self.args.iter().map(|a| a.matches(slot).count()).sum::<usize>();
        for slot in [UNWIND_SLOT, FILE_SLOT] {
            if count(slot) != 1 {
                return Err(SolverError::Config {
                    name: self.name.clone(),
                    reason: format!("argument template must contain {slot} exactly once"),
                });
            }
        }
        dialect(&self.dialect).map_err(|e| SolverError::Config { name: self.name.clone(), reason: e.to_string() })?;
        Ok(())
    }

    pub fn command_args(&self, bound: u32, file: &Path) -> Vec<String> {
        let file = file.to_string_lossy();
        let mut args: Vec<String> =
            self.args.iter().map(|a| a.replace(UNWIND_SLOT, &bound.to_string()).replace(FILE_SLOT, &file)).collect();
        let extra = if self.unwinding_assertions { &self.unwinding_on } else { &self.unwinding_off };
        // Flags go before the input file so option parsers see them.
        let at = args.iter().position(|a| a.contains(file.as_ref())).unwrap_or(args.len());
        for (k, e) in extra.iter().enumerate() {
            args.insert(at + k, e.clone());
        }
        args
    }
}

/// The three configurations raced by default.
pub fn default_portfolio() -> Vec<SolverConfig> {
    vec![SolverConfig::cbmc(), SolverConfig::cbmc_bitwuzla(), SolverConfig::esbmc_bitwuzla()]
}

/// Raw record of one solver process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTranscript {
    pub solver: String,
    pub command: Vec<String>,
    pub exit_code: Option<i32>,
    pub termination: String,
    pub outcome: Outcome,
    pub elapsed: f64,
    pub stdout: String,
    pub stderr: String,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub winning_solver: Option<String>,
    /// Seconds.
    pub elapsed: f64,
    pub counterexample_text: Option<String>,
    #[serde(default)]
    pub transcripts: Vec<SolverTranscript>,
}

/// Query text per assume dialect. The same program rendered for each solver
/// family in the portfolio.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub sources: BTreeMap<String, String>,
}

impl Query {
    /// One text for every dialect (no assumptions in it).
    pub fn uniform(source: impl Into<String>) -> Self {
        let source = source.into();
        let sources = crate::frontend::render::DIALECTS.iter().map(|d| (d.id.to_string(), source.clone())).collect();
        Query { sources }
    }

    pub fn source_for(&self, dialect: &str) -> Result<&str, SolverError> {
        self.sources
            .get(dialect)
            .map(String::as_str)
            .ok_or_else(|| SolverError::MissingDialectSource(dialect.to_string()))
    }
}

struct SolverRun {
    transcript: SolverTranscript,
    counterexample: Option<String>,
}

fn run_one(
    config: &SolverConfig,
    file: &Path,
    bound: u32,
    deadline: Instant,
    cancel: &AtomicBool,
) -> Result<SolverRun, SolverError> {
    let args = config.command_args(bound, file);
    let mut cmd = Command::new(&config.binary);
    cmd.args(&args).env("LC_ALL", "C");
    let mut raw = run_bounded(cmd, deadline, cancel).map_err(|e| SolverError::Missing {
        name: config.name.clone(),
        binary: config.binary.clone(),
        reason: e.to_string(),
    })?;
    // Transcripts name the query by a stable placeholder path.
    let tmp = file.parent().map(|d| d.display().to_string()).unwrap_or_default();
    let sanitize = |s: &str| if tmp.is_empty() { s.to_string() } else { s.replace(&tmp, "$TMP") };
    raw.stdout = sanitize(&raw.stdout);
    raw.stderr = sanitize(&raw.stderr);
    let (outcome, counterexample, note, exit_code) = match raw.termination {
        Termination::Exited(code) => {
            let parsed = parse_transcript(config.family, code, &raw.stdout);
            if let Some(d) = &parsed.diagnostic {
                log::warn!("{}: {d}", config.name);
            }
            (parsed.outcome, parsed.counterexample, parsed.diagnostic, code)
        }
        Termination::TimedOut => (Outcome::Unknown, None, Some("timed out".to_string()), None),
        Termination::Cancelled => (Outcome::Unknown, None, Some("cancelled".to_string()), None),
    };
    let mut command = vec![config.binary.clone()];
    command.extend(args.iter().map(|a| sanitize(a)));
    Ok(SolverRun {
        transcript: SolverTranscript {
            solver: config.name.clone(),
            command,
            exit_code,
            termination: format!("{:?}", raw.termination),
            outcome,
            elapsed: raw.elapsed.as_secs_f64(),
            stdout: raw.stdout,
            stderr: raw.stderr,
            note,
        },
        counterexample,
    })
}

fn write_query(dir: &Path, dialect: &str, source: &str) -> Result<std::path::PathBuf, SolverError> {
    let path = dir.join(format!("query_{dialect}.c"));
    std::fs::write(&path, source)?;
    Ok(path)
}

/// Runs one solver configuration on `source`.
pub fn check_single(
    config: &SolverConfig,
    source: &str,
    bound: u32,
    timeout: Duration,
) -> Result<Verdict, SolverError> {
    config.validate()?;
    let dir = tempfile::Builder::new().prefix("cofact-").tempdir()?;
    let file = write_query(dir.path(), &config.dialect, source)?;
    let start = Instant::now();
    let never = AtomicBool::new(false);
    let run = run_one(config, &file, bound, start + timeout, &never)?;
    let outcome = run.transcript.outcome;
    Ok(Verdict {
        outcome,
        winning_solver: outcome.is_definitive().then(|| config.name.clone()),
        elapsed: start.elapsed().as_secs_f64(),
        counterexample_text: run.counterexample,
        transcripts: vec![run.transcript],
    })
}

/// Races every configuration on the query; first definitive verdict wins.
///
/// `timeout` bounds the whole race. Losers are killed and reaped before this
/// returns. Configurations whose binary is missing are skipped unless all of
/// them are.
pub fn run_portfolio(
    configs: &[SolverConfig],
    query: &Query,
    bound: u32,
    timeout: Duration,
) -> Result<Verdict, SolverError> {
    if configs.is_empty() {
        return Err(SolverError::Empty);
    }
    for c in configs {
        c.validate()?;
    }
    let dir = tempfile::Builder::new().prefix("cofact-").tempdir()?;
    let mut files = BTreeMap::new();
    for c in configs {
        if !files.contains_key(&c.dialect) {
            let path = write_query(dir.path(), &c.dialect, query.source_for(&c.dialect)?)?;
            files.insert(c.dialect.clone(), path);
        }
    }

    let start = Instant::now();
    let deadline = start + timeout;
    let cancel = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<SolverRun, SolverError>)>();

    let mut winner: Option<(usize, Outcome, Option<String>, f64)> = None;
    let mut runs: Vec<Option<SolverRun>> = (0..configs.len()).map(|_| None).collect();
    let mut missing = Vec::new();

    std::thread::scope(|scope| {
        for (i, c) in configs.iter().enumerate() {
            let tx = tx.clone();
            let file = &files[&c.dialect];
            let cancel = &cancel;
            scope.spawn(move || {
                let r = run_one(c, file, bound, deadline, cancel);
                let _ = tx.send((i, r));
            });
        }
        drop(tx);
        for (i, result) in rx.iter() {
            match result {
                Ok(run) => {
                    let outcome = run.transcript.outcome;
                    if winner.is_none() && outcome.is_definitive() {
                        winner = Some((i, outcome, run.counterexample.clone(), start.elapsed().as_secs_f64()));
                        cancel.store(true, Ordering::SeqCst);
                    } else if let Some((w, wo, _, _)) = &winner {
                        if outcome.is_definitive() && outcome != *wo {
                            log::warn!(
                                "solver disagreement: {} said {:?} after {} said {:?}; keeping the first",
                                configs[i].name,
                                outcome,
                                configs[*w].name,
                                wo
                            );
                        }
                    }
                    runs[i] = Some(run);
                }
                Err(e) => missing.push(e.to_string()),
            }
        }
    });

    if missing.len() == configs.len() {
        return Err(SolverError::AllMissing(missing));
    }
    let transcripts: Vec<SolverTranscript> = runs.into_iter().flatten().map(|r| r.transcript).collect();
    Ok(match winner {
        Some((i, outcome, cex, elapsed)) => Verdict {
            outcome,
            winning_solver: Some(configs[i].name.clone()),
            elapsed,
            counterexample_text: if outcome == Outcome::Falsified { cex } else { None },
            transcripts,
        },
        None => Verdict {
            outcome: Outcome::Unknown,
            winning_solver: None,
            elapsed: start.elapsed().as_secs_f64(),
            counterexample_text: None,
            transcripts,
        },
    })
}

/// First line of `<binary> --version`, or why it could not be run.
pub fn probe(config: &SolverConfig) -> Result<String, SolverError> {
    let mut cmd = Command::new(&config.binary);
    cmd.arg("--version");
    let never = AtomicBool::new(false);
    let raw = run_bounded(cmd, Instant::now() + Duration::from_secs(10), &never).map_err(|e| SolverError::Missing {
        name: config.name.clone(),
        binary: config.binary.clone(),
        reason: e.to_string(),
    })?;
    Ok(raw.stdout.lines().chain(raw.stderr.lines()).next().unwrap_or("").trim().to_string())
}
