//! End-to-end runs: full generation, verify-only, and the benchmark sweep.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::error::{RunError, VerifyError};
use crate::facts::{self, PropertyMap};
use crate::frontend::{build_call_graph, compile_check_with, load_program, parse_program, strip_assertions};
use crate::llm::stages::{self, StageOptions};
use crate::llm::Gateway;
use crate::model::ProgramModel;
use crate::report::{bench_table, BenchRow, RunReport};
use crate::traversal::{cg_traversal, AssertionSequence};
use crate::verifier::{verify_all, PortfolioChecker, VerifyRunResult};

pub const P0_FILE: &str = "p0.c";
pub const PPLUS_FILE: &str = "pplus.c";
pub const PPLUSK_FILE: &str = "pplusk.c";
pub const ANNOTATED_FILE: &str = "annotated.c";
pub const REPORT_FILE: &str = "report.json";
pub const PROPERTIES_FILE: &str = "properties.json";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
pub const SOLVER_LOGS_DIR: &str = "solver_logs";
pub const LOCK_FILE: &str = ".lock";
pub const TABLE_FILE: &str = "table.txt";

/// Exclusive use of an output directory for the lifetime of the guard.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn lock(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|e| RunError::io(root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(OutputDir { root: root.to_path_buf() }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(RunError::Locked(root.to_path_buf())),
            Err(e) => Err(RunError::io(lock, e)),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), RunError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| RunError::io(p, e))
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK_FILE));
    }
}

fn stage_options(cfg: &RunConfig) -> StageOptions {
    StageOptions { max_retries: cfg.max_retries, compiler: cfg.compiler_config(), bound: cfg.bound }
}

fn write_solver_logs(out: &OutputDir, result: &VerifyRunResult) -> Result<(), RunError> {
    let dir = out.path(SOLVER_LOGS_DIR);
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
    for r in &result.log {
        let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let p = dir.join(format!("a{}_{kind}.json", r.assertion.0));
        let mut text = serde_json::to_string_pretty(r).expect("check record serializes");
        text.push('\n');
        fs::write(&p, text).map_err(|e| RunError::io(p, e))?;
    }
    Ok(())
}

/// A finished run, or the checks completed before an abort.
type VerifyOutcome = Result<VerifyRunResult, (VerifyRunResult, VerifyError)>;

/// Traversal plus verification. A partial result survives an abort.
fn verify_program(model: &ProgramModel, cfg: &RunConfig) -> Result<(AssertionSequence, VerifyOutcome), RunError> {
    let cg = build_call_graph(model);
    let seq = cg_traversal(model, &cg)?;
    let mut checker = PortfolioChecker { configs: cfg.solvers.clone(), timeout: cfg.timeout() };
    let r = verify_all(model, &seq, cfg.bound, &mut checker).map_err(|a| {
        log::error!("{a}");
        (*a.partial, a.source)
    });
    Ok((seq, r))
}

struct Verified {
    seq: AssertionSequence,
    result: VerifyRunResult,
}

/// Verifies `model`, writing solver logs and filling the report even when
/// verification stops early.
fn verify_and_log(
    model: &ProgramModel,
    cfg: &RunConfig,
    out: &OutputDir,
    report: &mut RunReport,
) -> Result<Verified, RunError> {
    let t = Instant::now();
    let (seq, r) = verify_program(model, cfg)?;
    report.timings.verify_elapsed += t.elapsed().as_secs_f64();
    match r {
        Ok(result) => {
            write_solver_logs(out, &result)?;
            Ok(Verified { seq, result })
        }
        Err((partial, e)) => {
            write_solver_logs(out, &partial)?;
            report.fill(&seq, &partial, &PropertyMap::unmapped(&seq));
            Err(e.into())
        }
    }
}

fn finish(
    out: &OutputDir,
    report: &mut RunReport,
    started: Instant,
    outcome: &Result<(), RunError>,
) -> Result<(), RunError> {
    report.timings.total_elapsed = started.elapsed().as_secs_f64();
    if let Err(e) = outcome {
        report.error = Some(format!("{}: {e}", e.stage()));
    }
    out.write(REPORT_FILE, &report.to_json())
}

/// Verifies an annotated C file without any prompting. Facts use the
/// template sentences; `property_map` is an optional JSON sidecar.
pub fn run_verify_only(
    source: &str,
    cfg: &RunConfig,
    out_dir: &Path,
    property_map: Option<&Path>,
) -> Result<RunReport, RunError> {
    let out = OutputDir::lock(out_dir)?;
    let started = Instant::now();
    let mut report = RunReport::new("verify", cfg.bound, cfg.timeout_secs);
    let outcome = verify_only_inner(source, cfg, &out, property_map, &mut report);
    finish(&out, &mut report, started, &outcome)?;
    outcome.map(|_| report)
}

fn verify_only_inner(
    source: &str,
    cfg: &RunConfig,
    out: &OutputDir,
    property_map: Option<&Path>,
    report: &mut RunReport,
) -> Result<(), RunError> {
    compile_check_with(&cfg.compiler_config(), source)?.into_result()?;
    let model = load_program(source)?.with_bound(cfg.bound);
    out.write(PPLUSK_FILE, &model.source)?;
    let p0 = parse_program(&strip_assertions(&model))?;
    out.write(P0_FILE, &p0.source)?;
    let Verified { seq, result } = verify_and_log(&model, cfg, out, report)?;
    let map = match property_map {
        Some(p) => PropertyMap::from_sidecar(p, &seq, usize::MAX).map_err(|e| RunError::io(p, e))?,
        None => PropertyMap::unmapped(&seq),
    };
    report.fill(&seq, &result, &map);
    let placed = facts::collect_facts(&model, &seq, &result, cfg.bound, &mut |a| facts::template_fact(&a.predicate));
    out.write(ANNOTATED_FILE, &facts::embed_facts(&p0, &placed)?)?;
    Ok(())
}

/// The whole pipeline, description to annotated program. Artifacts are
/// written as soon as they exist, so a failed run leaves everything up to the
/// failing stage behind.
pub fn run_full(description: &str, cfg: &RunConfig, gw: &mut Gateway, out_dir: &Path) -> Result<RunReport, RunError> {
    let out = OutputDir::lock(out_dir)?;
    let started = Instant::now();
    let mut report = RunReport::new("full", cfg.bound, cfg.timeout_secs);
    let outcome = full_inner(description, cfg, gw, &out, &mut report);
    let transcripts = out.path(TRANSCRIPTS_DIR);
    gw.write_transcripts(&transcripts).map_err(|e| RunError::io(transcripts, e))?;
    finish(&out, &mut report, started, &outcome)?;
    outcome.map(|_| report)
}

fn full_inner(
    description: &str,
    cfg: &RunConfig,
    gw: &mut Gateway,
    out: &OutputDir,
    report: &mut RunReport,
) -> Result<(), RunError> {
    let opts = stage_options(cfg);
    let k = cfg.bound;
    let llm_start = Instant::now();

    let properties = stages::elicit_properties(gw, description)?;
    report.properties = properties.clone();
    out.write(PROPERTIES_FILE, &(serde_json::to_string_pretty(&properties).expect("strings serialize") + "\n"))?;
    let p0 = stages::synthesize(gw, description, &opts)?;
    out.write(P0_FILE, &p0.source)?;
    let pplus = stages::annotate(gw, description, &p0, &properties, &opts)?;
    out.write(PPLUS_FILE, &pplus.source)?;
    let configs = cfg.solvers.clone();
    let timeout = cfg.timeout();
    let pplusk = stages::bound_reduce(gw, &pplus, k, &opts, &mut |m| stages::unwinding_check(m, k, &configs, timeout))?;
    out.write(PPLUSK_FILE, &pplusk.source)?;
    report.timings.llm_elapsed += llm_start.elapsed().as_secs_f64();

    let Verified { seq, result } = verify_and_log(&pplusk, cfg, out, report)?;

    let t = Instant::now();
    let map = facts::map_to_properties(gw, &seq, &properties);
    report.fill(&seq, &result, &map);
    let placed =
        facts::collect_facts(&pplusk, &seq, &result, k, &mut |a| facts::translate_fact(Some(&mut *gw), &pplusk, a));
    out.write(ANNOTATED_FILE, &facts::embed_facts(&p0, &placed)?)?;
    report.timings.llm_elapsed += t.elapsed().as_secs_f64();
    Ok(())
}

/// Builds the gateway for one benchmark task.
pub type GatewayFactory<'a> = dyn FnMut(&str) -> Result<Gateway, RunError> + 'a;

/// Runs every `*.txt` description in `task_dir`, sorted by name, each into
/// its own subdirectory of `out_dir`. Task failures become table rows.
pub fn run_bench(
    task_dir: &Path,
    cfg: &RunConfig,
    out_dir: &Path,
    gateway_for: &mut GatewayFactory<'_>,
) -> Result<(String, Vec<BenchRow>), RunError> {
    let out = OutputDir::lock(out_dir)?;
    let mut tasks: Vec<PathBuf> = fs::read_dir(task_dir)
        .map_err(|e| RunError::io(task_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    tasks.sort();
    if tasks.is_empty() {
        return Err(RunError::Usage(format!("no task descriptions (*.txt) in {}", task_dir.display())));
    }
    let mut rows = Vec::new();
    for path in tasks {
        let task = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        log::info!("bench task {task}");
        let outcome = fs::read_to_string(&path)
            .map_err(|e| RunError::io(&path, e))
            .and_then(|d| {
                let mut gw = gateway_for(&task)?;
                run_full(&d, cfg, &mut gw, &out.path(&task))
            })
            .map_err(|e| {
                log::error!("task {task}: {e}");
                e.stage().to_string()
            });
        rows.push(BenchRow { task, outcome });
    }
    let table = bench_table(&rows);
    out.write(TABLE_FILE, &table)?;
    Ok((table, rows))
}
