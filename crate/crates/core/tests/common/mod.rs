#![allow(dead_code)]

pub mod golden;

use std::path::{Path, PathBuf};

use cofact_core::config::{Overrides, RunConfig};
use cofact_core::enumcheck;
use cofact_core::error::RunError;
use cofact_core::llm::{Cache, Gateway, Mode, ScriptedProvider};
use cofact_core::pipeline::run_full;
use cofact_core::portfolio::SolverConfig;
use cofact_core::report::RunReport;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The enumerative checker as a portfolio entry, over inputs in [-3, 3].
pub fn enum_solver() -> SolverConfig {
    enumcheck::solver_config(env!("CARGO_BIN_EXE_cofact-enumcheck"), -3, 3)
}

pub fn enum_config(bound: u32) -> RunConfig {
    RunConfig { bound, solvers: vec![enum_solver()], ..RunConfig::default() }
}

pub fn replay_sets() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixtures().join("replay"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.join("script.toml").exists())
        .collect();
    v.sort();
    v
}

/// The set's own settings; `cofact-enumcheck` resolves to the built binary.
pub fn replay_config(set: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.apply(&Overrides::from_file(&set.join("config.toml")).unwrap());
    for s in &mut cfg.solvers {
        if s.binary == "cofact-enumcheck" {
            s.binary = env!("CARGO_BIN_EXE_cofact-enumcheck").into();
        }
    }
    cfg.provider.mode = Mode::Replay;
    cfg.provider.cache_dir = set.join("cache");
    cfg.validate().unwrap();
    cfg
}

pub fn replay_gateway(cfg: &RunConfig) -> Gateway {
    Gateway::replay(Cache::new(&cfg.provider.cache_dir), &cfg.provider.model)
}

/// Runs `full` for a replay set; returns the report and the provider call count.
pub fn run_replay(set: &Path, out: &Path) -> (Result<RunReport, RunError>, usize) {
    let cfg = replay_config(set);
    let mut gw = replay_gateway(&cfg);
    let r = run_full(&read(&set.join("description.txt")), &cfg, &mut gw, out);
    (r, gw.provider_calls())
}

/// Regenerates a set's cache by answering from its script.
pub fn record(set: &Path, out: &Path) -> (Result<RunReport, RunError>, ScriptedProvider) {
    let cfg = replay_config(set);
    let cache = set.join("cache");
    let _ = std::fs::remove_dir_all(&cache);
    let script = ScriptedProvider::from_toml(&read(&set.join("script.toml"))).unwrap();
    let shared = std::sync::Arc::new(std::sync::Mutex::new(script));
    let mut gw = Gateway::live(Cache::new(&cache), &cfg.provider.model, Box::new(SharedScript(shared.clone())));
    gw.retries = 1;
    let r = run_full(&read(&set.join("description.txt")), &cfg, &mut gw, out);
    drop(gw);
    let script = std::sync::Arc::try_unwrap(shared).ok().unwrap().into_inner().unwrap();
    (r, script)
}

struct SharedScript(std::sync::Arc<std::sync::Mutex<ScriptedProvider>>);

impl cofact_core::llm::Provider for SharedScript {
    fn complete(&mut self, req: &cofact_core::llm::PromptRequest) -> Result<String, String> {
        self.0.lock().unwrap().complete(req)
    }
}
