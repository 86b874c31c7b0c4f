//! Run configuration: defaults, command-line flags, then the config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::RunError;
use crate::frontend::DEFAULT_BOUND;
use crate::llm::{self, Mode};
use crate::portfolio::{default_portfolio, SolverConfig, DEFAULT_TIMEOUT_SECS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderSettings {
    pub mode: Mode,
    pub model: String,
    pub effort: String,
    pub endpoint: String,
    pub credential_var: String,
    pub cache_dir: PathBuf,
    /// Provider attempts per prompt.
    pub retries: u32,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        ProviderSettings {
            mode: Mode::Live,
            model: llm::DEFAULT_MODEL.into(),
            effort: llm::DEFAULT_EFFORT.into(),
            endpoint: llm::DEFAULT_ENDPOINT.into(),
            credential_var: llm::DEFAULT_CREDENTIAL_VAR.into(),
            cache_dir: PathBuf::from(".cofact-cache"),
            retries: llm::DEFAULT_RETRIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub bound: u32,
    pub timeout_secs: f64,
    pub solvers: Vec<SolverConfig>,
    /// Re-prompts per stage after a rejected answer.
    pub max_retries: u32,
    pub compiler: String,
    pub provider: ProviderSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bound: DEFAULT_BOUND,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            solvers: default_portfolio(),
            max_retries: crate::llm::stages::DEFAULT_MAX_RETRIES,
            compiler: "gcc".into(),
            provider: ProviderSettings::default(),
        }
    }
}

/// Partial settings. Both the command line and the config file produce one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub bound: Option<u32>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub compiler: Option<String>,
    /// Replaces the binary of every `cbmc` family entry.
    pub cbmc: Option<String>,
    /// Replaces the binary of every `esbmc` family entry.
    pub esbmc: Option<String>,
    /// Replaces the whole portfolio.
    pub solvers: Option<Vec<SolverConfig>>,
    #[serde(default)]
    pub provider: ProviderOverrides,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderOverrides {
    pub mode: Option<Mode>,
    pub model: Option<String>,
    pub effort: Option<String>,
    pub endpoint: Option<String>,
    pub credential_var: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub retries: Option<u32>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut o: Overrides =
            toml::from_str(&text).map_err(|e| RunError::Usage(format!("config file {}: {e}", path.display())))?;
        // Relative cache paths are relative to the file.
        if let (Some(dir), Some(base)) = (o.provider.cache_dir.as_mut(), path.parent()) {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(o)
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut self.bound, &o.bound);
        set(&mut self.timeout_secs, &o.timeout_secs);
        set(&mut self.max_retries, &o.max_retries);
        set(&mut self.compiler, &o.compiler);
        set(&mut self.solvers, &o.solvers);
        for s in &mut self.solvers {
            match s.family {
                crate::portfolio::SolverFamily::Cbmc if s.name.starts_with("cbmc") => set(&mut s.binary, &o.cbmc),
                crate::portfolio::SolverFamily::Esbmc => set(&mut s.binary, &o.esbmc),
                _ => {}
            }
        }
        let p = &o.provider;
        set(&mut self.provider.mode, &p.mode);
        set(&mut self.provider.model, &p.model);
        set(&mut self.provider.effort, &p.effort);
        set(&mut self.provider.endpoint, &p.endpoint);
        set(&mut self.provider.credential_var, &p.credential_var);
        set(&mut self.provider.cache_dir, &p.cache_dir);
        set(&mut self.provider.retries, &p.retries);
    }

    /// Defaults, then `flags`, then the config file (which wins).
    pub fn resolve(flags: &Overrides, file: Option<&Path>) -> Result<Self, RunError> {
        let mut cfg = RunConfig::default();
        cfg.apply(flags);
        if let Some(path) = file {
            cfg.apply(&Overrides::from_file(path)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.bound < 1 {
            return Err(RunError::Usage("the unwind bound k must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(RunError::Usage("the portfolio timeout must be a positive number of seconds".into()));
        }
        if self.solvers.is_empty() {
            return Err(RunError::Usage("the solver portfolio is empty".into()));
        }
        for s in &self.solvers {
            s.validate().map_err(|e| RunError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn compiler_config(&self) -> crate::frontend::CompilerConfig {
        crate::frontend::CompilerConfig { path: self.compiler.clone(), ..Default::default() }
    }
}
