use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cofact_core::config::{Overrides, ProviderOverrides, RunConfig};
use cofact_core::error::{exit, RunError};
use cofact_core::llm::{Cache, Gateway, HttpProvider, Mode, Provider, ScriptedProvider};
use cofact_core::pipeline;
use cofact_core::portfolio::probe;
use cofact_core::report::RunReport;

#[derive(Parser)]
#[command(name = "cofact", version, about = "Generate C programs with verified natural-language facts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, annotate, verify and embed facts for a task description.
    Full {
        description: PathBuf,
        #[arg(long, short, default_value = "cofact-out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the assertions of an existing C file. No prompting.
    Verify {
        file: PathBuf,
        #[arg(long, short, default_value = "cofact-out")]
        out: PathBuf,
        /// JSON object mapping assertion ids to property numbers.
        #[arg(long)]
        property_map: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run `full` on every *.txt description in a directory and print a table.
    Bench {
        tasks: PathBuf,
        #[arg(long, short, default_value = "cofact-bench")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Report which compilers, solvers and provider settings are usable.
    Doctor {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file. Its settings take precedence over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Loop unwind bound k.
    #[arg(long, short = 'k')]
    bound: Option<u32>,
    /// Portfolio wall-clock budget per query, in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    cbmc: Option<String>,
    #[arg(long)]
    esbmc: Option<String>,
    #[arg(long)]
    compiler: Option<String>,
    #[arg(long)]
    max_retries: Option<u32>,
    /// live or replay.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    effort: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    /// Environment variable holding the provider key.
    #[arg(long)]
    credential_var: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// `http`, or `scripted:PATH` to answer from a TOML script (a directory
    /// holds one `<task>.toml` per bench task).
    #[arg(long, default_value = "http")]
    provider: String,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, RunError> {
        let flags = Overrides {
            bound: self.bound,
            timeout_secs: self.timeout,
            max_retries: self.max_retries,
            compiler: self.compiler.clone(),
            cbmc: self.cbmc.clone(),
            esbmc: self.esbmc.clone(),
            solvers: None,
            provider: ProviderOverrides {
                mode: self.mode,
                model: self.model.clone(),
                effort: self.effort.clone(),
                endpoint: self.endpoint.clone(),
                credential_var: self.credential_var.clone(),
                cache_dir: self.cache_dir.clone(),
                retries: None,
            },
        };
        RunConfig::resolve(&flags, self.config.as_deref())
    }

    fn provider(&self, cfg: &RunConfig, task: Option<&str>) -> Result<Box<dyn Provider>, RunError> {
        if let Some(path) = self.provider.strip_prefix("scripted:") {
            let mut path = PathBuf::from(path);
            if let (true, Some(task)) = (path.is_dir(), task) {
                path = path.join(format!("{task}.toml"));
            }
            let text = std::fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
            let p =
                ScriptedProvider::from_toml(&text).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
            return Ok(Box::new(p));
        }
        if self.provider != "http" {
            return Err(RunError::Usage(format!("unknown provider `{}`", self.provider)));
        }
        let p = HttpProvider::from_env(&cfg.provider.endpoint, &cfg.provider.credential_var)
            .map_err(|e| RunError::Stage(e.into()))?;
        Ok(Box::new(p))
    }

    fn gateway(&self, cfg: &RunConfig, task: Option<&str>) -> Result<Gateway, RunError> {
        let cache = Cache::new(&cfg.provider.cache_dir);
        let mut gw = match cfg.provider.mode {
            Mode::Replay => Gateway::replay(cache, &cfg.provider.model),
            Mode::Live => Gateway::live(cache, &cfg.provider.model, self.provider(cfg, task)?),
        };
        gw.effort = cfg.provider.effort.clone();
        gw.retries = cfg.provider.retries;
        Ok(gw)
    }
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))
}

fn summarize(r: &RunReport, out: &Path) {
    let t = &r.totals;
    println!(
        "{} assertions: {} verified, {} conditionally verified, {} falsified, {} unknown",
        t.attempted, t.verified, t.cond_verified, t.falsified, t.unknown
    );
    println!("output written to {}", out.display());
}

fn doctor(common: &Common) -> Result<i32, RunError> {
    let cfg = common.resolve()?;
    let mut code = exit::OK;
    match cofact_core::frontend::compile_check_with(&cfg.compiler_config(), "int main(void) { return 0; }\n") {
        Ok(d) if d.success => println!("compiler  {}: ok", cfg.compiler),
        Ok(d) => {
            println!("compiler  {}: rejects a trivial program: {}", cfg.compiler, d.messages.join(" "));
            code = exit::FRONTEND;
        }
        Err(e) => {
            println!("compiler  {}: {e}", cfg.compiler);
            code = exit::FRONTEND;
        }
    }
    let mut usable = 0;
    for s in &cfg.solvers {
        match probe(s) {
            Ok(v) => {
                usable += 1;
                println!("solver    {} ({}): {v}", s.name, s.binary);
            }
            Err(e) => println!("solver    {}: {e}", s.name),
        }
    }
    if usable == 0 && code == exit::OK {
        code = exit::SOLVER;
    }
    println!("provider  mode {:?}, model {}, effort {}", cfg.provider.mode, cfg.provider.model, cfg.provider.effort);
    let key = std::env::var(&cfg.provider.credential_var).is_ok_and(|v| !v.is_empty());
    println!("provider  credential {}: {}", cfg.provider.credential_var, if key { "set" } else { "not set" });
    println!("cache     {}", cfg.provider.cache_dir.display());
    Ok(code)
}

fn run(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Full { description, out, common } => {
            let cfg = common.resolve()?;
            let text = read(&description)?;
            let mut gw = common.gateway(&cfg, None)?;
            let r = pipeline::run_full(&text, &cfg, &mut gw, &out)?;
            summarize(&r, &out);
        }
        Command::Verify { file, out, property_map, common } => {
            let cfg = common.resolve()?;
            let text = read(&file)?;
            let r = pipeline::run_verify_only(&text, &cfg, &out, property_map.as_deref())?;
            summarize(&r, &out);
        }
        Command::Bench { tasks, out, common } => {
            let cfg = common.resolve()?;
            let (table, _) = pipeline::run_bench(&tasks, &cfg, &out, &mut |task| common.gateway(&cfg, Some(task)))?;
            print!("{table}");
        }
        Command::Doctor { common } => return doctor(&common),
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error ({}): {e}", e.stage());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
