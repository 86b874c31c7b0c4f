//! Enumerative stand-in for a bounded model checker, with CBMC-style output
//! and exit codes (0 successful, 10 failed, 5 inconclusive, 6 error).

use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use cofact_core::enumcheck::{enum_check, EnumConfig, EnumError};

#[derive(Parser)]
#[command(name = "cofact-enumcheck", version, about = "Check assertions by enumerating inputs over a small domain")]
struct Args {
    /// Loop iterations allowed before the unwinding check fires (0 = unlimited).
    #[arg(long, default_value_t = 0)]
    unwind: u32,
    #[arg(long, overrides_with = "no_unwinding_assertions")]
    unwinding_assertions: bool,
    #[arg(long)]
    no_unwinding_assertions: bool,
    /// Input domain as LO:HI.
    #[arg(long, default_value = "-3:3", value_parser = parse_domain, allow_hyphen_values = true)]
    domain: (i64, i64),
    #[arg(long, default_value_t = 200_000)]
    max_runs: u64,
    /// Per-execution limit in milliseconds.
    #[arg(long, default_value_t = 2000)]
    run_timeout_ms: u64,
    #[arg(long, default_value = "gcc")]
    compiler: String,
    file: std::path::PathBuf,
}

fn parse_domain(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err("LO must not exceed HI".into());
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let source = match std::fs::read_to_string(&args.file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.file.display());
            return ExitCode::from(6);
        }
    };
    let cfg = EnumConfig {
        lo: args.domain.0,
        hi: args.domain.1,
        max_runs: args.max_runs,
        run_timeout: Duration::from_millis(args.run_timeout_ms),
        total_timeout: Duration::from_secs(24 * 3600),
        compiler: args.compiler,
    };
    let unwinding = args.unwinding_assertions && !args.no_unwinding_assertions;
    match enum_check(&source, args.unwind, unwinding, &cfg) {
        Ok(r) => {
            print!("{}", r.stdout);
            ExitCode::from(r.exit_code.clamp(0, 255) as u8)
        }
        Err(EnumError::Build(msg)) => {
            println!("CONVERSION ERROR\n{msg}");
            ExitCode::from(6)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(6)
        }
    }
}
