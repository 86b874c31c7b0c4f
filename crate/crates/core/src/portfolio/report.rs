//! Maps raw solver transcripts to outcomes.
//!
//! CBMC exits 0 with `VERIFICATION SUCCESSFUL` and 10 with `VERIFICATION FAILED`;
//! ESBMC uses the same banners with exit codes 0 and 1. Anything else, including
//! a banner that disagrees with the exit code, is treated as inconclusive.

use serde::{Deserialize, Serialize};

use super::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverFamily {
    Cbmc,
    Esbmc,
}

const SUCCESS: &str = "VERIFICATION SUCCESSFUL";
const FAILURE: &str = "VERIFICATION FAILED";
const TRACE_MARKERS: &[&str] = &["Counterexample:", "[Counterexample]", "Trace for "];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub outcome: Outcome,
    pub counterexample: Option<String>,
    pub diagnostic: Option<String>,
}

pub fn parse_transcript(family: SolverFamily, exit_code: Option<i32>, stdout: &str) -> Parsed {
    let (ok_code, fail_code) = match family {
        SolverFamily::Cbmc => (0, 10),
        SolverFamily::Esbmc => (0, 1),
    };
    let says_success = stdout.lines().any(|l| l.trim() == SUCCESS);
    let says_failure = stdout.lines().any(|l| l.trim() == FAILURE);
    match (says_success, says_failure, exit_code) {
        (true, false, Some(c)) if c == ok_code => Parsed {
            outcome: Outcome::Verified,
            counterexample: None,
            diagnostic: None,
        },
        (false, true, Some(c)) if c == fail_code => Parsed {
            outcome: Outcome::Falsified,
            counterexample: Some(extract_trace(stdout)),
            diagnostic: None,
        },
        _ => Parsed {
            outcome: Outcome::Unknown,
            counterexample: None,
            diagnostic: Some(format!(
                "unrecognised solver report (exit code {}, success banner: {says_success}, failure banner: {says_failure})",
                exit_code.map_or("none".to_string(), |c| c.to_string())
            )),
        },
    }
}

fn extract_trace(stdout: &str) -> String {
    let lines: Vec<&str> = stdout.lines().collect();
    let start = lines.iter().position(|l| TRACE_MARKERS.iter().any(|m| l.trim_start().starts_with(m)));
    let end = lines.iter().rposition(|l| l.trim() == FAILURE).unwrap_or(lines.len());
    match start {
        Some(s) if s < end => lines[s..end].join("\n").trim_end().to_string(),
        _ => stdout.trim_end().to_string(),
    }
}
