//! The per-run JSON report and the benchmark table.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::facts::PropertyMap;
use crate::model::{AssertionId, VerificationStatus};
use crate::traversal::AssertionSequence;
use crate::verifier::{dependency_closure, VerifyRunResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub id: AssertionId,
    pub function: String,
    pub logical_line: usize,
    pub predicate: String,
    pub status: String,
    /// Assumption set the assertion was verified under.
    pub assumptions: Vec<AssertionId>,
    pub closure: Vec<AssertionId>,
    pub winning_solver: Option<String>,
    pub elapsed: f64,
    /// Elicited property this assertion expresses, 1-based.
    pub property: Option<usize>,
    /// Counterexample of a falsified assertion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub attempted: usize,
    pub verified: usize,
    pub cond_verified: usize,
    pub falsified: usize,
    pub unknown: usize,
}

impl Totals {
    pub fn unverified(&self) -> usize {
        self.falsified + self.unknown
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub llm_elapsed: f64,
    pub verify_elapsed: f64,
    pub total_elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub mode: String,
    pub bound: u32,
    pub timeout_secs: f64,
    pub properties: Vec<String>,
    pub assertions: Vec<AssertionRecord>,
    pub totals: Totals,
    pub timings: Timings,
    /// Set when the run stopped early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(mode: &str, bound: u32, timeout_secs: f64) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            mode: mode.into(),
            bound,
            timeout_secs,
            properties: Vec::new(),
            assertions: Vec::new(),
            totals: Totals::default(),
            timings: Timings::default(),
            error: None,
        }
    }

    /// Fills records and totals. Assertions never attempted (an aborted run)
    /// are listed with status `not_attempted` and counted nowhere.
    pub fn fill(&mut self, seq: &AssertionSequence, result: &VerifyRunResult, map: &PropertyMap) {
        let attempted = result.attempted();
        self.assertions.clear();
        self.totals = Totals::default();
        for (id, a) in seq.ids().zip(&seq.assertions) {
            let status = result.status(id);
            let records: Vec<_> = result.records_for(id).collect();
            let last = records.last();
            let assumptions: Vec<AssertionId> =
                result.ig.entries.get(&id).map(|s| s.iter().copied().collect()).unwrap_or_default();
            let closure: Vec<AssertionId> = if result.ig.entries.contains_key(&id) {
                dependency_closure(&result.ig, &attempted, id).into_iter().collect()
            } else {
                Vec::new()
            };
            match &status {
                Some(VerificationStatus::Verified) => self.totals.verified += 1,
                Some(VerificationStatus::CondVerified(_)) => self.totals.cond_verified += 1,
                Some(VerificationStatus::Falsified) => self.totals.falsified += 1,
                Some(VerificationStatus::Unknown) => self.totals.unknown += 1,
                None => {}
            }
            self.assertions.push(AssertionRecord {
                id,
                function: a.function.clone(),
                logical_line: a.logical_line,
                predicate: a.predicate.clone(),
                status: status.as_ref().map_or("not_attempted", VerificationStatus::label).to_string(),
                assumptions,
                closure,
                winning_solver: last.and_then(|r| r.verdict.winning_solver.clone()),
                elapsed: records.iter().map(|r| r.verdict.elapsed).sum(),
                property: map.get(id),
                trace: last.and_then(|r| r.verdict.counterexample_text.clone()),
            });
        }
        self.totals.attempted = attempted.len();
    }

    /// Totals equal the partition sizes of the records.
    pub fn is_consistent(&self) -> bool {
        let count = |s: &str| self.assertions.iter().filter(|a| a.status == s).count();
        let t = &self.totals;
        t.verified == count("verified")
            && t.cond_verified == count("cond_verified")
            && t.falsified == count("falsified")
            && t.unknown == count("unknown")
            && t.attempted == t.verified + t.cond_verified + t.falsified + t.unknown
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn ids_with_status(&self, status: &str) -> BTreeSet<AssertionId> {
        self.assertions.iter().filter(|a| a.status == status).map(|a| a.id).collect()
    }
}

/// Drops every object key containing `elapsed`, for comparing runs.
pub fn without_elapsed(v: &serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(m) => Value::Object(
            m.iter().filter(|(k, _)| !k.contains("elapsed")).map(|(k, v)| (k.clone(), without_elapsed(v))).collect(),
        ),
        Value::Array(a) => Value::Array(a.iter().map(without_elapsed).collect()),
        other => other.clone(),
    }
}

/// One benchmark row: a finished run or the stage that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub task: String,
    pub outcome: Result<RunReport, String>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// The benchmark summary table with a mean±std footer over finished rows.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let header = ["Task", "#Assert", "✓", "✓(S)", "Unverified", "LLM (s)", "Verify (s)"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    let mut cols: [Vec<f64>; 6] = Default::default();
    for row in rows {
        match &row.outcome {
            Ok(r) => {
                let t = &r.totals;
                let vals = [
                    t.attempted as f64,
                    t.verified as f64,
                    t.cond_verified as f64,
                    t.unverified() as f64,
                    r.timings.llm_elapsed,
                    r.timings.verify_elapsed,
                ];
                for (c, v) in cols.iter_mut().zip(vals) {
                    c.push(v);
                }
                cells.push(vec![
                    row.task.clone(),
                    t.attempted.to_string(),
                    t.verified.to_string(),
                    t.cond_verified.to_string(),
                    t.unverified().to_string(),
                    format!("{:.1}", r.timings.llm_elapsed),
                    format!("{:.1}", r.timings.verify_elapsed),
                ]);
            }
            Err(stage) => {
                let mut c = vec![row.task.clone(), format!("failed: {stage}")];
                c.resize(header.len(), "-".into());
                cells.push(c);
            }
        }
    }
    let mut footer = vec!["Mean±Std".to_string()];
    footer.extend(cols.iter().map(|c| {
        let (m, s) = mean_std(c);
        format!("{m:.1}±{s:.1}")
    }));
    cells.push(footer);

    let widths: Vec<usize> =
        (0..header.len()).map(|i| cells.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    let render = |r: &Vec<String>| {
        let parts: Vec<String> =
            r.iter().zip(&widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let rule = format!("|{}|\n", widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|"));
    let mut out = render(&cells[0]);
    out.push_str(&rule);
    for r in &cells[1..cells.len() - 1] {
        out.push_str(&render(r));
    }
    out.push_str(&rule);
    out.push_str(&render(cells.last().unwrap()));
    out
}
