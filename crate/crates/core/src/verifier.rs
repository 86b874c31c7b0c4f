//! VerifyAll: checks each assertion standalone, then under all preceding
//! assertions as assumptions, and records the implication graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{SolverError, VerifyError};
use crate::frontend::render::DIALECTS;
use crate::frontend::{render_with_roles, AssertionRole};
use crate::model::{status_of, AssertionId, ImplicationGraph, ProgramModel, VerificationStatus};
use crate::portfolio::{run_portfolio, Outcome, Query, SolverConfig, Verdict};
use crate::traversal::AssertionSequence;

/// One verification query: the target kept as an assert, `assumptions`
/// converted to assumes, everything else dropped.
#[derive(Debug, Clone)]
pub struct CheckQuery {
    pub target: AssertionId,
    pub assumptions: BTreeSet<AssertionId>,
    pub query: Query,
    pub bound: u32,
}

/// Decides one query. The portfolio in production, mocks in tests.
pub trait Checker {
    fn check(&mut self, q: &CheckQuery) -> Result<Verdict, SolverError>;
}

pub struct PortfolioChecker {
    pub configs: Vec<SolverConfig>,
    pub timeout: Duration,
}

impl Checker for PortfolioChecker {
    fn check(&mut self, q: &CheckQuery) -> Result<Verdict, SolverError> {
        run_portfolio(&self.configs, &q.query, q.bound, self.timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Standalone,
    Compositional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub assertion: AssertionId,
    pub kind: CheckKind,
    pub assumptions: BTreeSet<AssertionId>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyRunResult {
    /// Verified entries and the falsified set.
    pub ig: ImplicationGraph,
    pub unknown: BTreeSet<AssertionId>,
    pub log: Vec<CheckRecord>,
}

impl VerifyRunResult {
    pub fn falsified(&self) -> &BTreeSet<AssertionId> {
        &self.ig.falsified
    }

    pub fn attempted(&self) -> BTreeSet<AssertionId> {
        self.ig.entries.keys().chain(&self.ig.falsified).chain(&self.unknown).copied().collect()
    }

    pub fn status(&self, id: AssertionId) -> Option<VerificationStatus> {
        status_of(id, &self.ig, &self.unknown).ok()
    }

    /// Transcripts of the checks that decided `id`, in issue order.
    pub fn records_for(&self, id: AssertionId) -> impl Iterator<Item = &CheckRecord> {
        self.log.iter().filter(move |r| r.assertion == id)
    }
}

/// A run that stopped early; `partial` holds every check completed before
/// the error.
#[derive(Debug, thiserror::Error)]
#[error("verification aborted at assertion {at}: {source}")]
pub struct VerifyAbort {
    pub at: AssertionId,
    pub partial: Box<VerifyRunResult>,
    #[source]
    pub source: VerifyError,
}

/// Renders the query for every registered dialect.
pub fn render_query(
    model: &ProgramModel,
    seq: &AssertionSequence,
    target: AssertionId,
    assumptions: &BTreeSet<AssertionId>,
) -> Result<Query, VerifyError> {
    let mut roles = crate::frontend::uniform_roles(model, AssertionRole::Drop);
    for a in &seq.assertions {
        let id = a.id.ok_or(VerifyError::UnnumberedAssertion)?;
        let role = if id == target {
            AssertionRole::KeepAsAssert
        } else if assumptions.contains(&id) {
            AssertionRole::ConvertToAssume
        } else {
            AssertionRole::Drop
        };
        roles.insert(a.site(), role);
    }
    let mut sources = BTreeMap::new();
    for d in DIALECTS {
        sources.insert(d.id.to_string(), render_with_roles(model, &roles, d.id)?);
    }
    Ok(Query { sources })
}

/// Runs Algorithm 2 over `seq` in order.
pub fn verify_all(
    model: &ProgramModel,
    seq: &AssertionSequence,
    k: u32,
    checker: &mut dyn Checker,
) -> Result<VerifyRunResult, VerifyAbort> {
    let mut result = VerifyRunResult::default();
    for a in &seq.assertions {
        let Some(id) = a.id else {
            return Err(VerifyAbort {
                at: AssertionId(0),
                partial: Box::new(result),
                source: VerifyError::UnnumberedAssertion,
            });
        };
        if let Err(source) = verify_one(model, seq, k, checker, id, &mut result) {
            return Err(VerifyAbort { at: id, partial: Box::new(result), source });
        }
    }
    Ok(result)
}

fn verify_one(
    model: &ProgramModel,
    seq: &AssertionSequence,
    k: u32,
    checker: &mut dyn Checker,
    id: AssertionId,
    result: &mut VerifyRunResult,
) -> Result<(), VerifyError> {
    let none = BTreeSet::new();
    let q = CheckQuery { target: id, assumptions: none.clone(), query: render_query(model, seq, id, &none)?, bound: k };
    let verdict = checker.check(&q)?;
    let outcome = verdict.outcome;
    result.log.push(CheckRecord { assertion: id, kind: CheckKind::Standalone, assumptions: none, verdict });
    if outcome == Outcome::Verified {
        result.ig.insert(id, BTreeSet::new())?;
        return Ok(());
    }

    let s: BTreeSet<AssertionId> = (1..id.0).map(AssertionId).collect();
    let q = CheckQuery { target: id, assumptions: s.clone(), query: render_query(model, seq, id, &s)?, bound: k };
    let verdict = checker.check(&q)?;
    let outcome = verdict.outcome;
    result.log.push(CheckRecord { assertion: id, kind: CheckKind::Compositional, assumptions: s.clone(), verdict });
    match outcome {
        Outcome::Verified => result.ig.insert(id, s)?,
        Outcome::Falsified => result.ig.mark_falsified(id)?,
        Outcome::Unknown => {
            result.unknown.insert(id);
        }
    }
    Ok(())
}

/// The unverified assertions `i` ultimately rests on.
///
/// An unverified member contributes itself, an unconditional one nothing, and
/// a conditional one the closure of its own assumptions.
pub fn dependency_closure(
    ig: &ImplicationGraph,
    attempted: &BTreeSet<AssertionId>,
    i: AssertionId,
) -> BTreeSet<AssertionId> {
    debug_assert!(attempted.contains(&i), "closure of an assertion that was never attempted");
    let mut memo = HashMap::new();
    closure_rec(ig, i, &mut memo)
}

fn closure_rec(
    ig: &ImplicationGraph,
    j: AssertionId,
    memo: &mut HashMap<AssertionId, BTreeSet<AssertionId>>,
) -> BTreeSet<AssertionId> {
    if let Some(c) = memo.get(&j) {
        return c.clone();
    }
    let c = match ig.entries.get(&j) {
        None => BTreeSet::from([j]),
        Some(deps) => {
            let mut acc = BTreeSet::new();
            for d in deps {
                // Entries only point backwards, so this terminates.
                acc.extend(closure_rec(ig, *d, memo));
            }
            acc
        }
    };
    memo.insert(j, c.clone());
    c
}

pub mod micro {
    //! A declarative stand-in for a program: a finite set of executions, each
    //! a truth table over the assertions. Used to check the soundness theorems
    //! exhaustively.

    use super::*;
    use crate::frontend::parse_program;

    #[derive(Debug, Clone)]
    pub struct MicroModel {
        /// `executions[e][i]` is whether assertion `i + 1` holds on execution `e`.
        pub executions: Vec<Vec<bool>>,
        /// Checks on these targets report Unknown, like a solver timeout.
        pub timeouts: BTreeSet<AssertionId>,
    }

    impl MicroModel {
        pub fn assertion_count(&self) -> usize {
            self.executions.first().map_or(0, Vec::len)
        }

        /// Executions on which every assertion in `s` holds.
        pub fn satisfying<'a>(&'a self, s: &'a BTreeSet<AssertionId>) -> impl Iterator<Item = &'a Vec<bool>> + 'a {
            self.executions.iter().filter(move |e| s.iter().all(|j| e[j.0 - 1]))
        }

        pub fn holds_under(&self, i: AssertionId, s: &BTreeSet<AssertionId>) -> bool {
            self.satisfying(s).all(|e| e[i.0 - 1])
        }

        /// A straight-line C program with one assertion per modeled assertion,
        /// so the real rendering path runs too.
        pub fn program(&self) -> (ProgramModel, AssertionSequence) {
            let mut src = String::from("int main(void) {\n    int c = 0;\n");
            for i in 1..=self.assertion_count() {
                src.push_str(&format!("    assert(c < {i});\n"));
            }
            src.push_str("    return c;\n}\n");
            let model = parse_program(&src).expect("generated program parses");
            let seq = AssertionSequence::from_ordered(crate::frontend::extract_assertions(&model));
            (model, seq)
        }
    }

    /// Sound and complete over the modeled executions, except for timeouts.
    pub struct MicroChecker<'a> {
        pub model: &'a MicroModel,
        pub calls: usize,
    }

    impl Checker for MicroChecker<'_> {
        fn check(&mut self, q: &CheckQuery) -> Result<Verdict, SolverError> {
            self.calls += 1;
            let outcome = if self.model.timeouts.contains(&q.target) {
                Outcome::Unknown
            } else if self.model.holds_under(q.target, &q.assumptions) {
                Outcome::Verified
            } else {
                Outcome::Falsified
            };
            Ok(Verdict {
                outcome,
                winning_solver: outcome.is_definitive().then(|| "micro".to_string()),
                elapsed: 0.0,
                counterexample_text: (outcome == Outcome::Falsified).then(|| "modeled execution".to_string()),
                transcripts: Vec::new(),
            })
        }
    }
}
