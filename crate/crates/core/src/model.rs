//! Domain types shared by every stage of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// 1-based position of an assertion in the traversal sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssertionId(pub usize);

impl AssertionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AssertionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An `assert(...)` statement located by function and logical line.
///
/// The logical line counts the non-assertion statement lines of the function
/// body that precede the assertion, so it does not move when other assertions
/// are inserted or removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub function: String,
    pub logical_line: usize,
    pub predicate: String,
    /// Assigned by the traversal; `None` straight out of the frontend.
    pub id: Option<AssertionId>,
    /// Physical (0-based) line of the assertion in the source it was extracted from.
    pub source_line: usize,
}

impl Assertion {
    /// Identity of the assertion independent of where it sits in the sequence.
    pub fn site(&self) -> AssertionSite {
        AssertionSite { function: self.function.clone(), source_line: self.source_line }
    }
}

/// Locates one assertion statement in one source text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssertionSite {
    pub function: String,
    pub source_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "assumptions", rename_all = "snake_case")]
pub enum VerificationStatus {
    Verified,
    CondVerified(BTreeSet<AssertionId>),
    Falsified,
    Unknown,
}

impl VerificationStatus {
    pub fn label(&self) -> &'static str {
        match self {
            VerificationStatus::Verified => "verified",
            VerificationStatus::CondVerified(_) => "cond_verified",
            VerificationStatus::Falsified => "falsified",
            VerificationStatus::Unknown => "unknown",
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, VerificationStatus::Verified | VerificationStatus::CondVerified(_))
    }
}

/// Assumption sets of verified assertions plus the falsified set.
///
/// Keys map to the assertions each entry was verified under; an empty set is an
/// unconditional verification.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationGraph {
    pub entries: BTreeMap<AssertionId, BTreeSet<AssertionId>>,
    pub falsified: BTreeSet<AssertionId>,
}

impl ImplicationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a verification. Fails if `assumptions` reaches forward in the
    /// sequence or `id` was already falsified.
    pub fn insert(&mut self, id: AssertionId, assumptions: BTreeSet<AssertionId>) -> Result<(), ModelError> {
        if let Some(bad) = assumptions.iter().find(|j| **j >= id) {
            return Err(ModelError::ForwardAssumption { id, assumption: *bad });
        }
        if self.falsified.contains(&id) {
            return Err(ModelError::InconsistentRun(id));
        }
        self.entries.insert(id, assumptions);
        Ok(())
    }

    pub fn mark_falsified(&mut self, id: AssertionId) -> Result<(), ModelError> {
        if self.entries.contains_key(&id) {
            return Err(ModelError::InconsistentRun(id));
        }
        self.falsified.insert(id);
        Ok(())
    }

    pub fn is_verified(&self, id: AssertionId) -> bool {
        self.entries.contains_key(&id)
    }

    /// Checks that every entry only references strictly earlier assertions and
    /// that verified and falsified ids are disjoint.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        for (id, deps) in &self.entries {
            if let Some(bad) = deps.iter().find(|j| **j >= *id) {
                return Err(ModelError::ForwardAssumption { id: *id, assumption: *bad });
            }
            if self.falsified.contains(id) {
                return Err(ModelError::InconsistentRun(*id));
            }
        }
        Ok(())
    }
}

/// Status of `id` given the implication graph and the set of timed-out checks.
pub fn status_of(
    id: AssertionId,
    ig: &ImplicationGraph,
    timeout_set: &BTreeSet<AssertionId>,
) -> Result<VerificationStatus, ModelError> {
    let verified = ig.entries.get(&id);
    let falsified = ig.falsified.contains(&id);
    let unknown = timeout_set.contains(&id);
    match (verified, falsified, unknown) {
        (Some(deps), false, false) if deps.is_empty() => Ok(VerificationStatus::Verified),
        (Some(deps), false, false) => Ok(VerificationStatus::CondVerified(deps.clone())),
        (None, true, false) => Ok(VerificationStatus::Falsified),
        (None, false, true) => Ok(VerificationStatus::Unknown),
        _ => Err(ModelError::InconsistentRun(id)),
    }
}

/// Location of one `assert(...);` statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertLoc {
    /// 0-based physical line.
    pub line: usize,
    /// Bytes of the `assert` keyword.
    pub keyword: Range<usize>,
    /// Bytes of the predicate between the outer parentheses.
    pub predicate: Range<usize>,
}

/// One function definition inside a [`ProgramModel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    /// Byte range of the whole definition, snapped to line boundaries.
    pub extent: Range<usize>,
    /// 0-based physical lines `[first, last]` of the definition.
    pub first_line: usize,
    pub last_line: usize,
    /// Line holding the opening brace of the body.
    pub open_brace_line: usize,
    /// Bytes strictly between the body braces.
    pub body: Range<usize>,
    /// Physical lines carrying body tokens, in order. Assertion lines included.
    pub body_lines: Vec<usize>,
    pub asserts: Vec<AssertLoc>,
}

impl FunctionDef {
    pub fn is_assertion_line(&self, line: usize) -> bool {
        self.asserts.iter().any(|a| a.line == line)
    }

    /// Body lines that are not assertions: the assertion-free skeleton.
    pub fn skeleton_lines(&self) -> impl Iterator<Item = usize> + '_ {
        self.body_lines.iter().copied().filter(move |l| !self.is_assertion_line(*l))
    }

    pub fn skeleton_len(&self) -> usize {
        self.body_lines.len() - self.asserts.len()
    }

    /// Number of skeleton statement lines strictly before physical line `line`.
    pub fn logical_line_of(&self, line: usize) -> usize {
        self.skeleton_lines().take_while(|l| *l < line).count()
    }
}

/// A parsed C program: full source, global code and function extents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramModel {
    pub source: String,
    pub global_code: String,
    pub functions: Vec<FunctionDef>,
    pub unwind_bound: u32,
}

impl ProgramModel {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_names(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.name.as_str()).collect()
    }

    /// Source lines split so that each element keeps its trailing newline.
    pub fn lines(&self) -> Vec<&str> {
        self.source.split_inclusive('\n').collect()
    }

    pub fn with_bound(mut self, k: u32) -> Self {
        self.unwind_bound = k;
        self
    }
}

/// A verified assertion rendered for the developer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiedFact {
    pub assertion: AssertionId,
    pub bound: u32,
    pub text: String,
    pub conditional: bool,
    pub dependency_indices: BTreeSet<AssertionId>,
}

impl VerifiedFact {
    pub fn new(
        assertion: AssertionId,
        bound: u32,
        text: impl Into<String>,
        dependency_indices: BTreeSet<AssertionId>,
    ) -> Self {
        VerifiedFact {
            assertion,
            bound,
            text: text.into(),
            conditional: !dependency_indices.is_empty(),
            dependency_indices,
        }
    }

    /// The comment line body, without indentation or trailing newline.
    pub fn comment(&self) -> String {
        if self.conditional {
            let deps: Vec<String> = self.dependency_indices.iter().map(|d| d.to_string()).collect();
            format!("//FACT[k={}, cond]: {} (depends on: {})", self.bound, self.text, deps.join(", "))
        } else {
            format!("//FACT[k={}]: {}", self.bound, self.text)
        }
    }
}
