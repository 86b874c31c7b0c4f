//! Orders assertions so that every callee's assertions come before the
//! caller's assertions that follow the call.

use std::collections::{BTreeSet, HashMap};

use crate::error::TraversalError;
use crate::frontend::{extract_assertions, CallGraph};
use crate::model::{Assertion, AssertionId, ProgramModel};

/// Assertions numbered `1..=m` in verification order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionSequence {
    pub assertions: Vec<Assertion>,
}

impl AssertionSequence {
    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn get(&self, id: AssertionId) -> Option<&Assertion> {
        id.0.checked_sub(1).and_then(|i| self.assertions.get(i))
    }

    pub fn ids(&self) -> impl Iterator<Item = AssertionId> + '_ {
        (1..=self.assertions.len()).map(AssertionId)
    }

    /// Wraps already-ordered assertions, assigning ids by position.
    pub fn from_ordered(assertions: Vec<Assertion>) -> Self {
        let assertions = assertions
            .into_iter()
            .enumerate()
            .map(|(i, mut a)| {
                a.id = Some(AssertionId(i + 1));
                a
            })
            .collect();
        AssertionSequence { assertions }
    }
}

struct Walker<'a> {
    cg: &'a CallGraph,
    by_function: HashMap<&'a str, Vec<Assertion>>,
    visited: BTreeSet<String>,
    out: Vec<Assertion>,
}

impl Walker<'_> {
    fn visit(&mut self, f: &str) {
        if !self.visited.insert(f.to_string()) {
            return;
        }
        let mut own = self.by_function.remove(f).unwrap_or_default();
        // Stable: equal logical lines keep document order.
        own.sort_by_key(|a| a.logical_line);
        let mut own = own.into_iter().peekable();
        let calls: Vec<(String, usize)> = self.cg.callees_of(f).map(|e| (e.callee.clone(), e.call_site_line)).collect();
        let mut calls = calls;
        // Stable: ties keep call-site textual order.
        calls.sort_by_key(|(_, line)| *line);
        for (callee, line) in calls {
            while let Some(a) = own.next_if(|a| a.logical_line < line) {
                self.out.push(a);
            }
            self.visit(&callee);
        }
        self.out.extend(own);
    }
}

/// Depth-first traversal of the call graph from `main`.
///
/// A callee's block is inserted before the caller's first assertion at or past
/// the call site, at the first call site only. Functions already visited
/// (including those on the current path) are skipped. Functions unreachable
/// from `main` follow, in declaration order.
pub fn cg_traversal(model: &ProgramModel, cg: &CallGraph) -> Result<AssertionSequence, TraversalError> {
    if !cg.contains("main") {
        return Err(TraversalError::NoMain);
    }
    let mut by_function: HashMap<&str, Vec<Assertion>> = HashMap::new();
    for a in extract_assertions(model) {
        let name = model
            .functions
            .iter()
            .find(|f| f.name == a.function)
            .map(|f| f.name.as_str())
            .expect("assertion belongs to an extracted function");
        by_function.entry(name).or_default().push(a);
    }
    let mut walker = Walker { cg, by_function, visited: BTreeSet::new(), out: Vec::new() };
    walker.visit("main");
    for f in &model.functions {
        walker.visit(&f.name);
    }
    Ok(AssertionSequence::from_ordered(walker.out))
}

/// Every violated ordering constraint as `(edge index, callee assertion, caller assertion)`.
/// Empty on a correctly ordered sequence of an acyclic program.
pub fn ordering_violations(seq: &AssertionSequence, cg: &CallGraph) -> Vec<(usize, usize, usize)> {
    let mut bad = Vec::new();
    for (e, edge) in cg.edges.iter().enumerate() {
        for (gi, g) in seq.assertions.iter().enumerate() {
            if g.function != edge.callee {
                continue;
            }
            for (fi, fa) in seq.assertions.iter().enumerate() {
                if fa.function == edge.caller && fa.logical_line >= edge.call_site_line && fi < gi {
                    bad.push((e, gi + 1, fi + 1));
                }
            }
        }
    }
    bad
}
