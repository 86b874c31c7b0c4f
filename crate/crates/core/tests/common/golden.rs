//! Golden `//FACT` embedding cases under `tests/fixtures/golden/<case>/`.
//!
//! Each case has `pplus.c`, an `outcome.toml` describing verification
//! results, and the expected `p0.c` and `expected.c`. Set `UPDATE_GOLDEN=1`
//! to rewrite the expected files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use cofact_core::facts::{self, collect_facts, embed_facts, strip_facts, template_fact};
use cofact_core::frontend::{build_call_graph, load_program, parse_program, strip_assertions};
use cofact_core::model::AssertionId;
use cofact_core::traversal::cg_traversal;
use cofact_core::verifier::VerifyRunResult;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Outcome {
    k: u32,
    /// Verified assertion id -> its assumption set.
    #[serde(default)]
    verified: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    falsified: Vec<usize>,
    #[serde(default)]
    unknown: Vec<usize>,
    /// Fact sentences; missing ids use the template.
    #[serde(default)]
    facts: BTreeMap<String, String>,
}

fn ids(v: &[usize]) -> BTreeSet<AssertionId> {
    v.iter().copied().map(AssertionId).collect()
}

pub fn cases() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(super::fixtures().join("golden"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.join("pplus.c").exists())
        .collect();
    v.sort();
    v
}

pub struct Rendered {
    pub p0: String,
    pub annotated: String,
    pub conditional: usize,
    pub unconditional: usize,
}

pub fn render(case: &Path) -> Rendered {
    let pplus = load_program(&super::read(&case.join("pplus.c"))).unwrap();
    let o: Outcome = toml::from_str(&super::read(&case.join("outcome.toml"))).unwrap();
    let seq = cg_traversal(&pplus, &build_call_graph(&pplus)).unwrap();
    let mut result = VerifyRunResult::default();
    let mut order: Vec<(usize, Vec<usize>)> = o.verified.iter().map(|(k, v)| (k.parse().unwrap(), v.clone())).collect();
    order.sort();
    for (id, deps) in order {
        result.ig.insert(AssertionId(id), ids(&deps)).unwrap();
    }
    for &f in &o.falsified {
        result.ig.mark_falsified(AssertionId(f)).unwrap();
    }
    result.unknown = ids(&o.unknown);
    assert_eq!(result.attempted().len(), seq.len(), "{}: every assertion needs an outcome", case.display());

    let p0 = parse_program(&strip_assertions(&pplus)).unwrap();
    let placed = collect_facts(&pplus, &seq, &result, o.k, &mut |a| {
        let id = a.id.unwrap().0.to_string();
        o.facts.get(&id).cloned().unwrap_or_else(|| template_fact(&a.predicate))
    });
    assert!(facts::check_fact_closures(&placed, &result).is_empty());
    let annotated = embed_facts(&p0, &placed).unwrap();
    let conditional = placed.iter().filter(|p| p.fact.conditional).count();
    Rendered { p0: p0.source, annotated, unconditional: placed.len() - conditional, conditional }
}

/// Compares a case against its expected files; returns the mismatches.
pub fn check(case: &Path) -> Vec<String> {
    let r = render(case);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(case.join("p0.c"), &r.p0).unwrap();
        std::fs::write(case.join("expected.c"), &r.annotated).unwrap();
    }
    let mut bad = Vec::new();
    let name = case.file_name().unwrap().to_string_lossy();
    if r.p0 != super::read(&case.join("p0.c")) {
        bad.push(format!("{name}: p0.c differs"));
    }
    let expected = super::read(&case.join("expected.c"));
    if r.annotated != expected {
        bad.push(format!("{name}: expected.c differs"));
    }
    if strip_facts(&expected) != r.p0 {
        bad.push(format!("{name}: stripping facts does not give p0.c"));
    }
    bad
}
