//! Property mapping, fact translation and `//FACT` embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::FactError;
use crate::llm::stages::{self, FACT_PREFIX};
use crate::llm::Gateway;
use crate::model::{Assertion, AssertionId, ProgramModel, VerifiedFact};
use crate::traversal::AssertionSequence;
use crate::verifier::{dependency_closure, VerifyRunResult};

/// Assertion → 1-based property index, `None` when unmapped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyMap(pub BTreeMap<AssertionId, Option<usize>>);

impl PropertyMap {
    pub fn unmapped(seq: &AssertionSequence) -> Self {
        PropertyMap(seq.ids().map(|id| (id, None)).collect())
    }

    /// Reads a JSON object such as `{"1": 2, "2": null}`. Assertions missing
    /// from the file and out-of-range indices are unmapped.
    pub fn from_sidecar(path: &Path, seq: &AssertionSequence, property_count: usize) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let raw: BTreeMap<AssertionId, Option<usize>> =
            serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mut map = Self::unmapped(seq);
        for (id, slot) in map.0.iter_mut() {
            *slot = raw.get(id).copied().flatten().filter(|p| (1..=property_count).contains(p));
        }
        Ok(map)
    }

    pub fn get(&self, id: AssertionId) -> Option<usize> {
        self.0.get(&id).copied().flatten()
    }
}

pub fn map_to_properties(gw: &mut Gateway, seq: &AssertionSequence, properties: &[String]) -> PropertyMap {
    match stages::map_properties(gw, seq, properties) {
        Ok(m) => PropertyMap(m),
        Err(e) => {
            log::warn!("property mapping failed, leaving every assertion unmapped: {e}");
            PropertyMap::unmapped(seq)
        }
    }
}

pub fn template_fact(predicate: &str) -> String {
    let p = predicate.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("{FACT_PREFIX}the condition `{p}` holds.")
}

/// Translates through the gateway, or renders the template when there is no
/// gateway or it fails.
pub fn translate_fact(gw: Option<&mut Gateway>, model: &ProgramModel, assertion: &Assertion) -> String {
    let Some(gw) = gw else {
        return template_fact(&assertion.predicate);
    };
    match stages::translate_fact(gw, model, assertion) {
        Ok(s) => s,
        Err(e) => {
            log::warn!(
                "fact translation for assertion {} fell back to the template: {e}",
                assertion.id.map_or(0, |i| i.0)
            );
            template_fact(&assertion.predicate)
        }
    }
}

/// A fact and where it goes in `P0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedFact {
    pub fact: VerifiedFact,
    pub function: String,
    pub logical_line: usize,
    pub indent: String,
}

/// One fact per verified assertion. A fact whose dependency closure is
/// empty rests on nothing unverified and is tagged unconditionally.
pub fn collect_facts(
    model: &ProgramModel,
    seq: &AssertionSequence,
    result: &VerifyRunResult,
    k: u32,
    translate: &mut dyn FnMut(&Assertion) -> String,
) -> Vec<PlacedFact> {
    let attempted = result.attempted();
    let lines = model.lines();
    result
        .ig
        .entries
        .keys()
        .filter_map(|&id| {
            let a = seq.get(id)?;
            let closure = dependency_closure(&result.ig, &attempted, id);
            let indent: String = lines
                .get(a.source_line)
                .map(|l| l.chars().take_while(|c| *c == ' ' || *c == '\t').collect())
                .unwrap_or_default();
            Some(PlacedFact {
                fact: VerifiedFact::new(id, k, translate(a), closure),
                function: a.function.clone(),
                logical_line: a.logical_line,
                indent,
            })
        })
        .collect()
}

/// Inserts one comment line per fact into `p0`. Facts at the same position
/// keep their order in `facts`. Facts in functions that `p0` lacks (helpers
/// added during annotation) are skipped with a warning.
pub fn embed_facts(p0: &ProgramModel, facts: &[PlacedFact]) -> Result<String, FactError> {
    let mut after_line: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for pf in facts {
        let Some(f) = p0.function(&pf.function) else {
            log::warn!(
                "assertion {} is in `{}`, which the original program does not define; no fact emitted",
                pf.fact.assertion,
                pf.function
            );
            continue;
        };
        let skeleton: Vec<usize> = f.skeleton_lines().collect();
        if pf.logical_line > skeleton.len() {
            return Err(FactError::PositionOutOfRange {
                id: pf.fact.assertion,
                function: pf.function.clone(),
                line: pf.logical_line,
                len: skeleton.len(),
            });
        }
        let anchor = match pf.logical_line {
            0 => f.open_brace_line,
            l => skeleton[l - 1],
        };
        // Never below the closing brace, even when it shares a line with code.
        let anchor = if anchor >= f.last_line { f.last_line.saturating_sub(1) } else { anchor };
        let text = pf.fact.text.split_whitespace().collect::<Vec<_>>().join(" ");
        let fact = VerifiedFact { text, ..pf.fact.clone() };
        after_line.entry(anchor).or_default().push(format!("{}{}\n", pf.indent, fact.comment()));
    }
    let mut out = String::with_capacity(p0.source.len() + 128 * facts.len());
    for (i, line) in p0.lines().into_iter().enumerate() {
        out.push_str(line);
        if let Some(ins) = after_line.get(&i) {
            if !line.ends_with('\n') {
                out.push('\n');
            }
            ins.iter().for_each(|c| out.push_str(c));
        }
    }
    Ok(out)
}

pub fn is_fact_line(line: &str) -> bool {
    line.trim_start().starts_with("//FACT[")
}

pub fn strip_facts(text: &str) -> String {
    text.split_inclusive('\n').filter(|l| !is_fact_line(l)).collect()
}

/// Facts whose closure is non-empty must list exactly that closure.
pub fn check_fact_closures(facts: &[PlacedFact], result: &VerifyRunResult) -> Vec<AssertionId> {
    let attempted = result.attempted();
    facts
        .iter()
        .filter(|pf| {
            let c: BTreeSet<AssertionId> = dependency_closure(&result.ig, &attempted, pf.fact.assertion);
            c != pf.fact.dependency_indices || pf.fact.conditional == c.is_empty()
        })
        .map(|pf| pf.fact.assertion)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{load_program, parse_program, strip_assertions};

    fn fact(id: usize, text: &str, deps: &[usize], function: &str, l: usize) -> PlacedFact {
        PlacedFact {
            fact: VerifiedFact::new(AssertionId(id), 5, text, deps.iter().copied().map(AssertionId).collect()),
            function: function.into(),
            logical_line: l,
            indent: "    ".into(),
        }
    }

    const P0: &str = "int f(int x) {\n    x++;\n    return x;\n}\n\nint main(void) {\n    return f(1);\n}\n";

    #[test]
    fn embedding_round_trips() {
        let p0 = parse_program(P0).unwrap();
        let facts = vec![
            fact(1, "At this point in the program, x is any int.", &[], "f", 0),
            fact(2, "At this point in the program, x is\n  positive.", &[1, 3], "f", 1),
            fact(3, "At this point in the program, second.", &[], "f", 1),
            fact(4, "At this point in the program, end.", &[], "main", 1),
        ];
        let out = embed_facts(&p0, &facts).unwrap();
        assert_eq!(
            out,
            "int f(int x) {\n    //FACT[k=5]: At this point in the program, x is any int.\n    x++;\n    //FACT[k=5, cond]: At this point in the program, x is positive. (depends on: 1, 3)\n    //FACT[k=5]: At this point in the program, second.\n    return x;\n}\n\nint main(void) {\n    return f(1);\n    //FACT[k=5]: At this point in the program, end.\n}\n"
        );
        assert_eq!(strip_facts(&out), P0);
        assert_eq!(embed_facts(&p0, &[]).unwrap(), P0);
    }

    #[test]
    fn out_of_range_and_helpers() {
        let p0 = parse_program(P0).unwrap();
        assert!(matches!(
            embed_facts(&p0, &[fact(1, "t", &[], "f", 3)]),
            Err(FactError::PositionOutOfRange { len: 2, .. })
        ));
        assert_eq!(embed_facts(&p0, &[fact(1, "t", &[], "helper", 0)]).unwrap(), P0);
    }

    #[test]
    fn facts_land_where_assertions_were() {
        let plus = "#include <assert.h>\nint f(int x) {\n    assert(x > 0);\n    if (x > 3) {\n        assert(x > 3);\n        x = 3;\n    }\n    return x;\n}\n";
        let m = load_program(plus).unwrap();
        let p0 = parse_program(&strip_assertions(&m)).unwrap();
        let seq = AssertionSequence::from_ordered(crate::frontend::extract_assertions(&m));
        let mut result = VerifyRunResult::default();
        result.ig.insert(AssertionId(1), BTreeSet::new()).unwrap();
        result.ig.insert(AssertionId(2), [AssertionId(1)].into()).unwrap();
        let facts = collect_facts(&m, &seq, &result, 5, &mut |a| template_fact(&a.predicate));
        assert!(check_fact_closures(&facts, &result).is_empty());
        let out = embed_facts(&p0, &facts).unwrap();
        assert_eq!(
            out,
            "#include <assert.h>\nint f(int x) {\n    //FACT[k=5]: At this point in the program, the condition `x > 0` holds.\n    if (x > 3) {\n        //FACT[k=5]: At this point in the program, the condition `x > 3` holds.\n        x = 3;\n    }\n    return x;\n}\n"
        );
        assert_eq!(strip_facts(&out), p0.source);
    }

    #[test]
    fn sidecar_mapping() {
        let src = "#include <assert.h>\nint main(void) {\n    assert(1 > 0);\n    assert(2 > 0);\n    assert(3 > 0);\n    return 0;\n}\n";
        let m = load_program(src).unwrap();
        let seq = AssertionSequence::from_ordered(crate::frontend::extract_assertions(&m));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("map.json");
        std::fs::write(&p, r#"{"1": 2, "2": 9}"#).unwrap();
        let map = PropertyMap::from_sidecar(&p, &seq, 2).unwrap();
        assert_eq!(map.get(AssertionId(1)), Some(2));
        assert_eq!(map.get(AssertionId(2)), None);
        assert_eq!(map.0.len(), 3);
        assert_eq!(serde_json::to_string(&map).unwrap(), r#"{"1":2,"2":null,"3":null}"#);
    }
}
