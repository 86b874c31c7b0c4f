//! The prompting stages of the pipeline and the checks that gate their output.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use super::prompts::{self, fill, numbered};
use super::{Gateway, Stage};
use crate::error::{FrontendError, SolverError, StageError};
use crate::frontend::lexer::{lex, TokenKind};
use crate::frontend::{
    compile_check_with, load_program, render_with_roles, strip_assertions, uniform_roles, AssertionRole, CompilerConfig,
};
use crate::model::{Assertion, AssertionId, ProgramModel};
use crate::portfolio::{run_portfolio, Outcome, Query, SolverConfig, Verdict};
use crate::traversal::AssertionSequence;

pub const DEFAULT_MAX_RETRIES: u32 = 3;
pub const FACT_PREFIX: &str = "At this point in the program, ";

#[derive(Debug, Clone)]
pub struct StageOptions {
    /// Extra attempts after the first.
    pub max_retries: u32,
    pub compiler: CompilerConfig,
    pub bound: u32,
}

impl Default for StageOptions {
    fn default() -> Self {
        StageOptions {
            max_retries: DEFAULT_MAX_RETRIES,
            compiler: CompilerConfig::default(),
            bound: crate::frontend::DEFAULT_BOUND,
        }
    }
}

fn parse_err(stage: Stage, message: impl Into<String>, response: &str) -> StageError {
    StageError::Gateway(crate::error::GatewayError::Parse {
        stage: stage.to_string(),
        message: message.into(),
        response: response.to_string(),
    })
}

/// Splits a `1. ... 2. ...` answer into items. Continuation lines and
/// indented sub-items are folded into the item they follow.
pub fn parse_numbered_list(response: &str) -> Result<Vec<String>, String> {
    let mut items: Vec<String> = Vec::new();
    let mut top_indent = None;
    for line in response.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let numbered = split_number(trimmed);
        match numbered {
            Some((n, text)) if top_indent.is_none_or(|t| indent <= t) => {
                if n != items.len() + 1 {
                    return Err(format!("expected item {} but found item {n}", items.len() + 1));
                }
                top_indent = Some(indent);
                items.push(text.to_string());
            }
            _ => match items.last_mut() {
                Some(last) => {
                    let text = trimmed.trim_start_matches(['-', '*', '•']).trim();
                    last.push(' ');
                    last.push_str(text);
                }
                // Preamble before the list.
                None => continue,
            },
        }
    }
    if items.is_empty() {
        return Err("no numbered items found".into());
    }
    Ok(items)
}

fn split_number(line: &str) -> Option<(usize, &str)> {
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    Some((line[..digits].parse().ok()?, rest.trim()))
}

/// The first fenced code block, preferring one tagged `c`.
pub fn extract_code_block(response: &str) -> Option<String> {
    let mut blocks = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in response.lines() {
        let t = line.trim_start();
        match current.take() {
            None => {
                if let Some(tag) = t.strip_prefix("```") {
                    current = Some((tag.trim().to_lowercase(), Vec::new()));
                }
            }
            Some((tag, mut body)) => {
                if t.starts_with("```") {
                    blocks.push((tag, body));
                } else {
                    body.push(line);
                    current = Some((tag, body));
                }
            }
        }
    }
    let pick = blocks.iter().find(|(tag, _)| tag == "c").or_else(|| blocks.iter().find(|(tag, _)| tag.is_empty()))?;
    let mut code = pick.1.join("\n");
    code.push('\n');
    Some(code)
}

pub fn elicit_properties(gw: &mut Gateway, description: &str) -> Result<Vec<String>, StageError> {
    if description.trim().is_empty() {
        return Err(StageError::EmptyDescription);
    }
    let prompt = fill(prompts::ELICIT, &[("description", description.trim())]);
    let req = gw.request(Stage::Elicit, "elicit", prompt);
    let response = gw.complete(&req)?;
    parse_numbered_list(&response).map_err(|m| parse_err(Stage::Elicit, m, &response))
}

/// Compiles and parses candidate code; the error text is what gets fed back.
fn accept_program(code: &str, opts: &StageOptions) -> Result<ProgramModel, Vec<String>> {
    let diag = compile_check_with(&opts.compiler, code).map_err(|e| vec![e.to_string()])?;
    if !diag.success {
        return Err(diag.messages);
    }
    load_program(code).map(|m| m.with_bound(opts.bound)).map_err(|e| vec![e.to_string()])
}

fn retry_prompt(base: &str, problem: &str, previous: &str) -> String {
    let mut p = base.to_string();
    p.push_str(&fill(prompts::RETRY, &[("problem", problem), ("previous", previous.trim_end())]));
    p
}

/// Generates `P0`, re-prompting with compiler diagnostics until it compiles.
pub fn synthesize(gw: &mut Gateway, description: &str, opts: &StageOptions) -> Result<ProgramModel, StageError> {
    if description.trim().is_empty() {
        return Err(StageError::EmptyDescription);
    }
    let base = fill(prompts::SYNTHESIZE, &[("description", description.trim())]);
    let mut prompt = base.clone();
    let attempts = opts.max_retries + 1;
    let mut diagnostics = Vec::new();
    for _ in 0..attempts {
        let req = gw.request(Stage::Synthesize, "synthesize", prompt.clone());
        let response = gw.complete(&req)?;
        let code = extract_code_block(&response)
            .ok_or_else(|| parse_err(Stage::Synthesize, "no fenced C code block in response", &response))?;
        match accept_program(&code, opts) {
            Ok(m) => return Ok(m),
            Err(d) => {
                diagnostics = d;
                prompt =
                    retry_prompt(&base, &format!("The program does not compile:\n{}", diagnostics.join("\n")), &code);
            }
        }
    }
    Err(StageError::Synthesis { attempts, diagnostics })
}

type Lines = Vec<Vec<String>>;

/// Token texts per non-empty physical line in `range`, skipping the given lines.
fn token_lines(src: &str, range: std::ops::Range<usize>, skip: &dyn Fn(usize) -> bool) -> Result<Lines, FrontendError> {
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for t in lex(src)?.tokens {
        if t.span.start >= range.start && t.span.end <= range.end && !skip(t.line) {
            out.entry(t.line).or_default().push(t.text(src).to_string());
        }
    }
    Ok(out.into_values().collect())
}

/// Global declarations and directives, minus `#include` lines and
/// declarations that mention any of `ignore` (helper prototypes).
fn global_items(model: &ProgramModel, ignore: &BTreeSet<&str>) -> Result<Vec<Vec<String>>, FrontendError> {
    let src = &model.source;
    let lexed = lex(src)?;
    let inside = |pos: usize| model.functions.iter().any(|f| f.extent.contains(&pos));
    let mut items = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut depth = 0i32;
    for t in lexed.tokens.iter().filter(|t| !inside(t.span.start)) {
        let text = t.text(src);
        current.push(text.to_string());
        if t.kind == TokenKind::Punct {
            match text {
                "{" | "(" | "[" => depth += 1,
                "}" | ")" | "]" => depth -= 1,
                ";" if depth == 0 => items.push(std::mem::take(&mut current)),
                _ => {}
            }
        }
    }
    if !current.is_empty() {
        items.push(current);
    }
    items.retain(|item| !item.iter().any(|tok| ignore.contains(tok.as_str())));
    for d in lexed.directives.iter().filter(|d| !inside(d.span.start)) {
        let text: Vec<String> = src[d.span.clone()].split_whitespace().map(str::to_string).collect();
        let is_include =
            text.first().is_some_and(|w| w == "#include" || (w == "#" && text.get(1).is_some_and(|x| x == "include")));
        if !is_include {
            items.push(text);
        }
    }
    Ok(items)
}

/// Every way `after` differs from `before` other than inserted assertions,
/// inserted helper functions and added includes. Empty when the skeleton is
/// preserved.
pub fn skeleton_drift(before: &ProgramModel, after: &ProgramModel) -> Result<Vec<String>, FrontendError> {
    let mut drift = Vec::new();
    let before_names: BTreeSet<&str> = before.functions.iter().map(|f| f.name.as_str()).collect();
    let helpers: BTreeSet<&str> =
        after.functions.iter().map(|f| f.name.as_str()).filter(|n| !before_names.contains(n)).collect();
    for f in &before.functions {
        let Some(g) = after.function(&f.name) else {
            drift.push(format!("function `{}` was removed", f.name));
            continue;
        };
        let a = token_lines(&before.source, f.extent.clone(), &|l| f.is_assertion_line(l))?;
        let b = token_lines(&after.source, g.extent.clone(), &|l| g.is_assertion_line(l))?;
        if a != b {
            let at = a.iter().zip(&b).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()));
            let show = |v: &Lines| v.get(at).map_or("<end of function>".to_string(), |l| l.join(" "));
            drift.push(format!(
                "function `{}` changed outside assertions at statement line {}: `{}` became `{}`",
                f.name,
                at + 1,
                show(&a),
                show(&b)
            ));
        }
    }
    let no_ignore = BTreeSet::new();
    if global_items(before, &no_ignore)? != global_items(after, &helpers)? {
        drift.push("global code (declarations, macros or types) changed".into());
    }
    Ok(drift)
}

/// Inserts assertions expressing `properties` into `program`.
pub fn annotate(
    gw: &mut Gateway,
    description: &str,
    program: &ProgramModel,
    properties: &[String],
    opts: &StageOptions,
) -> Result<ProgramModel, StageError> {
    if properties.is_empty() {
        return Ok(program.clone());
    }
    let props = numbered(properties);
    let base = fill(
        prompts::ANNOTATE,
        &[("description", description.trim()), ("program", &program.source), ("properties", &props)],
    );
    let mut prompt = base.clone();
    let attempts = opts.max_retries + 1;
    let mut reason = String::new();
    for _ in 0..attempts {
        let req = gw.request(Stage::Annotate, "annotate", prompt.clone());
        let response = gw.complete(&req)?;
        let Some(code) = extract_code_block(&response) else {
            reason = "no fenced C code block in response".into();
            prompt = retry_prompt(&base, &reason, &response);
            continue;
        };
        let problem = match accept_program(&code, opts) {
            Err(d) => format!("The program does not compile or parse:\n{}", d.join("\n")),
            Ok(m) => {
                let drift = skeleton_drift(program, &m)?;
                if drift.is_empty() {
                    return Ok(m);
                }
                format!("Code other than assertions was changed:\n{}", drift.join("\n"))
            }
        };
        reason = problem;
        prompt = retry_prompt(&base, &reason, &code);
    }
    Err(StageError::Annotation { attempts, reason })
}

/// Fails unless `after` equals `before` token for token and line for line,
/// except for numeric literals (including those in directives).
pub fn constants_only_diff(before: &str, after: &str) -> Result<(), String> {
    let a = tokens_with_directives(before)?;
    let b = tokens_with_directives(after)?;
    if a.len() != b.len() {
        return Err(format!("token count changed from {} to {}", a.len(), b.len()));
    }
    for (x, y) in a.iter().zip(&b) {
        let same = x.0 == y.0 && (x.2 == y.2 || (x.1 == TokenKind::Number && y.1 == TokenKind::Number));
        if !same {
            return Err(format!("line {}: `{}` changed to `{}` on line {}", x.0 + 1, x.2, y.2, y.0 + 1));
        }
    }
    Ok(())
}

fn tokens_with_directives(src: &str) -> Result<Vec<(usize, TokenKind, String)>, String> {
    let lexed = lex(src).map_err(|e| e.to_string())?;
    let mut out: Vec<(usize, TokenKind, String)> =
        lexed.tokens.iter().map(|t| (t.line, t.kind, t.text(src).to_string())).collect();
    for d in &lexed.directives {
        let body = &src[d.span.clone()];
        let inner = lex(body.trim_start().trim_start_matches('#')).map_err(|e| e.to_string())?;
        let inner_src = body.trim_start().trim_start_matches('#');
        out.push((d.first_line, TokenKind::Punct, "#".into()));
        out.extend(inner.tokens.iter().map(|t| (d.first_line + t.line, t.kind, t.text(inner_src).to_string())));
    }
    out.sort_by_key(|(l, _, _)| *l);
    Ok(out)
}

/// Checks only the unwinding assertions: every `assert` is dropped and the
/// portfolio runs with unwinding assertions forced on.
pub fn unwinding_check(
    model: &ProgramModel,
    k: u32,
    configs: &[SolverConfig],
    timeout: Duration,
) -> Result<Verdict, SolverError> {
    let configs: Vec<SolverConfig> = configs
        .iter()
        .cloned()
        .map(|mut c| {
            c.unwinding_assertions = true;
            c
        })
        .collect();
    run_portfolio(&configs, &Query::uniform(strip_assertions(model)), k, timeout)
}

/// Tightens loop-bound constants to `k`. `validate` decides whether a
/// candidate's loops stay within the bound.
pub fn bound_reduce(
    gw: &mut Gateway,
    program: &ProgramModel,
    k: u32,
    opts: &StageOptions,
    validate: &mut dyn FnMut(&ProgramModel) -> Result<Verdict, SolverError>,
) -> Result<ProgramModel, StageError> {
    let first = validate(program)?;
    if first.outcome == Outcome::Verified {
        return Ok(program.clone().with_bound(k));
    }
    let base = fill(prompts::BOUND_REDUCE, &[("k", &k.to_string()), ("program", &program.source)]);
    let mut prompt = base.clone();
    let attempts = opts.max_retries + 1;
    let mut reason = String::new();
    for _ in 0..attempts {
        let req = gw.request(Stage::BoundReduce, "bound_reduce", prompt.clone());
        let response = gw.complete(&req)?;
        let Some(code) = extract_code_block(&response) else {
            reason = "no fenced C code block in response".into();
            prompt = retry_prompt(&base, &reason, &response);
            continue;
        };
        let problem = if let Err(d) = constants_only_diff(&program.source, &code) {
            format!("Only numeric constants may change: {d}")
        } else {
            match accept_program(&code, opts) {
                Err(d) => format!("The program does not compile or parse:\n{}", d.join("\n")),
                Ok(m) => {
                    let v = validate(&m)?;
                    match v.outcome {
                        Outcome::Verified => return Ok(m.with_bound(k)),
                        Outcome::Unknown => {
                            log::warn!(
                                "loop bounds of the reduced program could not be confirmed within the time budget"
                            );
                            return Ok(m.with_bound(k));
                        }
                        Outcome::Falsified => format!(
                            "Some loop can still iterate more than {k} times:\n{}",
                            v.counterexample_text.unwrap_or_default()
                        ),
                    }
                }
            }
        };
        reason = problem;
        prompt = retry_prompt(&base, &reason, &code);
    }
    Err(StageError::BoundReduction { attempts, reason })
}

/// Asks which property each assertion expresses. `None` = unmapped.
pub fn map_properties(
    gw: &mut Gateway,
    seq: &AssertionSequence,
    properties: &[String],
) -> Result<BTreeMap<AssertionId, Option<usize>>, StageError> {
    let mut map: BTreeMap<AssertionId, Option<usize>> = seq.ids().map(|id| (id, None)).collect();
    if seq.is_empty() || properties.is_empty() {
        return Ok(map);
    }
    let listing = seq
        .assertions
        .iter()
        .zip(seq.ids())
        .map(|(a, id)| format!("A{id} (in function {}): assert({});", a.function, a.predicate))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = fill(prompts::MAP_PROPERTIES, &[("properties", &numbered(properties)), ("assertions", &listing)]);
    let req = gw.request(Stage::MapProps, "map_props", prompt);
    let response = gw.complete(&req)?;
    for line in response.lines() {
        let Some(rest) = line.trim().strip_prefix('A') else { continue };
        let Some((id, prop)) = rest.split_once(':') else { continue };
        let (Ok(id), Ok(prop)) = (id.trim().parse::<usize>(), prop.trim().parse::<usize>()) else {
            continue;
        };
        if let Some(slot) = map.get_mut(&AssertionId(id)) {
            *slot = (1..=properties.len()).contains(&prop).then_some(prop);
        }
    }
    Ok(map)
}

/// The enclosing function of `assertion`, with every other assertion removed.
pub fn fact_context(model: &ProgramModel, assertion: &Assertion) -> Result<String, FrontendError> {
    let mut roles = uniform_roles(model, AssertionRole::Drop);
    roles.insert(assertion.site(), AssertionRole::KeepAsAssert);
    let rendered = render_with_roles(model, &roles, crate::frontend::CBMC.id)?;
    let m = crate::frontend::parse_program(&rendered)?;
    let f = m.function(&assertion.function).ok_or_else(|| FrontendError::Parse {
        line: assertion.source_line + 1,
        message: format!("function `{}` not found", assertion.function),
    })?;
    Ok(rendered[f.extent.clone()].to_string())
}

/// The sentence after `//FACT...:` in a translation response.
pub fn parse_fact(response: &str) -> Option<String> {
    let line = response.lines().find(|l| l.contains("//FACT"))?;
    let after = &line[line.find("//FACT")? + "//FACT".len()..];
    let after = after.trim_start();
    let after = match after.strip_prefix('[') {
        Some(r) => &r[r.find(']')? + 1..],
        None => after,
    };
    let sentence = after.trim_start().strip_prefix(':')?.trim().trim_end_matches("*/").trim();
    sentence.starts_with(FACT_PREFIX).then(|| sentence.to_string())
}

pub fn translate_fact(gw: &mut Gateway, model: &ProgramModel, assertion: &Assertion) -> Result<String, StageError> {
    let context = fact_context(model, assertion)?;
    let prompt = fill(prompts::TRANSLATE_FACT, &[("program", &context)]);
    let req = gw.request(Stage::TranslateFact, "translate_fact", prompt);
    let response = gw.complete(&req)?;
    parse_fact(&response).ok_or_else(|| {
        parse_err(Stage::TranslateFact, "no `//FACT: At this point in the program, ...` line", &response)
    })
}
