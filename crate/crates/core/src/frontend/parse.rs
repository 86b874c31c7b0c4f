use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::FrontendError;
use crate::frontend::lexer::{lex, line_starts, matching_close, Lexed, Token, TokenKind};
use crate::frontend::normalize::assert_statement_at;
use crate::model::{AssertLoc, Assertion, FunctionDef, ProgramModel};

pub const DEFAULT_BOUND: u32 = 5;

/// Splits C source into global code and function definitions.
pub fn parse_program(source: &str) -> Result<ProgramModel, FrontendError> {
    let lexed = lex(source)?;
    let tokens = &lexed.tokens;
    let starts = line_starts(source);
    let mut functions: Vec<FunctionDef> = Vec::new();
    let mut decl_start = 0usize;
    let mut i = 0usize;

    while i < tokens.len() {
        let t = &tokens[i];
        if t.kind != TokenKind::Punct {
            i += 1;
            continue;
        }
        match t.text(source) {
            ";" => {
                decl_start = i + 1;
                i += 1;
            }
            "(" | "[" => {
                i = matching_close(source, tokens, i).ok_or_else(|| FrontendError::Parse {
                    line: t.line + 1,
                    message: format!("unbalanced `{}`", t.text(source)),
                })? + 1;
            }
            "{" => {
                let close = matching_close(source, tokens, i)
                    .ok_or_else(|| FrontendError::Parse { line: t.line + 1, message: "unbalanced `{`".into() })?;
                if let Some(name) = function_name_before(source, tokens, decl_start, i) {
                    functions.push(function_def(source, &lexed, &starts, name, decl_start, i, close)?);
                    decl_start = close + 1;
                }
                i = close + 1;
            }
            ")" | "]" | "}" => {
                return Err(FrontendError::Parse {
                    line: t.line + 1,
                    message: format!("unexpected `{}`", t.text(source)),
                })
            }
            _ => i += 1,
        }
    }

    for t in tokens {
        if t.is_ident(source, "assert") && !functions.iter().any(|f| f.body.contains(&t.span.start)) {
            return Err(FrontendError::AssertOutsideFunction { line: t.line + 1 });
        }
    }

    let mut global_code = String::new();
    let mut cursor = 0;
    for f in &functions {
        global_code.push_str(&source[cursor..f.extent.start]);
        cursor = f.extent.end;
    }
    global_code.push_str(&source[cursor..]);

    Ok(ProgramModel { source: source.to_string(), global_code, functions, unwind_bound: DEFAULT_BOUND })
}

/// Recognises `name ( ... ) {` at top level.
fn function_name_before(src: &str, tokens: &[Token], decl_start: usize, brace: usize) -> Option<String> {
    if brace == 0 || brace <= decl_start || !tokens[brace - 1].is_punct(src, ")") {
        return None;
    }
    let mut depth = 0usize;
    let mut open = None;
    for j in (decl_start..brace).rev() {
        let t = &tokens[j];
        if t.is_punct(src, ")") {
            depth += 1;
        } else if t.is_punct(src, "(") {
            depth -= 1;
            if depth == 0 {
                open = Some(j);
                break;
            }
        }
    }
    let open = open?;
    let name = tokens.get(open.checked_sub(1)?)?;
    if open - 1 < decl_start || name.kind != TokenKind::Ident {
        return None;
    }
    Some(name.text(src).to_string())
}

fn function_def(
    src: &str,
    lexed: &Lexed,
    starts: &[usize],
    name: String,
    decl_start: usize,
    open: usize,
    close: usize,
) -> Result<FunctionDef, FrontendError> {
    let tokens = &lexed.tokens;
    let first = &tokens[decl_start];
    let last = &tokens[close];
    if decl_start > 0 && tokens[decl_start - 1].line == first.line {
        return Err(FrontendError::Parse {
            line: first.line + 1,
            message: format!("definition of `{name}` must start on its own line"),
        });
    }
    if tokens.get(close + 1).is_some_and(|n| n.line == last.line) {
        return Err(FrontendError::Parse {
            line: last.line + 1,
            message: format!("closing brace of `{name}` must end its line"),
        });
    }
    let extent_end = starts.get(last.line + 1).copied().unwrap_or(src.len());
    let body = tokens[open].span.end..tokens[close].span.start;

    let mut body_lines: BTreeSet<usize> = BTreeSet::new();
    for t in &tokens[open + 1..close] {
        body_lines.insert(t.line);
    }

    let mut asserts = Vec::new();
    let mut k = open + 1;
    while k < close {
        let t = &tokens[k];
        if !t.is_ident(src, "assert") {
            k += 1;
            continue;
        }
        let Some((rparen, Some(semi))) = assert_statement_at(src, tokens, k)? else {
            return Err(FrontendError::AssertPosition { line: t.line + 1 });
        };
        let prev = &tokens[k - 1];
        let at_statement =
            k - 1 == open || matches!(prev.text(src), ";" | "{" | "}" | ":") && prev.kind == TokenKind::Punct;
        let alone =
            prev.line != t.line && tokens[semi].line == t.line && tokens.get(semi + 1).is_none_or(|n| n.line != t.line);
        if !at_statement || !alone {
            return Err(FrontendError::AssertPosition { line: t.line + 1 });
        }
        asserts.push(AssertLoc {
            line: t.line,
            keyword: t.span.clone(),
            predicate: tokens[k + 1].span.end..tokens[rparen].span.start,
        });
        k = semi + 1;
    }

    Ok(FunctionDef {
        name,
        extent: starts[first.line]..extent_end,
        first_line: first.line,
        last_line: last.line,
        open_brace_line: tokens[open].line,
        body,
        body_lines: body_lines.into_iter().collect(),
        asserts,
    })
}

/// Every assertion of the program, functions in declaration order and
/// assertions in document order within each function.
pub fn extract_assertions(model: &ProgramModel) -> Vec<Assertion> {
    model
        .functions
        .iter()
        .flat_map(|f| {
            f.asserts.iter().map(move |a| Assertion {
                function: f.name.clone(),
                logical_line: f.logical_line_of(a.line),
                predicate: model.source[a.predicate.clone()].trim().to_string(),
                id: None,
                source_line: a.line,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    /// 1-based index of the skeleton statement line holding the call.
    pub call_site_line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallGraph {
    pub nodes: Vec<String>,
    /// In caller declaration order, then call-site textual order.
    pub edges: Vec<CallEdge>,
}

impl CallGraph {
    pub fn callees_of<'a>(&'a self, caller: &'a str) -> impl Iterator<Item = &'a CallEdge> + 'a {
        self.edges.iter().filter(move |e| e.caller == caller)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n == name)
    }
}

/// Direct calls between functions of the program. Calls inside assertion
/// statements and calls to anything not defined in the program are ignored.
pub fn build_call_graph(model: &ProgramModel) -> CallGraph {
    let src = model.source.as_str();
    // `parse_program` already lexed this source successfully.
    let Ok(lexed) = lex(src) else {
        return CallGraph::default();
    };
    let tokens = &lexed.tokens;
    let names: BTreeSet<&str> = model.functions.iter().map(|f| f.name.as_str()).collect();
    let mut edges: Vec<CallEdge> = Vec::new();

    for f in &model.functions {
        for (i, t) in tokens.iter().enumerate() {
            if !f.body.contains(&t.span.start) || t.kind != TokenKind::Ident {
                continue;
            }
            if f.is_assertion_line(t.line) || !names.contains(t.text(src)) {
                continue;
            }
            if !tokens.get(i + 1).is_some_and(|n| n.is_punct(src, "(")) {
                continue;
            }
            if i > 0 && (tokens[i - 1].is_punct(src, ".") || tokens[i - 1].is_punct(src, "->")) {
                continue;
            }
            let edge = CallEdge {
                caller: f.name.clone(),
                callee: t.text(src).to_string(),
                call_site_line: f.logical_line_of(t.line) + 1,
            };
            if !edges.contains(&edge) {
                edges.push(edge);
            }
        }
    }

    CallGraph { nodes: model.functions.iter().map(|f| f.name.clone()).collect(), edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG2: &str = include_str!("../../tests/fixtures/programs/fig2_bubble.c");

    #[test]
    fn minimal_program() {
        let m = parse_program("int main(void){return 0;}\n").unwrap();
        assert_eq!(m.function_names(), vec!["main"]);
        assert!(m.global_code.trim().is_empty());
        assert!(extract_assertions(&m).is_empty());
    }

    #[test]
    fn figure_two_functions() {
        let m = parse_program(FIG2).unwrap();
        assert_eq!(m.function_names(), vec!["is_sorted_non_dec", "bubble_sort", "main"]);
    }

    #[test]
    fn figure_two_trailing_asserts_share_line() {
        let m = parse_program(FIG2).unwrap();
        let a: Vec<_> = extract_assertions(&m).into_iter().filter(|a| a.function == "bubble_sort").collect();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].predicate, "*total_swaps == local_total_swaps");
        assert_eq!(a[1].predicate, "is_sorted_non_dec(arr, n)");
        assert_eq!(a[0].logical_line, a[1].logical_line);
        let skeleton = m.function("bubble_sort").unwrap().skeleton_len();
        assert_eq!(a[0].logical_line, skeleton);
    }

    #[test]
    fn inserting_between_keeps_lines() {
        let edited = FIG2.replace(
            "    assert(is_sorted_non_dec(arr, n));\n",
            "    assert(local_total_swaps >= 0);\n    assert(is_sorted_non_dec(arr, n));\n",
        );
        let before = extract_assertions(&parse_program(FIG2).unwrap());
        let after = extract_assertions(&parse_program(&edited).unwrap());
        assert_eq!(after.len(), before.len() + 1);
        for a in &before {
            let b = after.iter().find(|x| x.predicate == a.predicate).unwrap();
            assert_eq!(a.logical_line, b.logical_line);
        }
    }

    #[test]
    fn first_statement_assert_is_zero() {
        let src = "int f(int x) {\n    assert(x > 0);\n    return x;\n}\n";
        let a = extract_assertions(&parse_program(src).unwrap());
        assert_eq!(a[0].logical_line, 0);
    }

    #[test]
    fn shared_macro_lands_in_global_code() {
        let src = "#include <stdio.h>\n#define MAX_N 100\n\nint a(int x) {\n    return x % MAX_N;\n}\n\n// helper\nint b(int x) {\n    return a(x) + 1;\n}\nint main(void) {\n    printf(\"%d\\n\", b(MAX_N));\n    return 0;\n}\n";
        let m = parse_program(src).unwrap();
        assert_eq!(m.function_names(), vec!["a", "b", "main"]);
        // Independent line census: definitions occupy lines 4-6, 9-11 and 12-15 (1-based).
        let lines: Vec<&str> = src.split_inclusive('\n').collect();
        let expected_global: String = lines
            .iter()
            .enumerate()
            .filter(|(n, _)| !matches!(n + 1, 4..=6 | 9..=11 | 12..=15))
            .map(|(_, l)| *l)
            .collect();
        assert_eq!(m.global_code, expected_global);
        assert!(m.global_code.contains("#define MAX_N 100"));
        let f = m.function("b").unwrap();
        assert_eq!((f.first_line, f.last_line), (8, 10));
    }

    #[test]
    fn structs_and_initializers_are_global() {
        let src = "struct P { int x; };\nint tbl[2] = {1, 2};\nstatic struct P origin(void)\n{\n    struct P p = {0};\n    return p;\n}\n";
        let m = parse_program(src).unwrap();
        assert_eq!(m.function_names(), vec!["origin"]);
        assert_eq!(m.functions[0].open_brace_line, 3);
        assert!(m.global_code.starts_with("struct P { int x; };\nint tbl[2] = {1, 2};\n"));
    }

    #[test]
    fn call_graph_edges() {
        let src = "int d(int x) {\n    return x;\n}\nint b(int x) {\n    return d(x);\n}\nint c(int x) {\n    int y = x;\n    return d(y);\n}\nint main(void) {\n    int r = b(1);\n    r += c(2);\n    printf(\"%d\", r);\n    assert(r >= 0);\n    return 0;\n}\n";
        let m = parse_program(src).unwrap();
        let cg = build_call_graph(&m);
        let e: Vec<(&str, &str, usize)> =
            cg.edges.iter().map(|e| (e.caller.as_str(), e.callee.as_str(), e.call_site_line)).collect();
        assert_eq!(e, vec![("b", "d", 1), ("c", "d", 2), ("main", "b", 1), ("main", "c", 2)]);
    }

    #[test]
    fn recursion_and_helper_calls_in_asserts() {
        let src = "int ok(int x) {\n    return x > 0;\n}\nint f(int n) {\n    if (n <= 0) return 0;\n    assert(ok(n));\n    return f(n - 1);\n}\n";
        let cg = build_call_graph(&parse_program(src).unwrap());
        assert_eq!(cg.edges.len(), 1);
        assert_eq!((cg.edges[0].caller.as_str(), cg.edges[0].callee.as_str()), ("f", "f"));
        assert_eq!(cg.edges[0].call_site_line, 2);
    }

    #[test]
    fn assert_position_errors() {
        let src = "void f(int x) {\n    if (x)\n        assert(x > 0);\n}\n";
        assert!(matches!(parse_program(src), Err(FrontendError::AssertPosition { line: 3 })));
        let src = "void f(int x) {\n    x++; assert(x > 0);\n}\n";
        assert!(matches!(parse_program(src), Err(FrontendError::AssertPosition { line: 2 })));
        let src = "int g = 0;\nvoid f(int x) {\n    int y = assert(x);\n}\n";
        assert!(matches!(parse_program(src), Err(FrontendError::AssertPosition { line: 3 })));
    }

    #[test]
    fn commented_and_static_asserts_ignored() {
        let src =
            "void f(int x) {\n    // assert(x);\n    _Static_assert(1, \"x\");\n    /* assert(0); */\n    x++;\n}\n";
        let m = parse_program(src).unwrap();
        assert!(extract_assertions(&m).is_empty());
        assert_eq!(m.functions[0].skeleton_len(), 2);
    }

    #[test]
    fn unbalanced_braces_error() {
        assert!(parse_program("int main(void) {\n return 0;\n").is_err());
        assert!(parse_program("int main(void) {\n return 0;\n}\n}\n").is_err());
    }
}
