use crate::error::FrontendError;
use crate::frontend::lexer::{lex, Token, TokenKind};

/// Flattens every multi-line `assert(...);` onto the physical line where it
/// starts. Everything outside assertion statements is left byte-identical.
pub fn normalize_assertions(source: &str) -> Result<String, FrontendError> {
    let lexed = lex(source)?;
    let tokens = &lexed.tokens;
    let mut out = String::with_capacity(source.len());
    let mut copied_to = 0;
    let mut i = 0;
    while i < tokens.len() {
        let Some((close, semi)) = assert_statement_at(source, tokens, i)? else {
            i += 1;
            continue;
        };
        let end = semi.unwrap_or(close);
        if tokens[end].line != tokens[i].line {
            out.push_str(&source[copied_to..tokens[i].span.start]);
            out.push_str(&flatten(source, &tokens[i..=end]));
            copied_to = tokens[end].span.end;
        }
        i = end + 1;
    }
    out.push_str(&source[copied_to..]);
    Ok(out)
}

/// If `tokens[i]` starts `assert (`, returns the index of the closing paren and
/// of the following `;` if present.
pub(crate) fn assert_statement_at(
    src: &str,
    tokens: &[Token],
    i: usize,
) -> Result<Option<(usize, Option<usize>)>, FrontendError> {
    if !tokens[i].is_ident(src, "assert") || !tokens.get(i + 1).is_some_and(|t| t.is_punct(src, "(")) {
        return Ok(None);
    }
    let mut depth = 0usize;
    for (j, t) in tokens.iter().enumerate().skip(i + 1) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text(src) {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    let semi = tokens.get(j + 1).filter(|n| n.is_punct(src, ";")).map(|_| j + 1);
                    return Ok(Some((j, semi)));
                }
            }
            ";" | "{" | "}" => break,
            _ => {}
        }
    }
    Err(FrontendError::UnbalancedAssert { line: tokens[i].line + 1 })
}

fn flatten(src: &str, toks: &[Token]) -> String {
    let mut s = String::new();
    for (k, t) in toks.iter().enumerate() {
        if k > 0 {
            let prev = &toks[k - 1];
            let gap = &src[prev.span.end..t.span.start];
            let breaks = gap.contains('\n') || gap.contains("/*") || gap.contains("//");
            if breaks {
                let tight = matches!(prev.text(src), "(" | "[") || matches!(t.text(src), ")" | "]" | "," | ";");
                if !tight {
                    s.push(' ');
                }
            } else {
                s.push_str(gap);
            }
        }
        s.push_str(t.text(src));
    }
    s
}
