use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::FrontendError;
use crate::frontend::lexer::line_starts;
use crate::model::{AssertionSite, ProgramModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssertionRole {
    KeepAsAssert,
    ConvertToAssume,
    Drop,
}

/// Spelling of the assume intrinsic for one solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dialect {
    pub id: &'static str,
    pub assume_fn: &'static str,
    /// Declarations that let a plain C compiler accept the intrinsic.
    pub preamble: &'static str,
}

pub const CBMC: Dialect =
    Dialect { id: "cbmc", assume_fn: "__CPROVER_assume", preamble: "void __CPROVER_assume(_Bool assumption);\n" };

pub const ESBMC: Dialect =
    Dialect { id: "esbmc", assume_fn: "__ESBMC_assume", preamble: "void __ESBMC_assume(_Bool assumption);\n" };

pub const DIALECTS: &[Dialect] = &[CBMC, ESBMC];

pub fn dialect(id: &str) -> Result<Dialect, FrontendError> {
    DIALECTS.iter().copied().find(|d| d.id == id).ok_or_else(|| FrontendError::UnknownDialect(id.to_string()))
}

/// Rewrites each assertion according to its role. Non-assertion text is
/// copied through unchanged; dropped assertions lose their whole line.
pub fn render_with_roles(
    model: &ProgramModel,
    roles: &HashMap<AssertionSite, AssertionRole>,
    solver_dialect: &str,
) -> Result<String, FrontendError> {
    let d = dialect(solver_dialect)?;
    let src = model.source.as_str();
    let mut out = String::with_capacity(src.len());
    let starts = line_starts(src);

    // (byte range, replacement), sorted before applying.
    let mut edits: Vec<(Range<usize>, &str)> = Vec::new();
    for f in &model.functions {
        for a in &f.asserts {
            let site = AssertionSite { function: f.name.clone(), source_line: a.line };
            let role = roles
                .get(&site)
                .ok_or_else(|| FrontendError::MissingRole { function: f.name.clone(), line: a.line + 1 })?;
            match role {
                AssertionRole::KeepAsAssert => {}
                AssertionRole::ConvertToAssume => edits.push((a.keyword.clone(), d.assume_fn)),
                AssertionRole::Drop => {
                    let end = starts.get(a.line + 1).copied().unwrap_or(src.len());
                    edits.push((starts[a.line]..end, ""));
                }
            }
        }
    }
    edits.sort_by_key(|(r, _)| r.start);
    let mut copied = 0;
    for (range, text) in edits {
        out.push_str(&src[copied..range.start]);
        out.push_str(text);
        copied = range.end;
    }
    out.push_str(&src[copied..]);
    Ok(out)
}

/// The program with every assertion statement removed.
pub fn strip_assertions(model: &ProgramModel) -> String {
    let roles = uniform_roles(model, AssertionRole::Drop);
    // The dialect is irrelevant when nothing becomes an assume.
    render_with_roles(model, &roles, CBMC.id).expect("all assertions have a role")
}

pub fn uniform_roles(model: &ProgramModel, role: AssertionRole) -> HashMap<AssertionSite, AssertionRole> {
    model
        .functions
        .iter()
        .flat_map(|f| {
            f.asserts.iter().map(move |a| (AssertionSite { function: f.name.clone(), source_line: a.line }, role))
        })
        .collect()
}
