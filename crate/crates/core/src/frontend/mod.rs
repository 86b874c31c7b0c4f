//! C source handling: normalization, function/assertion extraction, the call
//! graph, role rendering for verification queries, and the compiler gate.

pub mod compile;
pub mod lexer;
pub mod normalize;
pub mod parse;
pub mod render;

pub use compile::{compile_check, compile_check_dialect, compile_check_with, CompileDiagnostics, CompilerConfig};
pub use normalize::normalize_assertions;
pub use parse::{build_call_graph, extract_assertions, parse_program, CallEdge, CallGraph, DEFAULT_BOUND};
pub use render::{dialect, render_with_roles, strip_assertions, uniform_roles, AssertionRole, Dialect, CBMC, ESBMC};

use crate::error::FrontendError;
use crate::model::ProgramModel;

/// Normalizes then parses: the usual entry point for generated programs.
pub fn load_program(source: &str) -> Result<ProgramModel, FrontendError> {
    parse_program(&normalize_assertions(source)?)
}
