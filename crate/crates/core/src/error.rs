use std::path::PathBuf;

use thiserror::Error;

use crate::model::AssertionId;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("assertion {0} is not in exactly one of verified/falsified/unknown; the run is inconsistent")]
    InconsistentRun(AssertionId),
    #[error("assertion {id} assumes {assumption}, which does not precede it")]
    ForwardAssumption { id: AssertionId, assumption: AssertionId },
}

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("line {line}: unbalanced parentheses in assert")]
    UnbalancedAssert { line: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: assert outside any function definition")]
    AssertOutsideFunction { line: usize },
    #[error("line {line}: assert must be the only statement on its line and sit at statement position")]
    AssertPosition { line: usize },
    #[error("unknown assume dialect `{0}`")]
    UnknownDialect(String),
    #[error("no role given for assertion in `{function}` at source line {line}")]
    MissingRole { function: String, line: usize },
    #[error("compiler `{tool}` not found or not runnable: {source}")]
    CompilerMissing {
        tool: String,
        #[source]
        source: std::io::Error,
    },
    #[error("program does not compile:\n{}", .messages.join("\n"))]
    CompileFailed { messages: Vec<String> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TraversalError {
    #[error("program has no `main` function")]
    NoMain,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver binary `{binary}` for configuration `{name}` is not available: {reason}")]
    Missing { name: String, binary: String, reason: String },
    #[error("no solver in the portfolio is available:\n{}", .0.join("\n"))]
    AllMissing(Vec<String>),
    #[error("invalid solver configuration `{name}`: {reason}")]
    Config { name: String, reason: String },
    #[error("portfolio needs at least one solver configuration")]
    Empty,
    #[error("no source rendered for dialect `{0}`")]
    MissingDialectSource(String),
    #[error("io error while running solver: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("assertion in the sequence has no id")]
    UnnumberedAssertion,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("replay cache miss for {stage} prompt (key {key})")]
    ReplayMiss { stage: String, key: String },
    #[error("provider failed during {stage} after {attempts} attempt(s): {message}")]
    Provider { stage: String, attempts: u32, message: String },
    #[error("provider credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("{stage}: could not parse response: {message}\n--- response ---\n{response}")]
    Parse { stage: String, message: String, response: String },
    #[error("cache io error at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("synthesis failed after {attempts} attempt(s); last diagnostics:\n{}", .diagnostics.join("\n"))]
    Synthesis { attempts: u32, diagnostics: Vec<String> },
    #[error("annotation failed after {attempts} attempt(s): {reason}")]
    Annotation { attempts: u32, reason: String },
    #[error("bound reduction failed after {attempts} attempt(s): {reason}")]
    BoundReduction { attempts: u32, reason: String },
    #[error("empty task description")]
    EmptyDescription,
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum FactError {
    #[error("assertion {id} sits at logical line {line} of `{function}`, past its skeleton of {len} lines")]
    PositionOutOfRange { id: AssertionId, function: String, line: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Anything that stops a run. Each variant family has a stable exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Traversal(#[from] TraversalError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Fact(#[from] FactError),
    #[error("output directory {} is in use by another run (remove {} if it is stale)", .0.display(), .0.join(".lock").display())]
    Locked(PathBuf),
    #[error("io error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const GATEWAY: i32 = 3;
    pub const SYNTHESIS: i32 = 4;
    pub const ANNOTATION: i32 = 5;
    pub const BOUND_REDUCTION: i32 = 6;
    pub const FRONTEND: i32 = 7;
    pub const SOLVER: i32 = 8;
    pub const TRAVERSAL: i32 = 9;
    pub const LOCKED: i32 = 10;
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use RunError::*;
        match self {
            Usage(_) | Stage(StageError::EmptyDescription) => exit::USAGE,
            Stage(StageError::Gateway(_)) => exit::GATEWAY,
            Stage(StageError::Synthesis { .. }) => exit::SYNTHESIS,
            Stage(StageError::Annotation { .. }) => exit::ANNOTATION,
            Stage(StageError::BoundReduction { .. }) => exit::BOUND_REDUCTION,
            Stage(StageError::Frontend(_)) | Frontend(_) | Verify(VerifyError::Frontend(_)) => exit::FRONTEND,
            Stage(StageError::Solver(_)) | Solver(_) | Verify(VerifyError::Solver(_)) => exit::SOLVER,
            Traversal(_) => exit::TRAVERSAL,
            Locked(_) => exit::LOCKED,
            Verify(_) | Fact(_) | Io { .. } => exit::INTERNAL,
        }
    }

    /// Short stage name for tables and logs.
    pub fn stage(&self) -> &'static str {
        match self.exit_code() {
            exit::USAGE => "usage",
            exit::GATEWAY => "gateway",
            exit::SYNTHESIS => "synthesis",
            exit::ANNOTATION => "annotation",
            exit::BOUND_REDUCTION => "bound-reduction",
            exit::FRONTEND => "frontend",
            exit::SOLVER => "solver",
            exit::TRAVERSAL => "traversal",
            exit::LOCKED => "locked",
            _ => "internal",
        }
    }
}
