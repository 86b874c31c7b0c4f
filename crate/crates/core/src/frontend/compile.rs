use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::FrontendError;
use crate::frontend::render::Dialect;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileDiagnostics {
    pub success: bool,
    pub messages: Vec<String>,
}

impl CompileDiagnostics {
    pub fn into_result(self) -> Result<Vec<String>, FrontendError> {
        if self.success {
            Ok(self.messages)
        } else {
            Err(FrontendError::CompileFailed { messages: self.messages })
        }
    }
}

/// Syntax-only compiler invocation. The source is fed on stdin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerConfig {
    pub path: String,
    pub flags: Vec<String>,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        CompilerConfig {
            path: "gcc".into(),
            flags: ["-fsyntax-only", "-std=gnu11", "-Werror=implicit-function-declaration", "-x", "c", "-"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

pub fn compile_check(source: &str) -> Result<CompileDiagnostics, FrontendError> {
    compile_check_with(&CompilerConfig::default(), source)
}

pub fn compile_check_with(config: &CompilerConfig, source: &str) -> Result<CompileDiagnostics, FrontendError> {
    let missing = |source: std::io::Error| FrontendError::CompilerMissing { tool: config.path.clone(), source };
    let mut child = Command::new(&config.path)
        .args(&config.flags)
        .env("LC_ALL", "C")
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(missing)?;
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        // A compiler that bails out early closes stdin; its exit status says why.
        let _ = stdin.write_all(source.as_bytes());
    }
    let output = child.wait_with_output().map_err(missing)?;
    let messages = String::from_utf8_lossy(&output.stderr).lines().map(str::to_string).collect();
    Ok(CompileDiagnostics { success: output.status.success(), messages })
}

/// Compiles `source` with the dialect's intrinsic declarations prepended.
/// Line numbers in the diagnostics still refer to `source`.
pub fn compile_check_dialect(
    config: &CompilerConfig,
    source: &str,
    dialect: &Dialect,
) -> Result<CompileDiagnostics, FrontendError> {
    let text = format!("{}#line 1\n{}", dialect.preamble, source);
    compile_check_with(config, &text)
}
