//! Text completion behind a content-addressed cache, with record/replay.

pub mod prompts;
pub mod stages;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GatewayError;

pub const DEFAULT_MODEL: &str = "gpt-5.1";
pub const DEFAULT_EFFORT: &str = "low";
pub const DEFAULT_CREDENTIAL_VAR: &str = "OPENAI_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_RETRIES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Elicit,
    Synthesize,
    Annotate,
    BoundReduce,
    MapProps,
    TranslateFact,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Elicit, Stage::Synthesize, Stage::Annotate, Stage::BoundReduce, Stage::MapProps, Stage::TranslateFact];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Elicit => "elicit",
            Stage::Synthesize => "synthesize",
            Stage::Annotate => "annotate",
            Stage::BoundReduce => "bound_reduce",
            Stage::MapProps => "map_props",
            Stage::TranslateFact => "translate_fact",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptRequest {
    pub stage: Stage,
    pub template_id: &'static str,
    pub prompt: String,
    pub model: String,
    pub effort: String,
}

/// Cache key: SHA-256 over model id and prompt text.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub key: String,
    pub stage: Stage,
    pub model: String,
    pub timestamp: u64,
}

/// One response file per key (`<key>.txt`, verbatim) plus `<key>.json`
/// metadata. Writes go through a temporary file and a rename.
#[derive(Debug, Clone)]
pub struct Cache {
    pub dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    fn path(&self, key: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{key}.{ext}"))
    }

    pub fn get(&self, key: &str) -> Result<Option<String>, GatewayError> {
        let p = self.path(key, "txt");
        match std::fs::read_to_string(&p) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(GatewayError::Cache { path: p, source }),
        }
    }

    pub fn put(&self, key: &str, stage: Stage, model: &str, response: &str) -> Result<(), GatewayError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| GatewayError::Cache { path, source }
        };
        std::fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let meta = CacheMeta { key: key.to_string(), stage, model: model.to_string(), timestamp };
        let meta = serde_json::to_string_pretty(&meta).expect("meta serializes");
        for (ext, body) in [("json", meta.as_str()), ("txt", response)] {
            let dest = self.path(key, ext);
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io(&self.dir))?;
            std::io::Write::write_all(&mut tmp, body.as_bytes()).map_err(io(&dest))?;
            tmp.persist(&dest).map_err(|e| GatewayError::Cache { path: dest.clone(), source: e.error })?;
        }
        Ok(())
    }
}

/// A completion backend. Errors are plain messages; the gateway adds retries
/// and stage context.
pub trait Provider: Send {
    fn complete(&mut self, req: &PromptRequest) -> Result<String, String>;
}

/// OpenAI-compatible chat-completions endpoint.
pub struct HttpProvider {
    pub endpoint: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl HttpProvider {
    pub fn from_env(endpoint: &str, credential_var: &str) -> Result<Self, GatewayError> {
        let api_key = std::env::var(credential_var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| GatewayError::MissingCredential(credential_var.to_string()))?;
        Ok(HttpProvider { endpoint: endpoint.to_string(), api_key, timeout: Duration::from_secs(600) })
    }
}

impl Provider for HttpProvider {
    fn complete(&mut self, req: &PromptRequest) -> Result<String, String> {
        let body = serde_json::json!({
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "reasoning_effort": req.effort,
        });
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut resp = agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| e.to_string())?;
        let v: serde_json::Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("response has no message content: {v}"))
    }
}

/// Canned responses, served per stage in order.
#[derive(Debug, Default, Clone)]
pub struct ScriptedProvider {
    pub queues: HashMap<Stage, VecDeque<String>>,
    pub calls: Vec<PromptRequest>,
}

#[derive(Debug, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    response: Vec<ScriptEntry>,
}

#[derive(Debug, Deserialize)]
struct ScriptEntry {
    stage: String,
    text: String,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, stage: Stage, response: impl Into<String>) -> &mut Self {
        self.queues.entry(stage).or_default().push_back(response.into());
        self
    }

    /// Reads a TOML script: a list of `[[response]]` tables with `stage`
    /// and `text`, served in file order within each stage.
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let file: ScriptFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut p = Self::new();
        for e in file.response {
            p.push(e.stage.parse()?, e.text);
        }
        Ok(p)
    }

    pub fn remaining(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }
}

impl Provider for ScriptedProvider {
    fn complete(&mut self, req: &PromptRequest) -> Result<String, String> {
        self.calls.push(req.clone());
        self.queues
            .get_mut(&req.stage)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| format!("no scripted response left for stage {}", req.stage))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Cache first, provider on a miss, response stored.
    Live,
    /// Cache only; a miss is an error.
    Replay,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Mode::Live),
            "replay" => Ok(Mode::Replay),
            _ => Err(format!("unknown mode `{s}` (expected live or replay)")),
        }
    }
}

/// A prompt and its answer, as exchanged during one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pub stage: Stage,
    pub key: String,
    pub prompt: String,
    pub response: String,
    pub cached: bool,
}

pub struct Gateway {
    pub mode: Mode,
    pub model: String,
    pub effort: String,
    pub retries: u32,
    pub cache: Cache,
    provider: Option<Box<dyn Provider>>,
    provider_calls: usize,
    pub exchanges: Vec<Exchange>,
}

impl Gateway {
    pub fn replay(cache: Cache, model: impl Into<String>) -> Self {
        Gateway {
            mode: Mode::Replay,
            model: model.into(),
            effort: DEFAULT_EFFORT.into(),
            retries: DEFAULT_RETRIES,
            cache,
            provider: None,
            provider_calls: 0,
            exchanges: Vec::new(),
        }
    }

    pub fn live(cache: Cache, model: impl Into<String>, provider: Box<dyn Provider>) -> Self {
        Gateway { mode: Mode::Live, provider: Some(provider), ..Self::replay(cache, model) }
    }

    /// Number of requests that reached the provider.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls
    }

    pub fn request(&self, stage: Stage, template_id: &'static str, prompt: String) -> PromptRequest {
        PromptRequest { stage, template_id, prompt, model: self.model.clone(), effort: self.effort.clone() }
    }

    pub fn complete(&mut self, req: &PromptRequest) -> Result<String, GatewayError> {
        let key = cache_key(&req.model, &req.prompt);
        if let Some(hit) = self.cache.get(&key)? {
            self.record(req, key, hit.clone(), true);
            return Ok(hit);
        }
        let provider = match (self.mode, self.provider.as_mut()) {
            (Mode::Live, Some(p)) => p,
            _ => return Err(GatewayError::ReplayMiss { stage: req.stage.to_string(), key }),
        };
        let attempts = self.retries.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            self.provider_calls += 1;
            match provider.complete(req) {
                Ok(text) => {
                    self.cache.put(&key, req.stage, &req.model, &text)?;
                    self.record(req, key, text.clone(), false);
                    return Ok(text);
                }
                Err(e) => {
                    log::warn!("{} attempt {attempt}/{attempts} failed: {e}", req.stage);
                    last = e;
                }
            }
        }
        Err(GatewayError::Provider { stage: req.stage.to_string(), attempts, message: last })
    }

    fn record(&mut self, req: &PromptRequest, key: String, response: String, cached: bool) {
        self.exchanges.push(Exchange { stage: req.stage, key, prompt: req.prompt.clone(), response, cached });
    }

    /// Writes every exchange of the run as numbered plain-text files.
    pub fn write_transcripts(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, x) in self.exchanges.iter().enumerate() {
            let base = format!("{:03}_{}", i + 1, x.stage);
            std::fs::write(dir.join(format!("{base}.prompt.txt")), &x.prompt)?;
            std::fs::write(dir.join(format!("{base}.response.txt")), &x.response)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flaky {
        fail: u32,
        calls: u32,
    }

    impl Provider for Flaky {
        fn complete(&mut self, req: &PromptRequest) -> Result<String, String> {
            self.calls += 1;
            if self.calls <= self.fail {
                Err("connection reset".into())
            } else {
                Ok(format!("answer to {}", req.prompt))
            }
        }
    }

    #[test]
    fn key_is_sensitive_to_prompt_and_model() {
        let k = cache_key("m", "prompt");
        assert_eq!(k, cache_key("m", "prompt"));
        assert_eq!(k.len(), 64);
        assert_ne!(k, cache_key("m", "prompT"));
        assert_ne!(k, cache_key("n", "prompt"));
        // The separator keeps (model, prompt) splits apart.
        assert_ne!(cache_key("ab", "c"), cache_key("a", "bc"));
    }

    #[test]
    fn second_call_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let mut g = Gateway::live(Cache::new(dir.path()), "m", Box::new(Flaky { fail: 0, calls: 0 }));
        let req = g.request(Stage::Elicit, "elicit", "hello".into());
        let a = g.complete(&req).unwrap();
        let b = g.complete(&req).unwrap();
        assert_eq!(a, b);
        assert_eq!(g.provider_calls(), 1);
        assert!(g.exchanges[1].cached);
        let key = cache_key("m", "hello");
        assert_eq!(std::fs::read_to_string(dir.path().join(format!("{key}.txt"))).unwrap(), a);
        let meta: CacheMeta =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{key}.json"))).unwrap()).unwrap();
        assert_eq!(meta.stage, Stage::Elicit);

        let mut r = Gateway::replay(Cache::new(dir.path()), "m");
        assert_eq!(r.complete(&req).unwrap(), a);
        let miss = r.request(Stage::Elicit, "elicit", "unseen".into());
        assert!(matches!(r.complete(&miss), Err(GatewayError::ReplayMiss { .. })));
        assert_eq!(r.provider_calls(), 0);
    }

    #[test]
    fn retries_then_gives_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut g = Gateway::live(Cache::new(dir.path()), "m", Box::new(Flaky { fail: 2, calls: 0 }));
        let req = g.request(Stage::Synthesize, "synthesize", "p".into());
        assert!(g.complete(&req).is_ok());
        assert_eq!(g.provider_calls(), 3);
        let mut g = Gateway::live(Cache::new(dir.path()), "m", Box::new(Flaky { fail: 9, calls: 0 }));
        let req = g.request(Stage::Synthesize, "synthesize", "q".into());
        match g.complete(&req) {
            Err(GatewayError::Provider { stage, attempts, .. }) => {
                assert_eq!(stage, "synthesize");
                assert_eq!(attempts, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn script_file() {
        let p = ScriptedProvider::from_toml(
            "[[response]]\nstage = \"elicit\"\ntext = \"1. a\"\n[[response]]\nstage = \"elicit\"\ntext = \"1. b\"\n",
        )
        .unwrap();
        assert_eq!(p.remaining(), 2);
        assert_eq!(p.queues[&Stage::Elicit][1], "1. b");
        assert!(ScriptedProvider::from_toml("[[response]]\nstage = \"nope\"\ntext = \"\"\n").is_err());
    }

    #[test]
    fn missing_credential() {
        assert!(matches!(
            HttpProvider::from_env(DEFAULT_ENDPOINT, "COFACT_SURELY_UNSET_VAR"),
            Err(GatewayError::MissingCredential(_))
        ));
    }
}
