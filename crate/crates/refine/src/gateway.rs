//! Text-generation backends: a live OpenAI-compatible chat endpoint, a
//! transcript replayer, and a recorder that wraps any backend.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::hashing::sha256_hex;

pub const API_KEY_ENV: &str = "A11Y_API_KEY";
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    /// Cap on generated tokens.
    pub max_output: u32,
}

impl GenerationRequest {
    pub fn new(messages: Vec<Message>) -> Self {
        Self {
            messages,
            temperature: DEFAULT_TEMPERATURE,
            max_output: 4096,
        }
    }

    /// Stable hash of the messages with whitespace runs collapsed.
    pub fn fingerprint(&self) -> String {
        let normalized: Vec<(String, String)> = self
            .messages
            .iter()
            .map(|m| (m.role.clone(), m.content.split_whitespace().collect::<Vec<_>>().join(" ")))
            .collect();
        sha256_hex(serde_json::to_string(&normalized).expect("serializable").as_bytes())
    }

    fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::Invalid("message list is empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::Invalid(format!("temperature {} is negative", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("unrecorded prompt (fingerprint {fingerprint}); replay never falls back to a live call")]
    Unrecorded { fingerprint: String },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("environment variable {API_KEY_ENV} is not set")]
    MissingKey,
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("transcript {path}: {message}")]
    Transcript { path: PathBuf, message: String },
}

pub trait TextBackend: Send + Sync {
    /// Identifier recorded in manifests.
    fn id(&self) -> String;
    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: 3,
            max_in_flight: 4,
            timeout_secs: 120,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    api_key: String,
    agent: ureq::Agent,
    slots: Slots,
}

impl LiveBackend {
    /// The key is read from the environment only.
    pub fn from_env(config: LiveConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| GatewayError::MissingKey)?;
        Ok(Self::with_key(config, api_key))
    }

    pub fn with_key(config: LiveConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        let slots = Slots {
            free: Mutex::new(config.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Self { config, api_key, agent, slots }
    }

    /// JSON body sent to the endpoint. The configured temperature wins over
    /// the request's when the request carries the default.
    pub fn request_payload(&self, request: &GenerationRequest) -> serde_json::Value {
        let temperature = if request.temperature == DEFAULT_TEMPERATURE {
            self.config.temperature
        } else {
            request.temperature
        };
        json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": temperature,
            "max_tokens": request.max_output,
        })
    }

    fn attempt(&self, payload: &serde_json::Value) -> Result<String, (bool, String)> {
        let result = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(payload);
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) => {
                return Err((code == 429 || code >= 500, format!("HTTP status {code}")));
            }
            Err(e) => return Err((true, e.to_string())),
        };
        let body: serde_json::Value = response.body_mut().read_json().map_err(|e| (false, e.to_string()))?;
        body.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| (false, format!("no choices[0].message.content in {body}")))
    }
}

impl TextBackend for LiveBackend {
    fn id(&self) -> String {
        format!("live:{}", self.config.model)
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let payload = self.request_payload(request);
        let _slot = self.slots.acquire();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&payload) {
                Ok(text) => return Ok(text),
                Err((false, message)) if attempts == 1 && message.starts_with("no choices") => {
                    return Err(GatewayError::BadResponse(message));
                }
                Err((retriable, message)) => {
                    if !retriable || attempts > self.config.max_retries {
                        return Err(GatewayError::Transport { attempts, message });
                    }
                    std::thread::sleep(Duration::from_millis(250 << attempts.min(6)));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub fingerprint: String,
    pub request: GenerationRequest,
    pub response: String,
}

/// Answers from a JSON-lines transcript; unknown prompts are an error.
pub struct ReplayBackend {
    path: PathBuf,
    entries: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let err = |message: String| GatewayError::Transcript { path: path.to_path_buf(), message };
        let file = std::fs::File::open(path).map_err(|e| err(e.to_string()))?;
        let mut entries = HashMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", n + 1)))?;
            Self::insert(&mut entries, entry).map_err(err)?;
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Result<Self, GatewayError> {
        let mut map = HashMap::new();
        for e in entries {
            Self::insert(&mut map, e).map_err(|message| GatewayError::Transcript { path: PathBuf::new(), message })?;
        }
        Ok(Self { path: PathBuf::new(), entries: map })
    }

    fn insert(map: &mut HashMap<String, String>, entry: TranscriptEntry) -> Result<(), String> {
        match map.get(&entry.fingerprint) {
            Some(existing) if existing != &entry.response => {
                Err(format!("fingerprint {} recorded twice with different responses", entry.fingerprint))
            }
            _ => {
                map.insert(entry.fingerprint, entry.response);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TextBackend for ReplayBackend {
    fn id(&self) -> String {
        format!("replay:{}", self.path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let fingerprint = request.fingerprint();
        self.entries
            .get(&fingerprint)
            .cloned()
            .ok_or(GatewayError::Unrecorded { fingerprint })
    }
}

/// Forwards to an inner backend and appends every exchange to a transcript.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    lock: Mutex<()>,
}

impl<B: TextBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: impl Into<PathBuf>) -> Self {
        Self { inner, path: path.into(), lock: Mutex::new(()) }
    }
}

impl<B: TextBackend> TextBackend for RecordingBackend<B> {
    fn id(&self) -> String {
        format!("record:{}", self.inner.id())
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        let response = self.inner.generate(request)?;
        let entry = TranscriptEntry {
            fingerprint: request.fingerprint(),
            request: request.clone(),
            response: response.clone(),
        };
        let line = serde_json::to_string(&entry).expect("serializable");
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let err = |e: std::io::Error| GatewayError::Transcript { path: self.path.clone(), message: e.to_string() };
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(err)?;
        writeln!(f, "{line}").map_err(err)?;
        Ok(response)
    }
}

/// A backend answered by a closure, for scripted sessions and embedding.
pub struct FnBackend<F> {
    id: String,
    respond: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, GatewayError> + Send + Sync,
{
    pub fn new(id: impl Into<String>, respond: F) -> Self {
        Self { id: id.into(), respond }
    }
}

impl<F> TextBackend for FnBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, GatewayError> + Send + Sync,
{
    fn id(&self) -> String {
        self.id.clone()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        request.validate()?;
        (self.respond)(request)
    }
}

impl<T: TextBackend + ?Sized> TextBackend for &T {
    fn id(&self) -> String {
        (**self).id()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        (**self).generate(request)
    }
}

impl<T: TextBackend + ?Sized> TextBackend for Box<T> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        (**self).generate(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(text: &str) -> GenerationRequest {
        GenerationRequest::new(vec![Message::user(text)])
    }

    #[test]
    fn replay_hit_and_miss() {
        let p = req("write a page");
        let replay = ReplayBackend::from_entries([TranscriptEntry {
            fingerprint: p.fingerprint(),
            request: p.clone(),
            response: "<p>hi</p>".into(),
        }])
        .unwrap();
        assert_eq!(replay.generate(&p).unwrap(), "<p>hi</p>");
        assert!(matches!(replay.generate(&req("other")), Err(GatewayError::Unrecorded { .. })));
    }

    #[test]
    fn fingerprint_ignores_whitespace_runs() {
        assert_eq!(req("a  b\n c").fingerprint(), req("a b c").fingerprint());
        assert_ne!(req("a b").fingerprint(), req("ab").fingerprint());
    }

    #[test]
    fn live_payload_carries_default_temperature() {
        let live = LiveBackend::with_key(LiveConfig::default(), "k".into());
        let payload = live.request_payload(&req("x"));
        assert_eq!(payload["temperature"], 1.0);
        assert_eq!(payload["messages"][0]["role"], "user");
    }

    #[test]
    fn conflicting_transcript_entries_are_rejected() {
        let p = req("x");
        let e = |r: &str| TranscriptEntry { fingerprint: p.fingerprint(), request: p.clone(), response: r.into() };
        assert!(ReplayBackend::from_entries([e("a"), e("a")]).is_ok());
        assert!(ReplayBackend::from_entries([e("a"), e("b")]).is_err());
    }

    #[test]
    fn empty_request_is_invalid() {
        let replay = ReplayBackend::from_entries([]).unwrap();
        assert!(matches!(replay.generate(&GenerationRequest::new(vec![])), Err(GatewayError::Invalid(_))));
    }
}
