//! The single boundary to language models: one request/response contract,
//! an HTTP chat-completions provider, and a deterministic replay provider
//! for tests. Every call made during a run is appended to the run's
//! recording transcript so the run can be replayed byte-for-byte.

use std::io::Read;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Message {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Message {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Message {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

pub const DEFAULT_TEMPERATURE: f64 = 0.01;
pub const DEFAULT_MAX_INPUT_TOKENS: usize = 8192;

/// One chat completion request. The tag labels the call site (for example
/// `planner.sketch`) and drives transcript replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_input_tokens: usize,
    pub tag: String,
}

impl ChatRequest {
    pub fn new(tag: impl Into<String>, messages: Vec<Message>) -> ChatRequest {
        ChatRequest {
            messages,
            temperature: DEFAULT_TEMPERATURE,
            max_input_tokens: DEFAULT_MAX_INPUT_TOKENS,
            tag: tag.into(),
        }
    }
}

/// Same estimator as table sizing, applied to the concatenated contents.
pub fn estimate_tokens(messages: &[Message]) -> usize {
    messages
        .iter()
        .map(|m| tokens::estimate(&m.content))
        .sum()
}

/// Stable digest of (tag, concatenated message contents). Used to detect
/// prompt drift between a transcript and the code replaying it.
pub fn request_digest(req: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(req.tag.as_bytes());
    for m in &req.messages {
        hasher.update([0x1f]);
        hasher.update(m.content.as_bytes());
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("invalid request: {message}")]
    InvalidRequest { message: String },
    #[error("input of ~{estimate} tokens exceeds the {limit}-token budget")]
    TokenBudgetExceeded { estimate: usize, limit: usize },
    #[error("transport error: {detail}")]
    Transport { detail: String },
    #[error("malformed provider response: {detail}")]
    BadResponse { detail: String },
    #[error("replay transcript exhausted at call tagged {tag:?}")]
    ReplayExhausted { tag: String },
    #[error("replay entry {index} is tagged {expected:?} but the call is tagged {got:?}")]
    ReplayTagMismatch {
        index: usize,
        expected: String,
        got: String,
    },
}

/// A model backend. Implementations must be callable from concurrent runs.
pub trait Provider: Send + Sync {
    fn complete_raw(&self, req: &ChatRequest) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub tag: String,
    pub request_digest: String,
    pub response: String,
}

/// Ordered record of one run's LLM traffic. Serialized as JSON-lines with
/// fields `tag` / `request_digest` / `response`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, GatewayError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(line).map_err(|e| GatewayError::BadResponse {
                    detail: format!("transcript line {}: {e}", i + 1),
                })?;
            entries.push(entry);
        }
        Ok(Transcript { entries })
    }

    pub fn load(path: &Path) -> Result<Transcript, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Transport {
            detail: format!("cannot read transcript {}: {e}", path.display()),
        })?;
        Transcript::from_jsonl(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| GatewayError::Transport {
            detail: format!("cannot write transcript {}: {e}", path.display()),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub calls: usize,
    pub input_token_estimate: usize,
    pub output_token_estimate: usize,
}

/// One run's gateway session: validates requests, delegates to the
/// provider, and records every (request, response) pair in order.
pub struct Session<'p> {
    provider: &'p dyn Provider,
    state: Mutex<SessionState>,
}

struct SessionState {
    recording: Vec<TranscriptEntry>,
    stats: GatewayStats,
}

impl<'p> Session<'p> {
    pub fn new(provider: &'p dyn Provider) -> Session<'p> {
        Session {
            provider,
            state: Mutex::new(SessionState {
                recording: Vec::new(),
                stats: GatewayStats::default(),
            }),
        }
    }

    /// Validate, send, record. The request is rejected before sending when
    /// its estimated input exceeds the token budget.
    pub fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        if req.messages.is_empty() {
            return Err(GatewayError::InvalidRequest {
                message: "request has no messages".to_string(),
            });
        }
        if req.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest {
                message: "temperature must be non-negative".to_string(),
            });
        }
        let estimate = estimate_tokens(&req.messages);
        if estimate > req.max_input_tokens {
            return Err(GatewayError::TokenBudgetExceeded {
                estimate,
                limit: req.max_input_tokens,
            });
        }
        let response = self.provider.complete_raw(req)?;
        let mut state = self.state.lock().expect("gateway session poisoned");
        state.recording.push(TranscriptEntry {
            tag: req.tag.clone(),
            request_digest: request_digest(req),
            response: response.clone(),
        });
        state.stats.calls += 1;
        state.stats.input_token_estimate += estimate;
        state.stats.output_token_estimate += tokens::estimate(&response);
        Ok(response)
    }

    pub fn stats(&self) -> GatewayStats {
        self.state.lock().expect("gateway session poisoned").stats
    }

    pub fn recording(&self) -> Transcript {
        Transcript {
            entries: self
                .state
                .lock()
                .expect("gateway session poisoned")
                .recording
                .clone(),
        }
    }
}

/// Deterministic provider that serves a recorded transcript in order. A tag
/// mismatch is a hard error; a digest mismatch only warns, so prompts can
/// evolve while transcripts are regenerated deliberately.
pub struct ReplayProvider {
    transcript: Transcript,
    cursor: Mutex<usize>,
}

impl ReplayProvider {
    pub fn new(transcript: Transcript) -> ReplayProvider {
        ReplayProvider {
            transcript,
            cursor: Mutex::new(0),
        }
    }

    pub fn remaining(&self) -> usize {
        let cursor = *self.cursor.lock().expect("replay cursor poisoned");
        self.transcript.entries.len().saturating_sub(cursor)
    }
}

impl Provider for ReplayProvider {
    fn complete_raw(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let mut cursor = self.cursor.lock().expect("replay cursor poisoned");
        let index = *cursor;
        let entry = self
            .transcript
            .entries
            .get(index)
            .ok_or_else(|| GatewayError::ReplayExhausted {
                tag: req.tag.clone(),
            })?;
        if entry.tag != req.tag {
            return Err(GatewayError::ReplayTagMismatch {
                index,
                expected: entry.tag.clone(),
                got: req.tag.clone(),
            });
        }
        let digest = request_digest(req);
        if !entry.request_digest.is_empty() && entry.request_digest != digest {
            log::warn!(
                "replay digest drift at entry {index} ({}): transcript {} vs request {digest}",
                entry.tag,
                entry.request_digest
            );
        }
        *cursor += 1;
        Ok(entry.response.clone())
    }
}

/// Endpoint configuration for the HTTP provider, read from the
/// environment: `TABPREP_ENDPOINT`, `TABPREP_MODEL`, `TABPREP_API_KEY`.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
}

impl HttpConfig {
    pub fn from_env() -> Result<HttpConfig, GatewayError> {
        let endpoint = std::env::var("TABPREP_ENDPOINT").map_err(|_| {
            GatewayError::InvalidRequest {
                message: "TABPREP_ENDPOINT is not set".to_string(),
            }
        })?;
        let model = std::env::var("TABPREP_MODEL").unwrap_or_else(|_| "default".to_string());
        let api_key = std::env::var("TABPREP_API_KEY").ok();
        Ok(HttpConfig {
            endpoint,
            model,
            api_key,
        })
    }
}

/// Chat-completions-style HTTP provider: POSTs `{model, messages,
/// temperature}` and reads the first choice's message content. Retries
/// once on a transport failure.
pub struct HttpProvider {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> HttpProvider {
        HttpProvider {
            config,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn send_once(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": req.messages,
            "temperature": req.temperature,
        });
        let mut http = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.config.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| GatewayError::Transport {
            detail: e.to_string(),
        })?;
        if !response.status().is_success() {
            return Err(GatewayError::Transport {
                detail: format!("http status {}", response.status()),
            });
        }
        let parsed: serde_json::Value =
            response.json().map_err(|e| GatewayError::BadResponse {
                detail: e.to_string(),
            })?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| GatewayError::BadResponse {
                detail: "response has no choices[0].message.content".to_string(),
            })
    }
}

impl Provider for HttpProvider {
    fn complete_raw(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        match self.send_once(req) {
            Ok(text) => Ok(text),
            Err(GatewayError::Transport { .. }) => self.send_once(req),
            Err(other) => Err(other),
        }
    }
}

/// Test/stand-in provider driven by a closure.
pub struct FnProvider<F>(pub F);

impl<F> Provider for FnProvider<F>
where
    F: Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync,
{
    fn complete_raw(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        self.0(req)
    }
}

/// Read one HTTP request and answer with a canned chat completion; test
/// support for the HTTP provider.
#[doc(hidden)]
pub fn serve_one_canned_response(listener: std::net::TcpListener, content: &str) {
    let body = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string();
    if let Ok((mut stream, _)) = listener.accept() {
        let mut buf = [0u8; 65536];
        let mut read = 0;
        // read until the end of the request body (headers + declared length)
        loop {
            match stream.read(&mut buf[read..]) {
                Ok(0) => break,
                Ok(n) => {
                    read += n;
                    let text = String::from_utf8_lossy(&buf[..read]);
                    if let Some(header_end) = text.find("\r\n\r\n") {
                        let content_length = text
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap_or(0)))
                            .unwrap_or(0);
                        if read >= header_end + 4 + content_length {
                            break;
                        }
                    }
                }
                Err(_) => break,
            }
        }
        let response = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            body.len(),
            body
        );
        use std::io::Write;
        let _ = stream.write_all(response.as_bytes());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(tag: &str, content: &str) -> ChatRequest {
        ChatRequest::new(tag, vec![Message::user(content)])
    }

    #[test]
    fn replay_serves_entries_in_order() {
        let transcript = Transcript {
            entries: vec![TranscriptEntry {
                tag: "planner.sketch".to_string(),
                request_digest: String::new(),
                response: "SELECT A FROM w".to_string(),
            }],
        };
        let provider = ReplayProvider::new(transcript);
        let session = Session::new(&provider);
        let out = session.complete(&req("planner.sketch", "plan this")).unwrap();
        assert_eq!(out, "SELECT A FROM w");
        let err = session
            .complete(&req("planner.sketch", "again"))
            .unwrap_err();
        assert!(matches!(err, GatewayError::ReplayExhausted { .. }));
    }

    #[test]
    fn replay_tag_mismatch_is_hard_error() {
        let transcript = Transcript {
            entries: vec![TranscriptEntry {
                tag: "planner.sketch".to_string(),
                request_digest: String::new(),
                response: "x".to_string(),
            }],
        };
        let provider = ReplayProvider::new(transcript);
        let session = Session::new(&provider);
        let err = session.complete(&req("analyzer.sql", "q")).unwrap_err();
        assert!(matches!(err, GatewayError::ReplayTagMismatch { .. }));
    }

    #[test]
    fn token_budget_rejects_before_sending() {
        let provider = FnProvider(|_: &ChatRequest| Ok("should not be called".to_string()));
        let session = Session::new(&provider);
        let mut r = req("t", &"word ".repeat(9000));
        r.max_input_tokens = 8192;
        let err = session.complete(&r).unwrap_err();
        match err {
            GatewayError::TokenBudgetExceeded { estimate, limit } => {
                assert_eq!(limit, 8192);
                assert!(estimate >= 9000);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(session.stats().calls, 0);
    }

    #[test]
    fn estimate_matches_text_estimator() {
        assert_eq!(estimate_tokens(&[Message::user("")]), 0);
        assert_eq!(estimate_tokens(&[Message::user("a b")]), 2);
        let md = "| a | b |\n| --- | --- |";
        assert_eq!(
            estimate_tokens(&[Message::user(md)]),
            crate::tokens::estimate(md)
        );
    }

    #[test]
    fn session_records_calls_in_order() {
        let provider = FnProvider(|r: &ChatRequest| Ok(format!("echo:{}", r.tag)));
        let session = Session::new(&provider);
        session.complete(&req("a", "1")).unwrap();
        session.complete(&req("b", "2")).unwrap();
        let rec = session.recording();
        assert_eq!(rec.entries.len(), 2);
        assert_eq!(rec.entries[0].tag, "a");
        assert_eq!(rec.entries[1].tag, "b");
        assert!(!rec.entries[0].request_digest.is_empty());
        assert_eq!(session.stats().calls, 2);
    }

    #[test]
    fn transcript_jsonl_round_trip() {
        let t = Transcript {
            entries: vec![
                TranscriptEntry {
                    tag: "a".to_string(),
                    request_digest: "0123456789abcdef".to_string(),
                    response: "line one\nline two".to_string(),
                },
                TranscriptEntry {
                    tag: "b".to_string(),
                    request_digest: String::new(),
                    response: "x".to_string(),
                },
            ],
        };
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        let back = Transcript::from_jsonl(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn digest_is_stable_and_tag_sensitive() {
        let a = request_digest(&req("t", "hello"));
        let b = request_digest(&req("t", "hello"));
        let c = request_digest(&req("u", "hello"));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn http_provider_round_trip() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            serve_one_canned_response(listener, "the answer");
        });
        let provider = HttpProvider::new(HttpConfig {
            endpoint: format!("http://{addr}/v1/chat/completions"),
            model: "test-model".to_string(),
            api_key: Some("key".to_string()),
        });
        let session = Session::new(&provider);
        let out = session.complete(&req("t", "hi")).unwrap();
        assert_eq!(out, "the answer");
        handle.join().unwrap();
    }
}
