//! Model access for the pipeline: a caching, retrying wrapper usable
//! over any chat backend, an HTTP adapter for chat-completion style
//! endpoints, and deterministic stub clients for offline runs and tests.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use benchforge_core::llm::{ChatClient, ChatRequest, LlmError, LogprobSequence, ScoreClient};
use benchforge_core::sentence;
use benchforge_core::text;
use serde::{Deserialize, Serialize};

/// Attempts for Timeout/RateLimited errors, including the first call.
pub const MAX_ATTEMPTS: u32 = 5;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CallCounters {
    /// Calls that reached the wrapped backend.
    pub backend_calls: usize,
    /// Requests answered from the disk cache.
    pub cache_hits: usize,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    reply: String,
}

/// Disk-caching, retrying chat client. The cache key is the hash of the
/// canonical request; entries live at `cache/<model_id>/<hash>.json`.
pub struct CachedChat {
    inner: Box<dyn ChatClient>,
    cache_dir: Option<PathBuf>,
    /// Base backoff delay; doubled per retry. Zero in tests.
    base_delay: Duration,
    counters: RefCell<CallCounters>,
}

impl CachedChat {
    pub fn new(inner: Box<dyn ChatClient>, cache_dir: Option<PathBuf>) -> CachedChat {
        CachedChat {
            inner,
            cache_dir,
            base_delay: Duration::from_millis(500),
            counters: RefCell::new(CallCounters::default()),
        }
    }

    pub fn without_backoff(mut self) -> CachedChat {
        self.base_delay = Duration::ZERO;
        self
    }

    pub fn counters(&self) -> CallCounters {
        *self.counters.borrow()
    }

    fn cache_path(&self, req: &ChatRequest) -> Option<PathBuf> {
        let dir = self.cache_dir.as_ref()?.join(&req.model_id);
        Some(dir.join(format!("{}.json", req.cache_key())))
    }
}

impl ChatClient for CachedChat {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        if let Some(path) = self.cache_path(req) {
            if let Ok(bytes) = std::fs::read(&path) {
                if let Ok(entry) = serde_json::from_slice::<CacheEntry>(&bytes) {
                    self.counters.borrow_mut().cache_hits += 1;
                    return Ok(entry.reply);
                }
            }
        }
        let mut delay = self.base_delay;
        let mut last_err = LlmError::Timeout;
        for attempt in 0..MAX_ATTEMPTS {
            self.counters.borrow_mut().backend_calls += 1;
            match self.inner.chat(req) {
                Ok(reply) => {
                    if let Some(path) = self.cache_path(req) {
                        if let Some(parent) = path.parent() {
                            let _ = std::fs::create_dir_all(parent);
                        }
                        if let Ok(body) = serde_json::to_vec(&CacheEntry { reply: reply.clone() }) {
                            let _ = std::fs::write(&path, body);
                        }
                    }
                    return Ok(reply);
                }
                Err(e @ (LlmError::Timeout | LlmError::RateLimited { .. })) => {
                    last_err = e;
                    if attempt + 1 < MAX_ATTEMPTS && !delay.is_zero() {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err)
    }
}

// ---------------------------------------------------------------------------
// HTTP adapter

/// Chat-completion style HTTP backend with an echo-logprobs scoring
/// mode.
///
/// Wire format, POST `<base_url>/chat`:
/// `{"model", "messages": [{"role", "content"}], "temperature",
///   "max_tokens", "seed"}` -> `{"content": "..."}`.
/// POST `<base_url>/score`:
/// `{"model", "text", "echo": true}` ->
/// `{"tokens": [...], "logprobs": [...], "skipped_prefix": 1}`.
pub struct HttpLlm {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpLlm {
    pub fn new(base_url: impl Into<String>, api_key_env: Option<&str>) -> Result<HttpLlm, LlmError> {
        let timeout = std::env::var(crate::transport::HTTP_TIMEOUT_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(30);
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let api_key = api_key_env.and_then(|var| std::env::var(var).ok());
        Ok(HttpLlm { base_url: base_url.into(), api_key, client })
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<serde_json::Value, LlmError> {
        let mut req = self.client.post(format!("{}/{path}", self.base_url.trim_end_matches('/')));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.json(&body).send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        if resp.status().as_u16() == 429 {
            let retry_after_secs = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse().ok())
                .unwrap_or(1);
            return Err(LlmError::RateLimited { retry_after_secs });
        }
        if !resp.status().is_success() {
            return Err(LlmError::BadResponse(format!("http status {}", resp.status())));
        }
        resp.json().map_err(|e| LlmError::BadResponse(e.to_string()))
    }
}

impl ChatClient for HttpLlm {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let messages: Vec<serde_json::Value> = req
            .messages
            .iter()
            .map(|m| serde_json::json!({"role": m.role.as_str(), "content": m.text}))
            .collect();
        let body = serde_json::json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "seed": req.seed,
        });
        let reply = self.post("chat", body)?;
        reply
            .get("content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| LlmError::BadResponse("missing content field".into()))
    }
}

impl ScoreClient for HttpLlm {
    fn score_logprobs(&self, model_id: &str, scored_text: &str) -> Result<LogprobSequence, LlmError> {
        if scored_text.is_empty() {
            return Err(LlmError::BadResponse("empty text".into()));
        }
        let body = serde_json::json!({"model": model_id, "text": scored_text, "echo": true});
        let reply = match self.post("score", body) {
            Err(LlmError::BadResponse(msg)) if msg.contains("404") => {
                return Err(LlmError::UnsupportedCapability)
            }
            other => other?,
        };
        let seq: LogprobSequence =
            serde_json::from_value(reply).map_err(|e| LlmError::BadResponse(e.to_string()))?;
        seq.validate()?;
        Ok(seq)
    }
}

// ---------------------------------------------------------------------------
// Stubs

/// Scripted stub: exact prompt -> reply; anything else is BadResponse.
#[derive(Default)]
pub struct TranscriptStub {
    replies: BTreeMap<String, String>,
    calls: RefCell<usize>,
}

impl TranscriptStub {
    pub fn new() -> TranscriptStub {
        TranscriptStub::default()
    }

    pub fn script(&mut self, prompt: impl Into<String>, reply: impl Into<String>) {
        self.replies.insert(prompt.into(), reply.into());
    }

    pub fn calls(&self) -> usize {
        *self.calls.borrow()
    }
}

impl ChatClient for TranscriptStub {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        *self.calls.borrow_mut() += 1;
        self.replies
            .get(&req.prompt_text())
            .cloned()
            .ok_or_else(|| LlmError::BadResponse("unscripted prompt".into()))
    }
}

/// Deterministic rule-based stub that recognizes each of the pipeline's
/// own prompt shapes and answers them faithfully from the prompt text.
/// Makes full offline runs possible without transcripts.
pub struct RuleStubClient;

fn between<'t>(text: &'t str, after: &str, before: &str) -> Option<&'t str> {
    let s = text.find(after)? + after.len();
    let e = text[s..].find(before)? + s;
    Some(text[s..e].trim())
}

fn overlap_score(reference: &str, candidate: &str) -> f64 {
    let ref_tokens = text::content_tokens(reference);
    if ref_tokens.is_empty() {
        return 0.0;
    }
    let cand: std::collections::BTreeSet<String> = text::tokens(candidate).into_iter().collect();
    let hits = ref_tokens.iter().filter(|t| cand.contains(*t)).count();
    hits as f64 / ref_tokens.len() as f64
}

fn first_sentence(s: &str) -> &str {
    match sentence::split_sentences(s).first() {
        Some(&(a, b)) => &s[a..b],
        None => s,
    }
}

impl ChatClient for RuleStubClient {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let prompt = req.prompt_text();

        // Definition extraction: echo the first context sentence that
        // mentions the term.
        if prompt.contains("Please extract the definition of the term ") {
            let term = between(&prompt, "of the term ", " that the above sentences")
                .unwrap_or_default()
                .to_string();
            let context = prompt
                .split(". Please extract the definition")
                .next()
                .unwrap_or_default();
            let lower_term = term.to_lowercase();
            for (a, b) in sentence::split_sentences(context) {
                let sent = &context[a..b];
                if sent.to_lowercase().contains(&lower_term) {
                    return Ok(sent.to_string());
                }
            }
            return Ok("No explicit definition found.".into());
        }

        // Cue distillation: copy the given sentence back.
        if prompt.contains("From the sentence above, extract the analysis about") {
            let sent = prompt.split("\n\nFrom the sentence above").next().unwrap_or_default();
            return Ok(sent.trim().to_string());
        }

        // Placeholder generation: a safe content-free sentence.
        if prompt.contains("generate a placeholder sentence considering the following examples") {
            return Ok("The relevant information is explained here.".into());
        }

        // Keyphrase listing for long passages: first words of the passage.
        if prompt.starts_with("Extract the most important key terms") {
            let passage = prompt.split("Passage:\n").nth(1).unwrap_or_default();
            let head: Vec<&str> = passage.split_whitespace().take(2).collect();
            return Ok(head.join(" "));
        }

        // Template choice: defer to the caller's fallback path.
        if prompt.contains("Select the most suitable template") {
            return Ok("{\"template\": 0, \"slots\": {}}".into());
        }

        // Candidate answering: quote the passage's first sentence.
        if prompt.starts_with("Answer the question based on the passage below") {
            let passage = between(&prompt, "Passage:\n", "\n\nQuestion:").unwrap_or_default();
            return Ok(first_sentence(passage).to_string());
        }

        // Single-answer judging: score by content overlap with the
        // reference.
        if prompt.contains("Reply with a line of the form \"Score:") {
            let reference =
                between(&prompt, "Reference answer: ", "\n\nCandidate answer:").unwrap_or_default();
            let candidate =
                between(&prompt, "Candidate answer: ", "\n\nRate the candidate").unwrap_or_default();
            let score = 1 + (overlap_score(reference, candidate) * 9.0).round() as u8;
            return Ok(format!("Score: {score}"));
        }

        // Pairwise judging: higher reference overlap wins.
        if prompt.contains("Reply with exactly one of") {
            let reference = between(&prompt, "Reference answer: ", "\n\nAnswer A:").unwrap_or_default();
            let a = between(&prompt, "Answer A: ", "\n\nAnswer B:").unwrap_or_default();
            let b = between(&prompt, "Answer B: ", "\n\nWhich answer").unwrap_or_default();
            let (sa, sb) = (overlap_score(reference, a), overlap_score(reference, b));
            return Ok(if (sa - sb).abs() < 1e-9 {
                "[[Tie]]".into()
            } else if sa > sb {
                "[[A]]".into()
            } else {
                "[[B]]".into()
            });
        }

        Err(LlmError::BadResponse("unrecognized prompt shape".into()))
    }
}

/// Echoes the prompt back. Useful as a no-memorisation baseline for the
/// reconstruction probe: the echo is the prefix itself, so any match
/// with the hidden suffix is accidental.
pub struct EchoClient;

impl ChatClient for EchoClient {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        Ok(req.prompt_text())
    }
}

/// Declines every question. A deliberately weak candidate for eval runs.
pub struct DeclineClient;

impl ChatClient for DeclineClient {
    fn chat(&self, _req: &ChatRequest) -> Result<String, LlmError> {
        Ok("I do not know.".into())
    }
}
