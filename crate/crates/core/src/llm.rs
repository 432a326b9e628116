//! Model-access contracts: chat requests, token log-probability
//! sequences, and the client traits the pipeline depends on. Transport
//! implementations (HTTP, disk cache, scripted stubs) live in the std
//! companion crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use serde::{Deserialize, Serialize};

use crate::hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

impl Message {
    pub fn user(text: impl Into<String>) -> Message {
        Message { role: Role::User, text: text.into() }
    }

    pub fn system(text: impl Into<String>) -> Message {
        Message { role: Role::System, text: text.into() }
    }
}

/// A chat-completion request. Pipeline-internal calls always use
/// temperature 0 so re-runs are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(model_id: impl Into<String>, prompt: impl Into<String>) -> ChatRequest {
        ChatRequest {
            model_id: model_id.into(),
            messages: alloc::vec![Message::user(prompt)],
            temperature: 0.0,
            max_tokens: 1024,
            seed: None,
        }
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> ChatRequest {
        self.max_tokens = max_tokens;
        self
    }

    /// Canonical serialization of the request; equal requests hash equal.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "model={}\u{1f}temp={}\u{1f}max={}\u{1f}", self.model_id, self.temperature, self.max_tokens);
        if let Some(seed) = self.seed {
            let _ = write!(s, "seed={seed}\u{1f}");
        }
        for m in &self.messages {
            let _ = write!(s, "{}\u{1e}{}\u{1f}", m.role.as_str(), m.text);
        }
        s
    }

    /// Stable cache key for this request.
    pub fn cache_key(&self) -> String {
        hash::stable_id(self.canonical().as_bytes())
    }

    /// The concatenated user-visible prompt text (for stub matching).
    pub fn prompt_text(&self) -> String {
        let mut s = String::new();
        for m in &self.messages {
            if !s.is_empty() {
                s.push('\n');
            }
            s.push_str(&m.text);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited, retry after {retry_after_secs}s")]
    RateLimited { retry_after_secs: u64 },
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("endpoint cannot echo-score log probabilities")]
    UnsupportedCapability,
    #[error("transport failure: {0}")]
    Transport(String),
}

/// Chat-style text generation.
pub trait ChatClient {
    fn chat(&self, req: &ChatRequest) -> Result<String, LlmError>;
}

/// Per-token log-probability scoring of a given text (echo mode).
pub trait ScoreClient {
    fn score_logprobs(&self, model_id: &str, text: &str) -> Result<LogprobSequence, LlmError>;
}

/// Per-token log-probabilities for a scored text. The first
/// `skipped_prefix` tokens carry no usable logprob (the leading token is
/// unconditioned) and are excluded from aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobSequence {
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
    pub skipped_prefix: usize,
}

impl LogprobSequence {
    /// Check the structural invariants: equal lengths, finite non-positive
    /// scored logprobs, skipped prefix shorter than the sequence.
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.tokens.len() != self.logprobs.len() {
            return Err(LlmError::BadResponse(String::from("token/logprob length mismatch")));
        }
        if self.tokens.is_empty() {
            return Err(LlmError::BadResponse(String::from("empty sequence")));
        }
        if self.skipped_prefix >= self.tokens.len() {
            return Err(LlmError::BadResponse(String::from("skipped prefix covers whole sequence")));
        }
        for &lp in &self.logprobs[self.skipped_prefix..] {
            if !lp.is_finite() || lp > 0.0 {
                return Err(LlmError::BadResponse(String::from("non-finite or positive logprob")));
            }
        }
        Ok(())
    }

    /// The logprobs that actually count.
    pub fn scored(&self) -> &[f64] {
        &self.logprobs[self.skipped_prefix..]
    }
}
