//! Character-bigram language model used as an offline log-probability
//! backend. Training it on a corpus makes that corpus "contaminated by
//! construction", which gives the perplexity probe a controllable
//! oracle.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::llm::{LlmError, LogprobSequence, ScoreClient};

/// A character-bigram model with additive smoothing. Tokens are single
/// characters; the first character of a scored text is the unconditioned
/// prefix and carries no logprob.
#[derive(Debug, Clone)]
pub struct CharBigram {
    /// counts[(prev, next)]
    pair_counts: BTreeMap<(char, char), u64>,
    /// counts[prev] = total continuations observed after prev
    prev_counts: BTreeMap<char, u64>,
    alphabet: Vec<char>,
    /// Additive smoothing constant. 0 gives the maximum-likelihood
    /// estimate; unseen pairs are then floored to a tiny probability so
    /// logprobs stay finite.
    alpha: f64,
}

/// Floor probability for unseen transitions under alpha = 0.
const MLE_FLOOR: f64 = 1e-12;

impl CharBigram {
    pub fn train(corpus: &str, alpha: f64) -> CharBigram {
        let mut pair_counts: BTreeMap<(char, char), u64> = BTreeMap::new();
        let mut prev_counts: BTreeMap<char, u64> = BTreeMap::new();
        let mut alphabet: Vec<char> = Vec::new();
        let mut prev: Option<char> = None;
        for ch in corpus.chars() {
            if !alphabet.contains(&ch) {
                alphabet.push(ch);
            }
            if let Some(p) = prev {
                *pair_counts.entry((p, ch)).or_insert(0) += 1;
                *prev_counts.entry(p).or_insert(0) += 1;
            }
            prev = Some(ch);
        }
        alphabet.sort_unstable();
        CharBigram { pair_counts, prev_counts, alphabet, alpha }
    }

    /// P(next | prev) with additive smoothing over the training alphabet.
    pub fn prob(&self, prev: char, next: char) -> f64 {
        let pair = self.pair_counts.get(&(prev, next)).copied().unwrap_or(0) as f64;
        let total = self.prev_counts.get(&prev).copied().unwrap_or(0) as f64;
        let v = self.alphabet.len().max(1) as f64;
        if self.alpha > 0.0 {
            (pair + self.alpha) / (total + self.alpha * v)
        } else if total > 0.0 && pair > 0.0 {
            pair / total
        } else {
            MLE_FLOOR
        }
    }

    pub fn logprob(&self, prev: char, next: char) -> f64 {
        libm::log(self.prob(prev, next))
    }
}

impl ScoreClient for CharBigram {
    fn score_logprobs(&self, _model_id: &str, text: &str) -> Result<LogprobSequence, LlmError> {
        let chars: Vec<char> = text.chars().collect();
        if chars.is_empty() {
            return Err(LlmError::BadResponse("empty text".into()));
        }
        let mut tokens: Vec<String> = Vec::with_capacity(chars.len());
        let mut logprobs: Vec<f64> = Vec::with_capacity(chars.len());
        for (i, &ch) in chars.iter().enumerate() {
            tokens.push(ch.to_string());
            if i == 0 {
                logprobs.push(0.0);
            } else {
                logprobs.push(self.logprob(chars[i - 1], ch).min(0.0));
            }
        }
        let seq = LogprobSequence { tokens, logprobs, skipped_prefix: 1 };
        seq.validate()?;
        Ok(seq)
    }
}
