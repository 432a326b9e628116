//! Word counting, match normalization, and content-word tokenization.
//!
//! One definition of "word" is shared pipeline-wide: a maximal run of
//! non-whitespace characters after Unicode NFC normalization.

use alloc::string::String;
use alloc::vec::Vec;
use unicode_normalization::UnicodeNormalization;

/// NFC-normalize text. Word counts and token streams are taken on the
/// normalized form so visually identical inputs count identically.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Number of words: maximal non-whitespace runs after NFC normalization.
pub fn word_count(text: &str) -> usize {
    nfc(text).split_whitespace().count()
}

/// The first `n` words of `text`, joined by single spaces.
pub fn first_words(text: &str, n: usize) -> String {
    let owned = nfc(text);
    let words: Vec<&str> = owned.split_whitespace().take(n).collect();
    words.join(" ")
}

/// Matching normalization: lowercase, punctuation replaced by spaces,
/// whitespace collapsed. Used for leak checks and exact-match style
/// comparisons.
pub fn normalize_match(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.nfc() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            for lc in ch.to_lowercase() {
                out.push(lc);
            }
        } else {
            pending_space = true;
        }
    }
    out
}

/// Like [`normalize_match`] but also returns, for each char of the
/// normalized output, the byte offset in the original text it came from.
/// Lets leak scanners report locations in the un-normalized text.
pub fn normalize_match_with_map(text: &str) -> (String, Vec<usize>) {
    // NFC can merge characters; map positions through the original string
    // directly (NFC rarely matters for offsets, and the map is advisory).
    let mut out = String::with_capacity(text.len());
    let mut map = Vec::with_capacity(text.len());
    let mut pending_space = false;
    for (off, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
                map.push(off);
            }
            pending_space = false;
            for lc in ch.to_lowercase() {
                out.push(lc);
                map.push(off);
            }
        } else {
            pending_space = true;
        }
    }
    (out, map)
}

/// Normalized word tokens of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    normalize_match(text).split_whitespace().map(String::from).collect()
}

/// Normalized tokens with stop-words removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokens(text).into_iter().filter(|t| !is_stop_word(t)).collect()
}

/// Word tokens of `text` with their byte offset ranges in the original
/// string. Tokens are the raw non-whitespace runs, un-normalized.
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// First occurrence of `needle` in `haystack[from..]` whose alphanumeric
/// edges fall on word boundaries.
pub fn find_word_bounded(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let mut search = from;
    while let Some(rel) = haystack.get(search..)?.find(needle) {
        let at = search + rel;
        let before_ok = at == 0
            || !haystack[..at].chars().next_back().is_some_and(char::is_alphanumeric)
            || !needle.chars().next().is_some_and(char::is_alphanumeric);
        let end = at + needle.len();
        let after_ok = end >= haystack.len()
            || !haystack[end..].chars().next().is_some_and(char::is_alphanumeric)
            || !needle.chars().next_back().is_some_and(char::is_alphanumeric);
        if before_ok && after_ok {
            return Some(at);
        }
        search = at + 1;
    }
    None
}

pub fn is_stop_word(word: &str) -> bool {
    STOP_WORDS.binary_search(&word).is_ok()
}

// Standard English stop-word list; must stay sorted for binary search.
pub const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "cannot", "could", "did", "do", "does", "doing", "down", "during", "each",
    "few", "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor",
    "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
    "out", "over", "own", "same", "shall", "she", "should", "so", "some", "such", "than", "that",
    "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "upon", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would",
    "you", "your", "yours", "yourself", "yourselves",
];
