//! Deterministic rule-based sentence segmentation.
//!
//! A boundary is a `.`, `!`, or `?` (plus any trailing closing quotes or
//! brackets) followed by whitespace and an uppercase letter or digit,
//! unless the text before the period ends with a known abbreviation.
//! Redaction offsets depend on this being stable, so no model-based
//! splitting.

use alloc::vec::Vec;

/// Abbreviations that do not end a sentence, matched case-insensitively
/// against the text ending at the candidate period.
const ABBREVIATIONS: &[&str] = &["e.g.", "i.e.", "et al.", "fig.", "eq.", "dr.", "vs."];

fn is_terminal(ch: char) -> bool {
    matches!(ch, '.' | '!' | '?')
}

fn is_closer(ch: char) -> bool {
    matches!(ch, ')' | ']' | '"' | '\'' | '\u{201d}' | '\u{2019}')
}

fn ends_with_abbreviation(text: &str, end: usize) -> bool {
    let head = &text[..end];
    ABBREVIATIONS.iter().any(|abbr| {
        head.len() >= abbr.len()
            && head
                .get(head.len() - abbr.len()..)
                .is_some_and(|tail| tail.eq_ignore_ascii_case(abbr))
    })
}

/// Split `text` into sentence byte-offset spans `(start, end)`.
///
/// Spans are sorted, non-overlapping, and cover every non-whitespace
/// character; the gaps between them are whitespace only.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start: Option<usize> = None;
    let mut last_non_ws_end = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (off, ch) = chars[i];
        if !ch.is_whitespace() {
            if start.is_none() {
                start = Some(off);
            }
            last_non_ws_end = off + ch.len_utf8();
        }
        if is_terminal(ch) && start.is_some() {
            let punct_end = off + ch.len_utf8();
            // Fold in immediately following terminal punctuation and closers.
            let mut j = i + 1;
            let mut end = punct_end;
            while j < chars.len() && (is_terminal(chars[j].1) || is_closer(chars[j].1)) {
                end = chars[j].0 + chars[j].1.len_utf8();
                j += 1;
            }
            // Boundary requires whitespace then uppercase/digit.
            let mut k = j;
            let mut saw_ws = false;
            while k < chars.len() && chars[k].1.is_whitespace() {
                saw_ws = true;
                k += 1;
            }
            let next_starts_sentence =
                k < chars.len() && (chars[k].1.is_uppercase() || chars[k].1.is_ascii_digit());
            let at_eof = k >= chars.len();
            if (at_eof || (saw_ws && next_starts_sentence))
                && !(ch == '.' && ends_with_abbreviation(text, punct_end))
            {
                spans.push((start.take().unwrap(), end));
                last_non_ws_end = end;
                i = j;
                continue;
            }
            i = j;
            last_non_ws_end = end;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        if last_non_ws_end > s {
            spans.push((s, last_non_ws_end));
        }
    }
    spans
}

/// The sentence texts themselves, in order.
pub fn sentence_texts<'a>(text: &'a str, spans: &[(usize, usize)]) -> Vec<&'a str> {
    spans.iter().map(|&(s, e)| &text[s..e]).collect()
}
