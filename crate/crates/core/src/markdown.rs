//! Markdown readme files to plain text.
//!
//! Code fences collapse to a single `[CODE]` token, images and badges are
//! dropped, link text is kept, heading text stays inline. Markdown is
//! never fatally malformed; the worst case is the identity text.

use alloc::string::String;
use alloc::vec::Vec;

use crate::passage::Passage;

/// Reduce a Markdown document to a passage.
pub fn markdown_to_text(doc_id: &str, source: &str) -> Passage {
    let mut lines_out: Vec<String> = Vec::new();
    let mut in_fence: Option<&'static str> = None;
    for line in source.lines() {
        let trimmed = line.trim_start();
        if let Some(closer) = in_fence {
            if trimmed.starts_with(closer) {
                in_fence = None;
            }
            continue;
        }
        if trimmed.starts_with("```") {
            in_fence = Some("```");
            lines_out.push(String::from("[CODE]"));
            continue;
        }
        if trimmed.starts_with("~~~") {
            in_fence = Some("~~~");
            lines_out.push(String::from("[CODE]"));
            continue;
        }
        lines_out.push(render_line(line));
    }
    // An unterminated fence swallows the rest of the file; the [CODE]
    // marker was already emitted.
    let mut body = String::new();
    let mut prev_blank = true;
    for line in &lines_out {
        let is_blank = line.trim().is_empty();
        if is_blank && prev_blank {
            continue;
        }
        body.push_str(line.trim_end());
        body.push('\n');
        prev_blank = is_blank;
    }
    Passage::from_text(doc_id, "readme", body.trim())
}

/// Inline markup of one line.
fn render_line(line: &str) -> String {
    let mut s = line.trim_end();
    // Heading markers: text retained inline.
    let t = s.trim_start();
    if let Some(stripped) = t.strip_prefix('#') {
        let rest = stripped.trim_start_matches('#');
        s = rest.strip_prefix(' ').unwrap_or(rest);
    }
    // Horizontal rules and table separator rows vanish.
    let bare: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if !bare.is_empty() && bare.chars().all(|c| matches!(c, '-' | '=' | '*' | '_' | '|' | ':')) {
        return String::new();
    }

    let mut out = String::with_capacity(s.len());
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        match chars[i] {
            '!' if chars.get(i + 1) == Some(&'[') => {
                // Image (or badge): dropped entirely, including a wrapping
                // link target if the image is itself a link label.
                match skip_link(&chars, i + 1) {
                    Some(end) => i = end,
                    None => {
                        out.push('!');
                        i += 1;
                    }
                }
            }
            '[' => match read_link(&chars, i) {
                Some((label, end)) => {
                    // Badge-only labels ([![..](..)](..)) reduce to nothing.
                    out.push_str(&render_label(&label));
                    i = end;
                }
                None => {
                    out.push('[');
                    i += 1;
                }
            },
            '`' => {
                // Inline code: keep the content, drop the backticks.
                i += 1;
            }
            '*' | '_' => {
                i += 1;
            }
            '|' => {
                // Table cell separators become spaces.
                out.push(' ');
                i += 1;
            }
            '<' => {
                // Inline HTML tag: skip to '>'.
                match chars[i..].iter().position(|&c| c == '>') {
                    Some(rel) => i += rel + 1,
                    None => {
                        out.push('<');
                        i += 1;
                    }
                }
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    collapse(&out)
}

fn render_label(label: &str) -> String {
    // The label may itself contain an image (badge); recurse.
    render_line(label)
}

/// Parse `[label](target)` or `[label][ref]` at `chars[i] == '['`;
/// returns (label, index past the construct).
fn read_link(chars: &[char], i: usize) -> Option<(String, usize)> {
    debug_assert_eq!(chars[i], '[');
    let mut depth = 0usize;
    let mut j = i;
    while j < chars.len() {
        match chars[j] {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            _ => {}
        }
        j += 1;
    }
    if j >= chars.len() {
        return None;
    }
    let label: String = chars[i + 1..j].iter().collect();
    let mut end = j + 1;
    match chars.get(end) {
        Some('(') => {
            let close = chars[end..].iter().position(|&c| c == ')')?;
            end += close + 1;
        }
        Some('[') => {
            let close = chars[end..].iter().position(|&c| c == ']')?;
            end += close + 1;
        }
        _ => {}
    }
    Some((label, end))
}

/// Skip a link construct entirely (used for images); returns index past it.
fn skip_link(chars: &[char], i: usize) -> Option<usize> {
    read_link(chars, i).map(|(_, end)| end)
}

fn collapse(s: &str) -> String {
    let words: Vec<&str> = s.split(' ').filter(|w| !w.is_empty()).collect();
    let joined = words.join(" ");
    // Preserve leading list markers' indentation-free form.
    joined
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_fence_becomes_single_token() {
        let mut src = String::from("Intro line.\n\n```rust\n");
        for i in 0..40 {
            src.push_str(&format!("let x{i} = {i};\n"));
        }
        src.push_str("```\n\nOutro line.\n");
        let p = markdown_to_text("d", &src);
        assert_eq!(p.text.matches("[CODE]").count(), 1);
        assert!(p.text.contains("Intro line."));
        assert!(p.text.contains("Outro line."));
        assert!(!p.text.contains("let x3"));
    }

    #[test]
    fn plain_paragraphs_are_identity() {
        let src = "First paragraph here.\n\nSecond paragraph here.";
        let p = markdown_to_text("d", src);
        assert_eq!(p.text, src);
    }

    #[test]
    fn link_text_kept_target_dropped() {
        let p = markdown_to_text("d", "See [docs](http://x) now.");
        assert_eq!(p.text, "See docs now.");
        let p = markdown_to_text("d", "See [docs][ref] now.");
        assert_eq!(p.text, "See docs now.");
    }

    #[test]
    fn images_and_badges_dropped() {
        let p = markdown_to_text("d", "![logo](logo.png) Title text");
        assert_eq!(p.text, "Title text");
        let p = markdown_to_text("d", "[![build](badge.svg)](http://ci) Real content");
        assert_eq!(p.text, "Real content");
    }

    #[test]
    fn headings_inline_and_rules_dropped() {
        let p = markdown_to_text("d", "# My Project\n\nBody text.\n\n---\n\nMore.");
        assert!(p.text.starts_with("My Project"));
        assert!(!p.text.contains("---"));
        assert!(p.text.contains("More."));
    }

    #[test]
    fn inline_code_and_emphasis_unwrapped() {
        let p = markdown_to_text("d", "Run `cargo build` with *care* and _style_.");
        assert_eq!(p.text, "Run cargo build with care and style.");
    }
}
