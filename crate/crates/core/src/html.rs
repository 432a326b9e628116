//! HTML article pages to plain text, plus link extraction for the
//! front-page collector.
//!
//! Boilerplate containers (navigation, headers, footers, scripts) are
//! dropped wholesale; the article body is preferred when an `<article>`
//! or `<main>` element exists. Entities are decoded, block elements
//! become line breaks.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::passage::Passage;
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HtmlError {
    #[error("article body extraction produced {words} words (minimum {min})")]
    EmptyBody { words: usize, min: usize },
}

/// Minimum body length for a usable article.
pub const MIN_BODY_WORDS: usize = 50;

// Containers whose entire content is boilerplate for article purposes.
const DROP_CONTAINERS: &[&str] = &[
    "script", "style", "noscript", "svg", "head", "nav", "header", "footer", "aside", "form",
    "button", "figure", "template", "iframe",
];

const BLOCK_TAGS: &[&str] = &[
    "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table",
    "section", "article", "blockquote", "pre", "main",
];

/// Reduce an HTML article page to a passage; title and description land
/// in passage metadata.
pub fn html_article_to_text(doc_id: &str, html: &str) -> Result<Passage, HtmlError> {
    let title = extract_title(html);
    let description = extract_meta_description(html);

    let scope = element_content(html, "article")
        .or_else(|| element_content(html, "main"))
        .or_else(|| element_content(html, "body"))
        .unwrap_or(html);
    let body = tidy(&render_text(scope));

    let words = text::word_count(&body);
    if words < MIN_BODY_WORDS {
        return Err(HtmlError::EmptyBody { words, min: MIN_BODY_WORDS });
    }
    let mut passage = Passage::from_text(doc_id, "article-body", &body);
    if let Some(t) = title {
        passage.meta.insert("title".to_owned(), t);
    }
    if let Some(d) = description {
        passage.meta.insert("description".to_owned(), d);
    }
    Ok(passage)
}

/// All `<a href=...>` targets with their anchor text, in document order.
pub fn extract_links(html: &str) -> Vec<(String, String)> {
    let mut links = Vec::new();
    let mut i = 0usize;
    while let Some(rel) = html[i..].find('<') {
        let at = i + rel;
        let Some(tag) = parse_tag(html, at) else {
            i = at + 1;
            continue;
        };
        if tag.name == "a" && !tag.closing {
            if let Some(href) = tag.attr("href") {
                let inner_start = tag.end;
                let inner_end = html[inner_start..]
                    .find("</a")
                    .map(|r| inner_start + r)
                    .unwrap_or(html.len());
                let label = tidy(&render_text(&html[inner_start..inner_end]));
                links.push((href, label));
                i = inner_end;
                continue;
            }
        }
        i = tag.end;
    }
    links
}

pub fn extract_title(html: &str) -> Option<String> {
    element_content(html, "title")
        .map(|t| tidy(&decode_entities(&strip_tags(t))))
        .filter(|t| !t.is_empty())
        .or_else(|| meta_content(html, "property", "og:title"))
}

pub fn extract_meta_description(html: &str) -> Option<String> {
    meta_content(html, "name", "description")
        .or_else(|| meta_content(html, "property", "og:description"))
}

struct Tag {
    name: String,
    closing: bool,
    raw_attrs: String,
    /// Byte offset just past the `>`.
    end: usize,
}

impl Tag {
    fn attr(&self, name: &str) -> Option<String> {
        let lower = self.raw_attrs.to_lowercase();
        let mut search = 0usize;
        loop {
            let rel = lower[search..].find(name)?;
            let at = search + rel;
            // Must be a standalone attribute name followed by '='.
            let before_ok = at == 0
                || !lower.as_bytes()[at - 1].is_ascii_alphanumeric() && lower.as_bytes()[at - 1] != b'-';
            let after = at + name.len();
            let rest = lower[after..].trim_start();
            if before_ok && rest.starts_with('=') {
                let eq_at = after + (lower[after..].len() - lower[after..].trim_start().len());
                let mut val_at = eq_at + 1;
                while self.raw_attrs[val_at..].starts_with(char::is_whitespace) {
                    val_at += 1;
                }
                let bytes = self.raw_attrs.as_bytes();
                return Some(match bytes.get(val_at) {
                    Some(&q @ (b'"' | b'\'')) => {
                        let from = val_at + 1;
                        let close = self.raw_attrs[from..]
                            .find(q as char)
                            .map(|r| from + r)
                            .unwrap_or(self.raw_attrs.len());
                        decode_entities(&self.raw_attrs[from..close])
                    }
                    _ => {
                        let end = self.raw_attrs[val_at..]
                            .find(char::is_whitespace)
                            .map(|r| val_at + r)
                            .unwrap_or(self.raw_attrs.len());
                        decode_entities(&self.raw_attrs[val_at..end])
                    }
                });
            }
            search = at + name.len();
        }
    }
}

/// Parse the tag starting at `html[at] == '<'`; returns None for
/// comments, doctype, and malformed tags (comments are skipped by the
/// caller advancing past `end`).
fn parse_tag(html: &str, at: usize) -> Option<Tag> {
    if at >= html.len() {
        return None;
    }
    let rest = &html[at..];
    if rest.starts_with("<!--") {
        let end = rest.find("-->").map(|r| at + r + 3).unwrap_or(html.len());
        return Some(Tag { name: "!--".to_string(), closing: false, raw_attrs: String::new(), end });
    }
    if rest.starts_with("<!") || rest.starts_with("<?") {
        let end = rest.find('>').map(|r| at + r + 1).unwrap_or(html.len());
        return Some(Tag { name: "!".to_string(), closing: false, raw_attrs: String::new(), end });
    }
    let mut j = at + 1;
    let closing = html.as_bytes().get(j) == Some(&b'/');
    if closing {
        j += 1;
    }
    let name_start = j;
    let bytes = html.as_bytes();
    while j < html.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'-') {
        j += 1;
    }
    if j == name_start {
        return None;
    }
    let name = html[name_start..j].to_lowercase();
    // Find '>' outside quotes.
    let mut quote: Option<u8> = None;
    let mut end = html.len();
    let mut k = j;
    while k < html.len() {
        let b = bytes[k];
        match quote {
            Some(q) => {
                if b == q {
                    quote = None;
                }
            }
            None => {
                if b == b'"' || b == b'\'' {
                    quote = Some(b);
                } else if b == b'>' {
                    end = k + 1;
                    break;
                }
            }
        }
        k += 1;
    }
    let raw_attrs = html[j..end.saturating_sub(1).max(j)].to_owned();
    Some(Tag { name, closing, raw_attrs, end })
}

/// Content of the first `<tag ...>...</tag>` element.
fn element_content<'a>(html: &'a str, tag_name: &str) -> Option<&'a str> {
    let mut i = 0usize;
    while let Some(rel) = html[i..].find('<') {
        let at = i + rel;
        match parse_tag(html, at) {
            Some(tag) if tag.name == tag_name && !tag.closing => {
                let start = tag.end;
                let close = find_closing(html, start, tag_name);
                return Some(&html[start..close]);
            }
            Some(tag) => i = tag.end.max(at + 1),
            None => i = at + 1,
        }
    }
    None
}

/// Offset of the matching `</tag>`, counting nesting; end of input if
/// unclosed.
fn find_closing(html: &str, from: usize, tag_name: &str) -> usize {
    let mut depth = 1usize;
    let mut i = from;
    while let Some(rel) = html[i..].find('<') {
        let at = i + rel;
        match parse_tag(html, at) {
            Some(tag) if tag.name == tag_name => {
                if tag.closing {
                    depth -= 1;
                    if depth == 0 {
                        return at;
                    }
                } else if !html[at..tag.end].trim_end_matches('>').ends_with('/') {
                    depth += 1;
                }
                i = tag.end;
            }
            Some(tag) => i = tag.end.max(at + 1),
            None => i = at + 1,
        }
    }
    html.len()
}

fn meta_content(html: &str, key: &str, value: &str) -> Option<String> {
    let mut i = 0usize;
    while let Some(rel) = html[i..].find('<') {
        let at = i + rel;
        match parse_tag(html, at) {
            Some(tag) => {
                if tag.name == "meta"
                    && tag.attr(key).is_some_and(|v| v.eq_ignore_ascii_case(value))
                {
                    return tag.attr("content").map(|c| tidy(&c)).filter(|c| !c.is_empty());
                }
                i = tag.end.max(at + 1);
            }
            None => i = at + 1,
        }
    }
    None
}

/// Render visible text: drop boilerplate containers, break on block tags,
/// decode entities.
fn render_text(html: &str) -> String {
    let mut out = String::with_capacity(html.len() / 2);
    let mut i = 0usize;
    while i < html.len() {
        match html[i..].find('<') {
            Some(rel) => {
                let at = i + rel;
                out.push_str(&decode_entities(&html[i..at]));
                match parse_tag(html, at) {
                    Some(tag) => {
                        if !tag.closing && DROP_CONTAINERS.contains(&tag.name.as_str()) {
                            let close = find_closing(html, tag.end, &tag.name);
                            i = match parse_tag(html, close) {
                                Some(end_tag) => end_tag.end,
                                None => html.len(),
                            };
                        } else {
                            if BLOCK_TAGS.contains(&tag.name.as_str()) {
                                out.push('\n');
                                // Paragraph-level elements get a blank line.
                                if !tag.closing && matches!(tag.name.as_str(), "p" | "div" | "section" | "article" | "blockquote" | "table")
                                {
                                    out.push('\n');
                                }
                            }
                            i = tag.end.max(at + 1);
                        }
                    }
                    None => {
                        out.push('<');
                        i = at + 1;
                    }
                }
            }
            None => {
                out.push_str(&decode_entities(&html[i..]));
                break;
            }
        }
    }
    out
}

fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut in_tag = false;
    for ch in html.chars() {
        match ch {
            '<' => in_tag = true,
            '>' => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

/// Decode the common named entities plus numeric references.
pub fn decode_entities(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut rest = input;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let semi = tail[..tail.len().min(12)].find(';');
        match semi {
            Some(semi) => {
                let entity = &tail[1..semi];
                let decoded: Option<char> = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    "mdash" => Some('\u{2014}'),
                    "ndash" => Some('\u{2013}'),
                    "hellip" => Some('\u{2026}'),
                    "lsquo" => Some('\u{2018}'),
                    "rsquo" => Some('\u{2019}'),
                    "ldquo" => Some('\u{201c}'),
                    "rdquo" => Some('\u{201d}'),
                    "copy" => Some('\u{a9}'),
                    _ => entity
                        .strip_prefix('#')
                        .and_then(|num| {
                            if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X'))
                            {
                                u32::from_str_radix(hex, 16).ok()
                            } else {
                                num.parse::<u32>().ok()
                            }
                        })
                        .and_then(char::from_u32),
                };
                match decoded {
                    Some(c) => {
                        out.push(c);
                        rest = &tail[semi + 1..];
                    }
                    None => {
                        out.push('&');
                        rest = &tail[1..];
                    }
                }
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Collapse whitespace runs within lines and blank-line runs between
/// paragraphs.
fn tidy(textish: &str) -> String {
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for line in textish.lines() {
        let line: Vec<&str> = line.split_whitespace().collect();
        if line.is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(line.join(" "));
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join(" "));
    }
    paragraphs.join("\n\n")
}
