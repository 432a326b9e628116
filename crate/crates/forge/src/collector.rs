//! Document collection from the three source families, over an
//! injectable transport, plus the on-disk raw cache.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use benchforge_core::hash;
use benchforge_core::html;
use benchforge_core::text;
use benchforge_core::types::{DocFormat, SourceKind};
use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::transport::{Transport, TransportError};

/// Half-open UTC collection window [start, end), unix seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionWindow {
    pub start: i64,
    pub end: i64,
}

pub const MIN_WINDOW_SECS: i64 = 3600;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowError {
    #[error("window start must precede end")]
    Inverted,
    #[error("window shorter than one hour")]
    TooShort,
    #[error("cannot parse window {0:?}, expected YYYY-MM-DD..YYYY-MM-DD")]
    Unparseable(String),
}

impl CollectionWindow {
    pub fn new(start: i64, end: i64) -> Result<CollectionWindow, WindowError> {
        if start >= end {
            return Err(WindowError::Inverted);
        }
        if end - start < MIN_WINDOW_SECS {
            return Err(WindowError::TooShort);
        }
        Ok(CollectionWindow { start, end })
    }

    /// The window is inclusive at start, exclusive at end.
    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }

    /// Parse "2023-07-01..2023-07-08" as midnight-to-midnight UTC.
    pub fn parse(spec: &str) -> Result<CollectionWindow, WindowError> {
        let (a, b) = spec
            .split_once("..")
            .ok_or_else(|| WindowError::Unparseable(spec.to_string()))?;
        let day = |s: &str| {
            NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
                .map_err(|_| WindowError::Unparseable(spec.to_string()))
        };
        let start = day(a)?.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        let end = day(b)?.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        CollectionWindow::new(start, end)
    }
}

/// A fetched document plus its payload bytes. The payload is stored next
/// to, not inside, the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub source: SourceKind,
    pub url: String,
    pub created_at: i64,
    pub fetched_at: i64,
    pub title: String,
    pub description: String,
    pub format: DocFormat,
    #[serde(skip)]
    pub payload: Vec<u8>,
}

impl RawDocument {
    pub fn payload_text(&self) -> String {
        String::from_utf8_lossy(&self.payload).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CollectError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed listing response: {0}")]
    MalformedResponse(String),
    #[error("no article links found on front page")]
    NoArticlesFound,
}

/// Per-run collection accounting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectStats {
    pub skipped_malformed: usize,
    pub dropped_missing_readme: usize,
    pub dropped_short_readme: usize,
    pub dropped_outside_window: usize,
}

pub struct Collector<'a> {
    pub transport: &'a dyn Transport,
    /// Injectable clock for fetched_at, unix seconds.
    pub now: i64,
    pub stats: CollectStats,
}

impl<'a> Collector<'a> {
    pub fn new(transport: &'a dyn Transport, now: i64) -> Collector<'a> {
        Collector { transport, now, stats: CollectStats::default() }
    }

    fn doc_id(source: SourceKind, url: &str) -> String {
        hash::document_id(source.as_str(), url)
    }

    /// Fetch LaTeX sources of preprints listed inside the window,
    /// newest-first, at most `max`.
    ///
    /// The listing endpoint returns an Atom-style feed; each entry needs
    /// `<id>`, `<published>` (RFC 3339), `<title>`, optional `<summary>`,
    /// and a `<link rel="tex" href="..."/>` to the LaTeX source.
    pub fn fetch_preprints(
        &mut self,
        listing_url: &str,
        window: CollectionWindow,
        max: usize,
    ) -> Result<Vec<RawDocument>, CollectError> {
        assert!(max >= 1, "max must be at least 1");
        let body = self.transport.get(listing_url)?;
        let listing = String::from_utf8_lossy(&body).into_owned();
        if !listing.contains("<entry>") && !listing.trim().is_empty() && !listing.contains("<feed") {
            return Err(CollectError::MalformedResponse("no feed markup".into()));
        }

        struct Entry {
            url: String,
            created_at: i64,
            title: String,
            summary: String,
            tex_url: String,
        }
        let mut entries: Vec<Entry> = Vec::new();
        for raw in split_blocks(&listing, "<entry>", "</entry>") {
            let parsed = (|| {
                let url = tag_text(raw, "id")?;
                let published = tag_text(raw, "published")?;
                let created_at = parse_rfc3339(&published)?;
                let tex_url = attr_of_link(raw, "tex")?;
                Some(Entry {
                    url,
                    created_at,
                    title: tag_text(raw, "title").unwrap_or_default(),
                    summary: tag_text(raw, "summary").unwrap_or_default(),
                    tex_url,
                })
            })();
            match parsed {
                Some(e) => entries.push(e),
                None => {
                    log::warn!("skipping malformed listing entry");
                    self.stats.skipped_malformed += 1;
                }
            }
        }
        entries.retain(|e| {
            let keep = window.contains(e.created_at);
            if !keep {
                self.stats.dropped_outside_window += 1;
            }
            keep
        });
        entries.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(a.url.cmp(&b.url)));
        entries.truncate(max);

        let mut docs = Vec::with_capacity(entries.len());
        for e in entries {
            let payload = self.transport.get(&e.tex_url)?;
            docs.push(RawDocument {
                id: Self::doc_id(SourceKind::Preprint, &e.url),
                source: SourceKind::Preprint,
                url: e.url,
                created_at: e.created_at,
                fetched_at: self.now,
                title: e.title,
                description: e.summary,
                format: DocFormat::Latex,
                payload,
            });
        }
        Ok(docs)
    }

    /// Fetch every distinct article linked from a news front page.
    ///
    /// Article links are hrefs whose path contains "/news/" or
    /// "/articles/"; presence on the front page is the recency criterion,
    /// and created_at falls back to fetch time when the article page
    /// carries no published timestamp.
    pub fn fetch_news(&mut self, front_page_url: &str) -> Result<Vec<RawDocument>, CollectError> {
        let body = self.transport.get(front_page_url)?;
        let page = String::from_utf8_lossy(&body).into_owned();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut urls: Vec<String> = Vec::new();
        for (href, _text) in html::extract_links(&page) {
            if !(href.contains("/news/") || href.contains("/articles/")) {
                continue;
            }
            let abs = resolve_url(front_page_url, &href);
            if seen.insert(abs.clone()) {
                urls.push(abs);
            }
        }
        if urls.is_empty() {
            return Err(CollectError::NoArticlesFound);
        }

        let mut docs = Vec::with_capacity(urls.len());
        for url in urls {
            let payload = self.transport.get(&url)?;
            let article = String::from_utf8_lossy(&payload).into_owned();
            let title = tag_text(&article, "title").unwrap_or_default();
            let description = meta_content(&article, "description").unwrap_or_default();
            let created_at = meta_property(&article, "article:published_time")
                .and_then(|v| parse_rfc3339(&v))
                .unwrap_or(self.now);
            docs.push(RawDocument {
                id: Self::doc_id(SourceKind::News, &url),
                source: SourceKind::News,
                url,
                created_at,
                fetched_at: self.now,
                title,
                description,
                format: DocFormat::Html,
                payload,
            });
        }
        Ok(docs)
    }

    /// Fetch readmes of repositories created inside the window.
    ///
    /// The search endpoint returns JSON `{"items": [...]}`; each item
    /// needs `html_url`, `created_at` (RFC 3339), optional `description`,
    /// and `readme_url`. Repositories without a readme (absent URL,
    /// fetch failure, or empty file) are dropped silently and counted;
    /// readmes shorter than `min_readme_words` are dropped and counted.
    pub fn fetch_repos(
        &mut self,
        search_url: &str,
        window: CollectionWindow,
        min_readme_words: usize,
    ) -> Result<Vec<RawDocument>, CollectError> {
        let body = self.transport.get(search_url)?;
        let parsed: serde_json::Value = serde_json::from_slice(&body)
            .map_err(|e| CollectError::MalformedResponse(e.to_string()))?;
        let items = parsed
            .get("items")
            .and_then(|v| v.as_array())
            .ok_or_else(|| CollectError::MalformedResponse("missing items array".into()))?;

        let mut docs = Vec::new();
        for item in items {
            let url = match item.get("html_url").and_then(|v| v.as_str()) {
                Some(u) => u.to_string(),
                None => {
                    self.stats.skipped_malformed += 1;
                    continue;
                }
            };
            let created_at = match item
                .get("created_at")
                .and_then(|v| v.as_str())
                .and_then(parse_rfc3339_str)
            {
                Some(t) => t,
                None => {
                    self.stats.skipped_malformed += 1;
                    continue;
                }
            };
            if !window.contains(created_at) {
                self.stats.dropped_outside_window += 1;
                continue;
            }
            let readme = item
                .get("readme_url")
                .and_then(|v| v.as_str())
                .and_then(|u| self.transport.get(u).ok());
            let readme = match readme {
                Some(bytes) if text::word_count(&String::from_utf8_lossy(&bytes)) > 0 => bytes,
                _ => {
                    self.stats.dropped_missing_readme += 1;
                    continue;
                }
            };
            if text::word_count(&String::from_utf8_lossy(&readme)) < min_readme_words {
                self.stats.dropped_short_readme += 1;
                continue;
            }
            let name = item.get("full_name").and_then(|v| v.as_str()).unwrap_or("");
            let description = item.get("description").and_then(|v| v.as_str()).unwrap_or("");
            docs.push(RawDocument {
                id: Self::doc_id(SourceKind::CodeRepo, &url),
                source: SourceKind::CodeRepo,
                url,
                created_at,
                fetched_at: self.now,
                title: name.to_string(),
                description: description.to_string(),
                format: DocFormat::Markdown,
                payload: readme,
            });
        }
        docs.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(a.url.cmp(&b.url)));
        Ok(docs)
    }
}

fn split_blocks<'t>(text: &'t str, open: &str, close: &str) -> Vec<&'t str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(s) = rest.find(open) {
        let after = &rest[s + open.len()..];
        match after.find(close) {
            Some(e) => {
                out.push(&after[..e]);
                rest = &after[e + close.len()..];
            }
            None => break,
        }
    }
    out
}

fn tag_text(block: &str, tag: &str) -> Option<String> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let s = block.find(&open)? + open.len();
    let e = block[s..].find(&close)? + s;
    Some(html::decode_entities(block[s..e].trim()))
}

fn attr_of_link(block: &str, rel: &str) -> Option<String> {
    let mut rest = block;
    while let Some(s) = rest.find("<link") {
        let tag_end = rest[s..].find("/>").or_else(|| rest[s..].find('>'))? + s;
        let tag = &rest[s..tag_end];
        if attr_value(tag, "rel").as_deref() == Some(rel) {
            return attr_value(tag, "href");
        }
        rest = &rest[tag_end..];
    }
    None
}

fn attr_value(tag: &str, name: &str) -> Option<String> {
    for quote in ['"', '\''] {
        let pat = format!("{name}={quote}");
        if let Some(s) = tag.find(&pat) {
            let after = &tag[s + pat.len()..];
            if let Some(e) = after.find(quote) {
                return Some(html::decode_entities(&after[..e]));
            }
        }
    }
    None
}

fn meta_content(page: &str, name: &str) -> Option<String> {
    scan_meta(page, "name", name)
}

fn meta_property(page: &str, property: &str) -> Option<String> {
    scan_meta(page, "property", property)
}

fn scan_meta(page: &str, key: &str, value: &str) -> Option<String> {
    let mut rest = page;
    while let Some(s) = rest.find("<meta") {
        let tag_end = rest[s..].find('>')? + s;
        let tag = &rest[s..tag_end];
        if attr_value(tag, key).as_deref() == Some(value) {
            return attr_value(tag, "content");
        }
        rest = &rest[tag_end..];
    }
    None
}

fn parse_rfc3339(s: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(s.trim()).ok().map(|d| d.timestamp())
}

fn parse_rfc3339_str(s: &str) -> Option<i64> {
    parse_rfc3339(s)
}

/// Resolve an href against the page it appeared on. Handles absolute
/// URLs, scheme-relative, and path-absolute forms.
pub fn resolve_url(base: &str, href: &str) -> String {
    if href.contains("://") {
        return href.to_string();
    }
    let (scheme, rest) = match base.split_once("://") {
        Some(parts) => parts,
        None => return href.to_string(),
    };
    let host = rest.split('/').next().unwrap_or(rest);
    if let Some(tail) = href.strip_prefix("//") {
        return format!("{scheme}://{tail}");
    }
    if href.starts_with('/') {
        return format!("{scheme}://{host}{href}");
    }
    let dir = base.rsplit_once('/').map(|(d, _)| d).unwrap_or(base);
    format!("{dir}/{href}")
}

// ---------------------------------------------------------------------------
// Raw cache

/// Write a document into `raw/<source>/<id>.<ext>` with a metadata
/// sidecar. Returns false when the document was already cached.
pub fn cache_store(raw_dir: &Path, doc: &RawDocument) -> anyhow::Result<bool> {
    let dir = raw_dir.join(doc.source.as_str());
    std::fs::create_dir_all(&dir)?;
    let payload_path = dir.join(format!("{}.{}", doc.id, doc.format.extension()));
    let meta_path = dir.join(format!("{}.meta.json", doc.id));
    if payload_path.exists() && meta_path.exists() {
        return Ok(false);
    }
    std::fs::write(&payload_path, &doc.payload)?;
    let mut meta = serde_json::to_string_pretty(doc)?;
    meta.push('\n');
    std::fs::write(&meta_path, meta)?;
    Ok(true)
}

/// Load every cached document, sorted by id for determinism.
pub fn cache_load(raw_dir: &Path) -> anyhow::Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for source in SourceKind::ALL {
        let dir = raw_dir.join(source.as_str());
        if !dir.is_dir() {
            continue;
        }
        let mut meta_paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".meta.json")))
            .collect();
        meta_paths.sort();
        for meta_path in meta_paths {
            let mut doc: RawDocument = serde_json::from_slice(&std::fs::read(&meta_path)?)?;
            let payload_path = dir.join(format!("{}.{}", doc.id, doc.format.extension()));
            doc.payload = std::fs::read(&payload_path)?;
            docs.push(doc);
        }
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(docs)
}
