//! Shared domain enums used across the pipeline.

use alloc::string::String;
use core::fmt;
use serde::{Deserialize, Serialize};

/// Where a document came from. Serialized as a lowercase token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Preprint,
    News,
    CodeRepo,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [SourceKind::Preprint, SourceKind::News, SourceKind::CodeRepo];

    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::Preprint => "preprint",
            SourceKind::News => "news",
            SourceKind::CodeRepo => "coderepo",
        }
    }

    pub fn parse(s: &str) -> Option<SourceKind> {
        match s {
            "preprint" => Some(SourceKind::Preprint),
            "news" => Some(SourceKind::News),
            "coderepo" => Some(SourceKind::CodeRepo),
            _ => None,
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Payload format of a fetched document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocFormat {
    Latex,
    Html,
    Markdown,
}

impl DocFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            DocFormat::Latex => "tex",
            DocFormat::Html => "html",
            DocFormat::Markdown => "md",
        }
    }
}

/// The five assessed question categories, ordered by real-world frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryType {
    Terminology,
    Summary,
    Purpose,
    Example,
    Future,
}

impl QueryType {
    pub const ALL: [QueryType; 5] = [
        QueryType::Terminology,
        QueryType::Summary,
        QueryType::Purpose,
        QueryType::Example,
        QueryType::Future,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            QueryType::Terminology => "terminology",
            QueryType::Summary => "summary",
            QueryType::Purpose => "purpose",
            QueryType::Example => "example",
            QueryType::Future => "future",
        }
    }

    pub fn parse(s: &str) -> Option<QueryType> {
        match s {
            "terminology" => Some(QueryType::Terminology),
            "summary" => Some(QueryType::Summary),
            "purpose" => Some(QueryType::Purpose),
            "example" => Some(QueryType::Example),
            "future" => Some(QueryType::Future),
            _ => None,
        }
    }

    /// Placeholder-template slot word for this query type.
    pub fn slot_word(&self) -> &'static str {
        match self {
            QueryType::Terminology => "term",
            QueryType::Summary => "summary",
            QueryType::Purpose => "reason",
            QueryType::Example => "example",
            QueryType::Future => "forecast",
        }
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Document-level metadata carried alongside the payload into the
/// textualizer; timestamps are Unix seconds (UTC).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub id: String,
    pub source: SourceKind,
    pub url: String,
    pub created_at: i64,
    pub title: String,
    #[serde(default)]
    pub description: String,
}
