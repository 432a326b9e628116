//! Collector behavior against recorded fixture responses.

use std::path::PathBuf;

use benchforge::collector::{cache_load, cache_store, CollectError, CollectionWindow, Collector};
use benchforge::transport::{FixtureTransport, Transport};
use benchforge_core::types::{DocFormat, SourceKind};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn preprint_transport() -> FixtureTransport {
    let mut t = FixtureTransport::new();
    t.record_file("https://preprints.test/listing", fixture("preprints/listing.atom"));
    for i in 1..=10 {
        t.record_file(
            format!("https://preprints.test/src/p{i:02}.tex"),
            fixture(&format!("preprints/p{i:02}.tex")),
        );
    }
    t
}

fn news_transport() -> FixtureTransport {
    let mut t = FixtureTransport::new();
    t.record_file("https://news.test/", fixture("news/front.html"));
    let articles = [
        ("news/storm-coastal-towns", "a01"),
        ("news/transit-fare-freeze", "a02"),
        ("articles/reservoir-levels", "a03"),
        ("news/harbor-bridge-repairs", "a04"),
        ("articles/library-reopening", "a05"),
        ("news/vaccine-clinic-hours", "a06"),
        ("articles/wind-farm-approval", "a07"),
        ("news/school-lunch-program", "a08"),
        ("news/ferry-schedule-change", "a09"),
        ("articles/night-market-season", "a10"),
    ];
    for (path, file) in articles {
        t.record_file(format!("https://news.test/{path}"), fixture(&format!("news/{file}.html")));
    }
    t
}

fn repo_transport() -> FixtureTransport {
    let mut t = FixtureTransport::new();
    t.record_file("https://repos.test/search?window=w27", fixture("repos/search.json"));
    for name in ["tinylog", "parqtool", "meshsync", "chartkit"] {
        let user = match name {
            "tinylog" => "mhollis",
            "parqtool" => "avaldez",
            "meshsync" => "kzhou",
            _ => "dferro",
        };
        t.record_file(
            format!("https://repos.test/raw/{user}/{name}/README.md"),
            fixture(&format!("repos/readme_{name}.md")),
        );
    }
    t
}

const NOW: i64 = 1_688_860_800; // 2023-07-09T00:00:00Z

fn week27() -> CollectionWindow {
    CollectionWindow::parse("2023-07-01..2023-07-08").unwrap()
}

#[test]
fn preprint_listing_yields_ten_documents_newest_first() {
    let t = preprint_transport();
    let mut c = Collector::new(&t, NOW);
    let docs = c.fetch_preprints("https://preprints.test/listing", week27(), 500).unwrap();

    assert_eq!(docs.len(), 10);
    assert_eq!(c.stats.skipped_malformed, 1);
    assert_eq!(c.stats.dropped_outside_window, 1);
    for pair in docs.windows(2) {
        assert!(pair[0].created_at >= pair[1].created_at);
    }
    assert_eq!(docs[0].url, "https://preprints.test/abs/2307.0010");
    for d in &docs {
        assert_eq!(d.source, SourceKind::Preprint);
        assert_eq!(d.format, DocFormat::Latex);
        assert_eq!(d.fetched_at, NOW);
        assert!(d.payload_text().contains(r"\begin{document}"));
        assert!(!d.title.is_empty());
        assert!(!d.description.is_empty());
    }
}

#[test]
fn preprint_max_caps_the_fetch() {
    let t = preprint_transport();
    let mut c = Collector::new(&t, NOW);
    let docs = c.fetch_preprints("https://preprints.test/listing", week27(), 3).unwrap();
    assert_eq!(docs.len(), 3);
    // Listing fetch plus one payload fetch per kept entry.
    assert_eq!(t.calls(), 4);
}

#[test]
fn preprint_window_with_no_entries_is_empty_not_an_error() {
    let t = preprint_transport();
    let mut c = Collector::new(&t, NOW);
    let window = CollectionWindow::parse("2023-08-01..2023-08-08").unwrap();
    let docs = c.fetch_preprints("https://preprints.test/listing", window, 500).unwrap();
    assert!(docs.is_empty());
    assert_eq!(c.stats.dropped_outside_window, 11);
}

#[test]
fn front_page_links_dedup_to_ten_articles() {
    let t = news_transport();
    let mut c = Collector::new(&t, NOW);
    let docs = c.fetch_news("https://news.test/").unwrap();

    assert_eq!(docs.len(), 10);
    let mut urls: Vec<&str> = docs.iter().map(|d| d.url.as_str()).collect();
    urls.sort();
    urls.dedup();
    assert_eq!(urls.len(), 10);
    let storm = docs.iter().find(|d| d.url.ends_with("storm-coastal-towns")).unwrap();
    assert_eq!(storm.title, "Storms batter coastal towns overnight");
    assert!(storm.description.starts_with("Severe storms flooded"));
    assert_eq!(storm.created_at, 1_688_621_400); // 2023-07-06T05:30:00Z
    assert_eq!(storm.format, DocFormat::Html);
}

#[test]
fn front_page_without_article_links_is_an_error() {
    let mut t = FixtureTransport::new();
    t.record(
        "https://news.test/",
        br#"<html><body><a href="/about">About</a><a href="/privacy">Privacy</a></body></html>"#
            .to_vec(),
    );
    let mut c = Collector::new(&t, NOW);
    let err = c.fetch_news("https://news.test/").unwrap_err();
    assert_eq!(err, CollectError::NoArticlesFound);
}

#[test]
fn repo_search_applies_readme_gates() {
    let t = repo_transport();

    let mut c = Collector::new(&t, NOW);
    let docs = c.fetch_repos("https://repos.test/search?window=w27", week27(), 100).unwrap();
    assert_eq!(docs.len(), 2);
    let names: Vec<&str> = docs.iter().map(|d| d.title.as_str()).collect();
    assert_eq!(names, ["dferro/chartkit", "kzhou/meshsync"]);
    assert_eq!(c.stats.dropped_missing_readme, 1);
    assert_eq!(c.stats.dropped_short_readme, 2);

    let mut c = Collector::new(&t, NOW);
    let docs = c.fetch_repos("https://repos.test/search?window=w27", week27(), 0).unwrap();
    assert_eq!(docs.len(), 4);
    assert_eq!(c.stats.dropped_missing_readme, 1);
    assert_eq!(c.stats.dropped_short_readme, 0);
}

#[test]
fn raw_cache_roundtrips_and_deduplicates() {
    let t = preprint_transport();
    let mut c = Collector::new(&t, NOW);
    let docs = c.fetch_preprints("https://preprints.test/listing", week27(), 500).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    for d in &docs {
        assert!(cache_store(&raw, d).unwrap());
    }
    for d in &docs {
        assert!(!cache_store(&raw, d).unwrap(), "second store must be a no-op");
    }

    let loaded = cache_load(&raw).unwrap();
    assert_eq!(loaded.len(), docs.len());
    for pair in loaded.windows(2) {
        assert!(pair[0].id < pair[1].id);
    }
    let mut expect = docs.clone();
    expect.sort_by(|a, b| a.id.cmp(&b.id));
    assert_eq!(loaded, expect);
}
