//! Shared helpers for binary-level tests: a file:// fixture site and
//! process wrappers.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_benchforge"));
    cmd.env("FORGE_NOW_UNIX", "1688860800"); // 2023-07-09T00:00:00Z
    cmd
}

/// Lay out a file:// fixture site in `root` and return a config path.
pub fn setup_site(root: &Path) -> PathBuf {
    let fx = fixture_dir();
    let site = root.join("site");
    std::fs::create_dir_all(site.join("news")).unwrap();
    std::fs::create_dir_all(site.join("src")).unwrap();
    std::fs::create_dir_all(site.join("readmes")).unwrap();

    // Preprint feed: swap the recorded tex URLs for local files.
    let mut listing = std::fs::read_to_string(fx.join("preprints/listing.atom")).unwrap();
    for i in 1..=10 {
        let name = format!("p{i:02}.tex");
        std::fs::copy(fx.join("preprints").join(&name), site.join("src").join(&name)).unwrap();
        listing = listing.replace(
            &format!("https://preprints.test/src/{name}"),
            &format!("file://{}/src/{name}", site.display()),
        );
    }
    std::fs::write(site.join("listing.atom"), listing).unwrap();

    // News front page with relative article links, two of them repeated.
    let articles = [
        ("storm-coastal-towns", "a01"),
        ("transit-fare-freeze", "a02"),
        ("reservoir-levels", "a03"),
        ("harbor-bridge-repairs", "a04"),
        ("library-reopening", "a05"),
        ("vaccine-clinic-hours", "a06"),
        ("wind-farm-approval", "a07"),
        ("school-lunch-program", "a08"),
        ("ferry-schedule-change", "a09"),
        ("night-market-season", "a10"),
    ];
    let mut front = String::from("<html><body>\n<a href=\"./about.html\">About</a>\n");
    for (slug, file) in articles {
        std::fs::copy(
            fx.join("news").join(format!("{file}.html")),
            site.join("news").join(format!("{slug}.html")),
        )
        .unwrap();
        front.push_str(&format!("<a href=\"./news/{slug}.html\">{slug}</a>\n"));
    }
    front.push_str("<a href=\"./news/storm-coastal-towns.html\">again</a>\n");
    front.push_str("<a href=\"./news/reservoir-levels.html\">again</a>\n");
    front.push_str("</body></html>\n");
    std::fs::write(site.join("front.html"), front).unwrap();

    // Repo search results pointing at local readmes.
    let mut search = std::fs::read_to_string(fx.join("repos/search.json")).unwrap();
    for (user, name) in
        [("mhollis", "tinylog"), ("avaldez", "parqtool"), ("kzhou", "meshsync"), ("dferro", "chartkit")]
    {
        let file = format!("readme_{name}.md");
        std::fs::copy(fx.join("repos").join(&file), site.join("readmes").join(&file)).unwrap();
        search = search.replace(
            &format!("https://repos.test/raw/{user}/{name}/README.md"),
            &format!("file://{}/readmes/{file}", site.display()),
        );
    }
    std::fs::write(site.join("search.json"), search).unwrap();

    let config = format!(
        r#"window = "2023-07-01..2023-07-08"
seed = 11
cache_dir = "{root}/cache"
out_dir = "{root}/out"

[endpoints]
preprint_listing = "file://{site}/listing.atom"
news_front_page = "file://{site}/front.html"
repo_search = "file://{site}/search.json"
"#,
        root = root.display(),
        site = site.display(),
    );
    let config_path = root.join("run.toml");
    std::fs::write(&config_path, config).unwrap();
    config_path
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed ({:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn collect_and_build(root: &Path, config: &Path) {
    run_ok(bin().args(["--config", config.to_str().unwrap(), "collect"]));
    run_ok(bin().args(["--config", config.to_str().unwrap(), "build"]));
    assert!(root.join("out/dataset_full.jsonl").exists());
}
