//! Run configuration: one TOML file, CLI flags win over file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use benchforge_core::types::SourceKind;
use serde::{Deserialize, Serialize};

fn default_max_words() -> usize {
    1800
}

fn default_min_readme_words() -> usize {
    100
}

fn default_sample_n() -> usize {
    3000
}

fn default_sources() -> Vec<SourceKind> {
    SourceKind::ALL.to_vec()
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Collection window, "YYYY-MM-DD..YYYY-MM-DD".
    pub window: String,
    #[serde(default = "default_sources")]
    pub sources: Vec<SourceKind>,
    #[serde(default = "default_max_words")]
    pub max_words: usize,
    #[serde(default = "default_min_readme_words")]
    pub min_readme_words: usize,
    #[serde(default = "default_sample_n")]
    pub sample_n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub endpoints: Endpoints,
    /// Named model endpoints; builtin names (stub, parrot, oracle) need
    /// no entry.
    #[serde(default)]
    pub models: BTreeMap<String, ModelEndpoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    #[serde(default)]
    pub preprint_listing: String,
    #[serde(default)]
    pub news_front_page: String,
    #[serde(default)]
    pub repo_search: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEndpoint {
    pub base_url: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            window: "2023-07-01..2023-07-08".to_string(),
            sources: default_sources(),
            max_words: default_max_words(),
            min_readme_words: default_min_readme_words(),
            sample_n: default_sample_n(),
            seed: 0,
            cache_dir: default_cache_dir(),
            out_dir: default_out_dir(),
            endpoints: Endpoints::default(),
            models: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Ok(toml::from_str(&body)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
