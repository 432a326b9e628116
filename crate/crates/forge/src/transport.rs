//! Pluggable document transport: live HTTP with per-host rate limiting,
//! and recorded-fixture replay for tests.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("rate limited, retry after {retry_after_secs}s")]
    RateLimited { retry_after_secs: u64 },
    #[error("no recording for url: {0}")]
    NotRecorded(String),
    #[error("http status {status} for {url}")]
    Status { status: u16, url: String },
}

/// Fetch bytes for a URL. Implementations must be deterministic given
/// identical upstream responses.
pub trait Transport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError>;

    /// Number of fetches performed so far (cache-hit accounting in tests).
    fn calls(&self) -> usize;
}

/// Timeout env var; seconds, default 30.
pub const HTTP_TIMEOUT_ENV: &str = "FORGE_HTTP_TIMEOUT_SECS";
const DEFAULT_TIMEOUT_SECS: u64 = 30;

/// Minimum spacing between requests to the same host (token bucket with
/// one slot), default 1 request per second.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    min_interval: Duration,
    last_by_host: RefCell<BTreeMap<String, Instant>>,
    calls: RefCell<usize>,
}

impl HttpTransport {
    pub fn new() -> Result<HttpTransport, TransportError> {
        Self::with_rate(1.0)
    }

    pub fn with_rate(requests_per_sec: f64) -> Result<HttpTransport, TransportError> {
        let timeout = std::env::var(HTTP_TIMEOUT_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_TIMEOUT_SECS);
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout))
            .build()
            .map_err(|e| TransportError::Unreachable(e.to_string()))?;
        let min_interval = if requests_per_sec > 0.0 {
            Duration::from_secs_f64(1.0 / requests_per_sec)
        } else {
            Duration::ZERO
        };
        Ok(HttpTransport {
            client,
            min_interval,
            last_by_host: RefCell::new(BTreeMap::new()),
            calls: RefCell::new(0),
        })
    }

    fn throttle(&self, url: &str) {
        let host = url.split("://").nth(1).unwrap_or(url).split('/').next().unwrap_or("").to_string();
        let wait = {
            let last = self.last_by_host.borrow();
            last.get(&host).and_then(|t| self.min_interval.checked_sub(t.elapsed()))
        };
        if let Some(d) = wait {
            std::thread::sleep(d);
        }
        self.last_by_host.borrow_mut().insert(host, Instant::now());
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        self.throttle(url);
        *self.calls.borrow_mut() += 1;
        let resp = self
            .client
            .get(url)
            .send()
            .map_err(|e| TransportError::Unreachable(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after_secs = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse().ok())
                .unwrap_or(1);
            return Err(TransportError::RateLimited { retry_after_secs });
        }
        if !status.is_success() {
            return Err(TransportError::Status { status: status.as_u16(), url: url.to_string() });
        }
        resp.bytes()
            .map(|b| b.to_vec())
            .map_err(|e| TransportError::Unreachable(e.to_string()))
    }

    fn calls(&self) -> usize {
        *self.calls.borrow()
    }
}

/// Replays recorded responses: URL -> bytes, or URL -> file on disk.
#[derive(Default)]
pub struct FixtureTransport {
    inline: BTreeMap<String, Vec<u8>>,
    files: BTreeMap<String, PathBuf>,
    calls: RefCell<usize>,
}

impl FixtureTransport {
    pub fn new() -> FixtureTransport {
        FixtureTransport::default()
    }

    pub fn record(&mut self, url: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.inline.insert(url.into(), body.into());
    }

    pub fn record_file(&mut self, url: impl Into<String>, path: impl Into<PathBuf>) {
        self.files.insert(url.into(), path.into());
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        *self.calls.borrow_mut() += 1;
        if let Some(body) = self.inline.get(url) {
            return Ok(body.clone());
        }
        if let Some(path) = self.files.get(url) {
            return std::fs::read(path)
                .map_err(|e| TransportError::Unreachable(format!("{}: {e}", path.display())));
        }
        Err(TransportError::NotRecorded(url.to_string()))
    }

    fn calls(&self) -> usize {
        *self.calls.borrow()
    }
}

/// Serves `file://` URLs from the local filesystem. Lets recorded
/// fixture trees stand in for live endpoints in CLI runs.
#[derive(Default)]
pub struct FileTransport {
    calls: RefCell<usize>,
}

impl FileTransport {
    pub fn new() -> FileTransport {
        FileTransport::default()
    }
}

impl Transport for FileTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        *self.calls.borrow_mut() += 1;
        let path = url
            .strip_prefix("file://")
            .ok_or_else(|| TransportError::Unreachable(format!("not a file url: {url}")))?;
        std::fs::read(path).map_err(|e| TransportError::Unreachable(format!("{path}: {e}")))
    }

    fn calls(&self) -> usize {
        *self.calls.borrow()
    }
}
