//! PubMed e-utils client: `esearch` for an ISSN/year query, then `efetch` in
//! PMID batches of at most 200. Requests go through a [`Transport`], so tests
//! and offline runs can substitute recorded responses ([`ReplayTransport`]).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BATCH: usize = 200;
pub const DEFAULT_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";

pub const ENV_BASE_URL: &str = "SCIDOC_PUBMED_URL";
pub const ENV_API_KEY: &str = "SCIDOC_PUBMED_API_KEY";
pub const ENV_MIN_DELAY_MS: &str = "SCIDOC_PUBMED_MIN_DELAY_MS";

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    /// Minimum spacing between request starts.
    pub min_delay: Duration,
    pub max_retries: u32,
    /// First retry waits this long; each further retry doubles it.
    pub backoff_base: Duration,
    pub batch_size: usize,
    /// Where the resume cursor is persisted, if anywhere.
    pub cursor_path: Option<PathBuf>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            // NCBI allows 3 requests/s without a key.
            min_delay: Duration::from_millis(340),
            max_retries: 4,
            backoff_base: Duration::from_millis(500),
            batch_size: MAX_BATCH,
            cursor_path: None,
        }
    }
}

impl FetchConfig {
    /// Defaults overridden by `SCIDOC_PUBMED_URL`, `SCIDOC_PUBMED_API_KEY`
    /// and `SCIDOC_PUBMED_MIN_DELAY_MS`.
    pub fn from_env() -> Result<Self> {
        let mut cfg = FetchConfig::default();
        if let Ok(url) = std::env::var(ENV_BASE_URL) {
            cfg.base_url = url.trim_end_matches('/').to_string();
        }
        if let Ok(key) = std::env::var(ENV_API_KEY) {
            if !key.is_empty() {
                cfg.api_key = Some(key);
                cfg.min_delay = Duration::from_millis(100);
            }
        }
        if let Ok(ms) = std::env::var(ENV_MIN_DELAY_MS) {
            let ms: u64 =
                ms.parse().map_err(|_| Error::invalid(format!("{ENV_MIN_DELAY_MS}={ms:?} is not an integer")))?;
            cfg.min_delay = Duration::from_millis(ms);
        }
        Ok(cfg)
    }
}

pub trait Transport {
    /// Body of a successful GET.
    fn get(&mut self, url: &str) -> Result<String>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        HttpTransport { agent }
    }
}

impl Transport for HttpTransport {
    fn get(&mut self, url: &str) -> Result<String> {
        let mut resp = self.agent.get(url).call().map_err(|e| Error::Http(format!("GET {url}: {e}")))?;
        resp.body_mut().read_to_string().map_err(|e| Error::Http(format!("GET {url}: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordedExchange {
    pub url: String,
    pub body: String,
}

/// Serves recorded responses keyed by URL (with any `api_key` parameter
/// stripped). Unknown URLs are an error.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    responses: BTreeMap<String, String>,
    requests: Vec<String>,
}

impl ReplayTransport {
    pub fn new(exchanges: Vec<RecordedExchange>) -> Self {
        ReplayTransport {
            responses: exchanges.into_iter().map(|e| (strip_api_key(&e.url), e.body)).collect(),
            requests: Vec::new(),
        }
    }

    /// Reads a JSON array of `{ "url": ..., "body": ... }` objects.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(serde_json::from_str(&text)?))
    }

    pub fn requests(&self) -> &[String] {
        &self.requests
    }
}

impl Transport for ReplayTransport {
    fn get(&mut self, url: &str) -> Result<String> {
        let key = strip_api_key(url);
        self.requests.push(key.clone());
        self.responses.get(&key).cloned().ok_or_else(|| Error::Http(format!("no recorded response for {key}")))
    }
}

fn strip_api_key(url: &str) -> String {
    let Some((base, query)) = url.split_once('?') else {
        return url.to_string();
    };
    let kept: Vec<&str> = query.split('&').filter(|p| !p.starts_with("api_key=")).collect();
    format!("{base}?{}", kept.join("&"))
}

fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            b' ' => out.push('+'),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

/// Persisted progress for one ISSN/year query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchCursor {
    pub issn: String,
    pub year: i32,
    pub pmids: Vec<String>,
    pub next_batch: usize,
}

#[derive(Deserialize)]
struct ESearchEnvelope {
    esearchresult: ESearchResult,
}

#[derive(Deserialize)]
struct ESearchResult {
    #[serde(default)]
    idlist: Vec<String>,
}

pub struct PubmedFetcher<T: Transport> {
    cfg: FetchConfig,
    transport: T,
    last_request: Option<Instant>,
}

impl<T: Transport> PubmedFetcher<T> {
    pub fn new(cfg: FetchConfig, transport: T) -> Result<Self> {
        if cfg.batch_size == 0 || cfg.batch_size > MAX_BATCH {
            return Err(Error::invalid(format!("batch_size must be in 1..={MAX_BATCH}, got {}", cfg.batch_size)));
        }
        Ok(PubmedFetcher { cfg, transport, last_request: None })
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn url(&self, endpoint: &str, params: &[(&str, String)]) -> String {
        let mut q: Vec<String> = params.iter().map(|(k, v)| format!("{k}={}", encode_component(v))).collect();
        if let Some(key) = &self.cfg.api_key {
            q.push(format!("api_key={}", encode_component(key)));
        }
        format!("{}/{endpoint}?{}", self.cfg.base_url, q.join("&"))
    }

    fn request(&mut self, url: &str) -> Result<String> {
        let mut attempt = 0;
        loop {
            if let Some(last) = self.last_request {
                let elapsed = last.elapsed();
                if elapsed < self.cfg.min_delay {
                    std::thread::sleep(self.cfg.min_delay - elapsed);
                }
            }
            self.last_request = Some(Instant::now());
            match self.transport.get(url) {
                Ok(body) => return Ok(body),
                Err(e) if attempt >= self.cfg.max_retries => return Err(e),
                Err(e) => {
                    let wait = self.cfg.backoff_base * 2u32.saturating_pow(attempt);
                    log::warn!("request failed ({e}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
            }
        }
    }

    pub fn search(&mut self, issn: &str, year: i32) -> Result<Vec<String>> {
        let url = self.url(
            "esearch.fcgi",
            &[
                ("db", "pubmed".into()),
                ("term", format!("{issn}[is] AND {year}[dp]")),
                ("retmax", "100000".into()),
                ("retmode", "json".into()),
            ],
        );
        let body = self.request(&url)?;
        let env: ESearchEnvelope = serde_json::from_str(&body)?;
        Ok(env.esearchresult.idlist)
    }

    fn load_cursor(&self, issn: &str, year: i32) -> Result<Option<FetchCursor>> {
        let Some(path) = &self.cfg.cursor_path else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: FetchCursor = serde_json::from_str(&text)?;
        Ok((c.issn == issn && c.year == year).then_some(c))
    }

    fn save_cursor(&self, c: &FetchCursor) -> Result<()> {
        if let Some(path) = &self.cfg.cursor_path {
            crate::binfmt::write_atomic(path, serde_json::to_string_pretty(c)?.as_bytes())?;
        }
        Ok(())
    }

    /// Fetches every XML page for the query, handing each to `sink` in order
    /// (`sink` gets the batch index). The cursor advances only after `sink`
    /// succeeds, so an interrupted run resumes at the first unsunk batch.
    /// Returns the number of pages delivered in this call.
    pub fn fetch<F>(&mut self, issn: &str, year: i32, mut sink: F) -> Result<usize>
    where
        F: FnMut(usize, String) -> Result<()>,
    {
        let mut cursor = match self.load_cursor(issn, year)? {
            Some(c) => c,
            None => {
                let pmids = self.search(issn, year)?;
                let c = FetchCursor { issn: issn.to_string(), year, pmids, next_batch: 0 };
                self.save_cursor(&c)?;
                c
            }
        };
        let batches: Vec<Vec<String>> = cursor.pmids.chunks(self.cfg.batch_size).map(<[String]>::to_vec).collect();
        let mut delivered = 0;
        for (i, batch) in batches.iter().enumerate().skip(cursor.next_batch) {
            let url =
                self.url("efetch.fcgi", &[("db", "pubmed".into()), ("id", batch.join(",")), ("retmode", "xml".into())]);
            let page = self.request(&url)?;
            sink(i, page)?;
            cursor.next_batch = i + 1;
            self.save_cursor(&cursor)?;
            delivered += 1;
        }
        Ok(delivered)
    }
}
