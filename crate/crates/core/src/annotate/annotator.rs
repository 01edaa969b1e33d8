use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AnnotateError, Category, Leaning};

/// Instruction sent with every domain to classify.
pub const DOMAIN_PROMPT: &str = "Classify the website whose domain is given below into exactly one of these \
categories: Reference, Entertainment, Education, Technology, News, Lifestyle, Business, Finance, Health, \
Government, Non-Profit, Social Media, Travel, E-Commerce, Art, Science, Fashion, Legal, Career, Retail, \
Automotive, Food, Fact-Checking, Religion, Sports. Answer with the category name only.";

/// Instruction sent with every article to label.
pub const LEANING_PROMPT: &str = "Read the article below and rate its position on the Israel-Palestine \
conflict using one of: pro-Israel, slightly pro-Israel, neutral, slightly pro-Palestine, pro-Palestine. \
Answer with the label only.";

/// External text-annotation service.
pub trait Annotator: Send + Sync {
    fn annotate(&self, prompt: &str, text: &str) -> Result<String, AnnotateError>;
}

#[derive(Serialize)]
struct AnnotateRequest<'a> {
    prompt: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct AnnotateResponse {
    label: String,
}

/// Posts `{prompt, text}` as JSON and reads back `{label}`.
#[derive(Debug, Clone)]
pub struct HttpAnnotator {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl HttpAnnotator {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpAnnotator { endpoint: endpoint.into(), timeout_ms: 30_000, retries: 2 }
    }

    fn once(&self, client: &reqwest::blocking::Client, prompt: &str, text: &str) -> Result<String, String> {
        let resp = client
            .post(&self.endpoint)
            .json(&AnnotateRequest { prompt, text })
            .send()
            .map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("status {}", resp.status()));
        }
        resp.json::<AnnotateResponse>().map(|r| r.label).map_err(|e| e.to_string())
    }
}

impl Annotator for HttpAnnotator {
    fn annotate(&self, prompt: &str, text: &str) -> Result<String, AnnotateError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(self.timeout_ms))
            .build()
            .map_err(|e| AnnotateError::Annotator(e.to_string()))?;
        let mut last = String::new();
        for _ in 0..=self.retries {
            match self.once(&client, prompt, text) {
                Ok(label) => return Ok(label),
                Err(e) => last = e,
            }
        }
        Err(AnnotateError::Annotator(last))
    }
}

/// Offline annotator. Domains are classified by their host stem (the naming
/// scheme of simulated sites); articles by the cue sentence they contain.
#[derive(Debug, Default)]
pub struct StubAnnotator {
    calls: AtomicUsize,
}

impl StubAnnotator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn domain(text: &str) -> String {
        let first = text.trim().split('.').next().unwrap_or_default();
        let stem = first.trim_end_matches(|c: char| c.is_ascii_digit());
        Category::ALL
            .iter()
            .find(|c| c.stem() == stem)
            .map_or_else(|| format!("Unknown ({stem})"), |c| c.as_str().to_string())
    }

    fn leaning(text: &str) -> String {
        Leaning::ALL
            .iter()
            .find(|l| text.contains(l.cue()))
            .copied()
            .unwrap_or(Leaning::Neutral)
            .as_str()
            .to_string()
    }
}

impl Annotator for StubAnnotator {
    fn annotate(&self, prompt: &str, text: &str) -> Result<String, AnnotateError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if prompt == DOMAIN_PROMPT {
            Ok(Self::domain(text))
        } else if prompt == LEANING_PROMPT {
            Ok(Self::leaning(text))
        } else {
            Err(AnnotateError::Annotator("stub knows only the bundled prompts".into()))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    prompt_sha256: String,
    text: String,
    label: String,
}

/// On-disk response cache: one JSON file per `(prompt, text)` key hash.
#[derive(Debug, Clone)]
pub struct AnnotationCache {
    dir: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl AnnotationCache {
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(AnnotationCache { dir: dir.as_ref().to_path_buf() })
    }

    pub fn key(prompt: &str, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(sha256_hex(prompt.as_bytes()));
        h.update([0u8]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, prompt: &str, text: &str) -> Option<String> {
        let raw = fs::read_to_string(self.path(&Self::key(prompt, text))).ok()?;
        let entry: CacheEntry = serde_json::from_str(&raw).ok()?;
        (entry.text == text).then_some(entry.label)
    }

    /// Writes through a temporary file and renames, so readers never see a
    /// partial entry; concurrent writers of one key leave the last one.
    pub fn put(&self, prompt: &str, text: &str, label: &str) -> std::io::Result<()> {
        let key = Self::key(prompt, text);
        let entry = CacheEntry { prompt_sha256: sha256_hex(prompt.as_bytes()), text: text.to_string(), label: label.to_string() };
        let tmp = self.dir.join(format!(".{key}.{:?}.tmp", std::thread::current().id()));
        fs::write(&tmp, serde_json::to_vec(&entry).expect("cache entry serializes"))?;
        fs::rename(tmp, self.path(&key))
    }
}
