use std::time::Duration;

use regex::Regex;
use reqwest::blocking::{Client, Response};
use reqwest::header::{ACCEPT_LANGUAGE, COOKIE, SET_COOKIE};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{ClientError, EngineClient, PageFetcher, Session};
use crate::model::{BotProfile, Cookie, Query, RankedResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseFormat {
    /// `{"results": [{rank, url, title, snippet}, ...]}` or a bare array.
    #[default]
    Json,
    /// HTML scraped with `result_pattern`.
    Html,
}

/// Per-engine selector configuration. Live-engine markup changes often, so
/// everything engine-specific lives here rather than in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub name: String,
    /// URL template with `{q}`, `{loc}`, `{lang}` and `{ip}` placeholders.
    pub search_url: String,
    #[serde(default)]
    pub format: ResponseFormat,
    /// Regex with named groups `url`, `title` and optionally `snippet`, one match per result.
    #[serde(default)]
    pub result_pattern: Option<String>,
    /// Body substring that marks a CAPTCHA or block page.
    #[serde(default)]
    pub captcha_marker: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    /// Send every session cookie with searches, not only the engine host's.
    /// Models an engine that also runs the trackers on visited sites.
    #[serde(default)]
    pub send_all_cookies: bool,
}

fn default_timeout() -> u64 {
    20_000
}

fn encode(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&#39;", "'").replace("&amp;", "&")
}

fn strip_tags(s: &str) -> String {
    static TAG: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let tag = TAG.get_or_init(|| Regex::new(r"<[^>]*>").expect("static regex"));
    unescape(tag.replace_all(s, "").trim())
}

/// Shared request plumbing: proxy from the profile or `PROXY_URL`, cookies
/// from the session, `Accept-Language` from the profile.
fn get(url: &str, profile: &BotProfile, session: &mut Session, timeout_ms: u64, all_cookies: bool) -> Result<Response, ClientError> {
    let parsed = url::Url::parse(url).map_err(|e| ClientError::Transport(e.to_string()))?;
    let host = parsed.host_str().unwrap_or_default().to_string();
    let mut builder = Client::builder().timeout(Duration::from_millis(timeout_ms));
    let proxy = profile.proxy_url.clone().or_else(|| std::env::var("PROXY_URL").ok());
    if let Some(p) = proxy {
        builder = builder.proxy(reqwest::Proxy::all(&p).map_err(|e| ClientError::Transport(e.to_string()))?);
    }
    let client = builder.build().map_err(|e| ClientError::Transport(e.to_string()))?;
    let mut req = client.get(parsed).header(ACCEPT_LANGUAGE, profile.language.as_str());
    let cookies = if all_cookies { session.all_cookies_header() } else { session.cookie_header(&host) };
    if let Some(c) = cookies {
        req = req.header(COOKIE, c);
    }
    let resp = req.send().map_err(|e| {
        if e.is_timeout() {
            ClientError::Timeout
        } else {
            ClientError::Transport(e.to_string())
        }
    })?;
    for v in resp.headers().get_all(SET_COOKIE) {
        if let Some(c) = v.to_str().ok().and_then(|s| parse_set_cookie(s, &host)) {
            session.set_cookie(c);
        }
    }
    match resp.status() {
        StatusCode::TOO_MANY_REQUESTS | StatusCode::FORBIDDEN => Err(ClientError::Captcha),
        StatusCode::SERVICE_UNAVAILABLE | StatusCode::BAD_GATEWAY => Err(ClientError::EngineUnavailable(resp.status().to_string())),
        StatusCode::NOT_FOUND => Err(ClientError::NotFound(url.to_string())),
        s if !s.is_success() => Err(ClientError::Transport(s.to_string())),
        _ => Ok(resp),
    }
}

/// Parses the `name=value` pair and `Domain` attribute of a Set-Cookie header.
pub(crate) fn parse_set_cookie(header: &str, host: &str) -> Option<Cookie> {
    let mut parts = header.split(';');
    let (name, value) = parts.next()?.split_once('=')?;
    let mut domain = host.to_string();
    for attr in parts {
        if let Some((k, v)) = attr.split_once('=') {
            if k.trim().eq_ignore_ascii_case("domain") {
                domain = v.trim().trim_start_matches('.').to_ascii_lowercase();
            }
        }
    }
    let name = name.trim();
    (!name.is_empty()).then(|| Cookie::new(name, value.trim(), domain))
}

#[derive(Deserialize)]
struct JsonResult {
    url: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonSerp {
    Wrapped { results: Vec<JsonResult> },
    Bare(Vec<JsonResult>),
}

pub struct HttpEngineClient {
    config: EngineConfig,
    pattern: Option<Regex>,
}

impl HttpEngineClient {
    pub fn new(config: EngineConfig) -> Result<Self, ClientError> {
        let pattern = match (&config.format, &config.result_pattern) {
            (ResponseFormat::Html, None) => return Err(ClientError::Parse("html format needs result_pattern".into())),
            (_, Some(p)) => Some(Regex::new(p).map_err(|e| ClientError::Parse(e.to_string()))?),
            _ => None,
        };
        Ok(HttpEngineClient { config, pattern })
    }

    pub fn search_url(&self, query: &Query, profile: &BotProfile) -> String {
        self.config
            .search_url
            .replace("{q}", &encode(query.text()))
            .replace("{loc}", &encode(profile.location.as_str()))
            .replace("{lang}", &encode(profile.language.as_str()))
            .replace("{ip}", &encode(&profile.ip_label))
    }

    /// Turns a response body into ranked results.
    pub fn parse(&self, body: &str) -> Result<Vec<RankedResult>, ClientError> {
        if let Some(marker) = &self.config.captcha_marker {
            if body.contains(marker.as_str()) {
                return Err(ClientError::Captcha);
            }
        }
        let raw: Vec<JsonResult> = match self.config.format {
            ResponseFormat::Json => match serde_json::from_str(body).map_err(|e| ClientError::Parse(e.to_string()))? {
                JsonSerp::Wrapped { results } | JsonSerp::Bare(results) => results,
            },
            ResponseFormat::Html => {
                let re = self.pattern.as_ref().expect("checked in new");
                re.captures_iter(body)
                    .filter_map(|c| {
                        Some(JsonResult {
                            url: unescape(c.name("url")?.as_str()),
                            title: c.name("title").map(|m| strip_tags(m.as_str())).unwrap_or_default(),
                            snippet: c.name("snippet").map(|m| strip_tags(m.as_str())).unwrap_or_default(),
                        })
                    })
                    .collect()
            }
        };
        let mut out: Vec<RankedResult> = Vec::with_capacity(raw.len());
        for r in raw {
            if out.iter().any(|o| o.url == r.url) {
                continue;
            }
            let rank = out.len() as u32 + 1;
            // links the parser can't resolve to a registrable domain are not results
            if let Ok(res) = RankedResult::from_url(rank, r.url, r.title, r.snippet) {
                out.push(res);
            }
        }
        Ok(out)
    }
}

impl PageFetcher for HttpEngineClient {
    fn fetch_page(&self, url: &str, profile: &BotProfile, session: &mut Session) -> Result<String, ClientError> {
        HttpFetcher { timeout_ms: self.config.timeout_ms }.fetch_page(url, profile, session)
    }
}

impl EngineClient for HttpEngineClient {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn search(&self, query: &Query, profile: &BotProfile, session: &mut Session) -> Result<Vec<RankedResult>, ClientError> {
        let body = get(&self.search_url(query, profile), profile, session, self.config.timeout_ms, self.config.send_all_cookies)?
            .text()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        self.parse(&body)
    }
}

/// Plain document fetcher for warm-up visits and article collection.
#[derive(Debug, Clone, Copy)]
pub struct HttpFetcher {
    pub timeout_ms: u64,
}

impl Default for HttpFetcher {
    fn default() -> Self {
        HttpFetcher { timeout_ms: default_timeout() }
    }
}

impl PageFetcher for HttpFetcher {
    fn fetch_page(&self, url: &str, profile: &BotProfile, session: &mut Session) -> Result<String, ClientError> {
        get(url, profile, session, self.timeout_ms, false)?.text().map_err(|e| ClientError::Transport(e.to_string()))
    }
}
