use std::path::Path;
use std::sync::Arc;

use super::{site_tld, RequestContext, SimEngine};
use crate::crawler::{ClientError, EngineClient, PageFetcher, Session, CONFLICT_KEYWORDS, GENERAL_KEYWORDS};
use crate::model::{BotProfile, Language, Location, Query, RankedResult};
use crate::seed;

/// In-process client for a [`SimEngine`]. Page fetches of `/track/...`
/// URLs set the tracking cookie on the session, as a browser would; the
/// engine sees every session cookie, standing in for cross-site tracking.
#[derive(Clone)]
pub struct SimClient {
    engine: Arc<SimEngine>,
    fail_rate: f64,
}

impl SimClient {
    pub fn new(engine: Arc<SimEngine>) -> Self {
        SimClient { engine, fail_rate: 0.0 }
    }

    /// Seeded CAPTCHA failures at `rate` per (query, bot) pair.
    pub fn with_failure_rate(mut self, rate: f64) -> Self {
        self.fail_rate = rate.clamp(0.0, 1.0);
        self
    }

    pub fn engine(&self) -> &SimEngine {
        &self.engine
    }
}

impl PageFetcher for SimClient {
    fn fetch_page(&self, url: &str, _profile: &BotProfile, session: &mut Session) -> Result<String, ClientError> {
        let parsed = url::Url::parse(url).map_err(|e| ClientError::Transport(e.to_string()))?;
        let host = parsed.host_str().unwrap_or_default().to_string();
        let parts: Vec<&str> = parsed.path().trim_matches('/').split('/').collect();
        match parts.as_slice() {
            ["track", rest @ ..] if !rest.is_empty() => {
                let topic = rest.join("/");
                let t = self.engine.serve_track(&topic, &host).map_err(|_| ClientError::NotFound(url.to_string()))?;
                session.set_cookie(t.cookie);
                Ok(t.body)
            }
            ["a" | "page", id] => self.engine.serve_page(id).ok_or_else(|| ClientError::NotFound(url.to_string())),
            _ => Err(ClientError::NotFound(url.to_string())),
        }
    }
}

impl EngineClient for SimClient {
    fn name(&self) -> &str {
        &self.engine.persona().name
    }

    fn search(&self, query: &Query, profile: &BotProfile, session: &mut Session) -> Result<Vec<RankedResult>, ClientError> {
        if self.fail_rate > 0.0 {
            let key = seed::derive(self.engine.persona().seed, &["fail", query.text(), &profile.bot_id]);
            if seed::unit(key, self.engine.persona().epoch as u64, 0) < self.fail_rate {
                return Err(ClientError::Captcha);
            }
        }
        let ctx = RequestContext::new(profile.location.clone(), profile.language.clone(), session.cookies(), profile.ip_label.clone());
        Ok(self.engine.serve_search(query.text(), &ctx).results)
    }
}

/// Sites hosting tracking pixels per location: for every warm-up keyword,
/// enough distinct hosts that each history list has at least 20 sites.
pub const SITES_PER_KEYWORD: usize = 6;

fn slug(s: &str) -> String {
    s.trim().to_lowercase().replace(' ', "-")
}

/// `(url, keyword, location, language)` rows for the simulated web.
pub fn warmup_sources() -> Vec<(String, String, Location, Language)> {
    let mut rows = Vec::new();
    for loc in Location::defaults() {
        let Some(lang) = loc.local_language() else { continue };
        let tld = site_tld(Some(&loc));
        for (group, keywords) in [("conflict", &CONFLICT_KEYWORDS[..]), ("general", &GENERAL_KEYWORDS[..])] {
            for kw in keywords {
                let s = slug(kw);
                for i in 1..=SITES_PER_KEYWORD {
                    rows.push((format!("http://{s}{i}.{tld}/track/{group}/{s}"), kw.to_string(), loc.clone(), lang.clone()));
                }
            }
        }
    }
    rows
}

/// Writes [`warmup_sources`] as a warm-up source CSV.
pub fn write_warmup_sources(path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["url", "keyword", "location", "language"])?;
    for (url, kw, loc, lang) in warmup_sources() {
        w.write_record([url.as_str(), kw.as_str(), loc.as_str(), lang.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
