//! Bot profiles, browsing-history warm-up, engine clients and audit orchestration.
//!
//! Engines are reached through [`EngineClient`]; the orchestrator never looks
//! inside a client. [`run_audit`] dispatches every bot of a plan to one
//! `(engine, query)` wave at a time, each bot in a fresh [`Session`] seeded
//! from its post-warm-up cookie jar.

mod audit;
mod filter;
mod http;
mod profiles;
mod warmup;

use std::sync::atomic::{AtomicI64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{upsert_cookie, BotProfile, Cookie, Query, RankedResult};

pub use audit::{run_audit, AuditError, AuditPlan, AuditSummary, Humanization, PlanFile, SIMULTANEITY_WINDOW_MS};
pub use filter::{balance, success_filter, BalanceError, CellKey, Exclusion, ExclusionReason, FilterOutcome, SuccessRule};
pub use http::{EngineConfig, HttpEngineClient, HttpFetcher, ResponseFormat};
pub use profiles::{
    default_queries, load_profiles, load_queries, make_profiles, save_profiles, type3_subset, ProfileError,
    ProfileSpec,
};
pub use warmup::{
    build_history, load_url_lists, UrlLists, VisitRecord, WarmupError, WarmupOutcome, WarmupSpec,
    CONFLICT_KEYWORDS, GENERAL_KEYWORDS,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("captcha or block page")]
    Captcha,
    #[error("timed out")]
    Timeout,
    #[error("unparseable response: {0}")]
    Parse(String),
    #[error("engine unavailable: {0}")]
    EngineUnavailable(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("not found: {0}")]
    NotFound(String),
}

/// Cookies held by one browser session. A session starts from the profile's
/// jar and is discarded after one query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Session {
    cookies: Vec<Cookie>,
}

impl Session {
    pub fn fresh(profile: &BotProfile) -> Self {
        Session { cookies: profile.cookie_jar.clone() }
    }

    pub fn cookies(&self) -> &[Cookie] {
        &self.cookies
    }

    pub fn set_cookie(&mut self, cookie: Cookie) {
        upsert_cookie(&mut self.cookies, cookie);
    }

    /// `name=value` pairs for cookies whose domain matches `host`.
    pub fn cookie_header(&self, host: &str) -> Option<String> {
        let pairs: Vec<String> = self
            .cookies
            .iter()
            .filter(|c| domain_matches(host, &c.domain))
            .map(|c| format!("{}={}", c.name, c.value))
            .collect();
        (!pairs.is_empty()).then(|| pairs.join("; "))
    }

    pub fn all_cookies_header(&self) -> Option<String> {
        let pairs: Vec<String> = self.cookies.iter().map(|c| format!("{}={}", c.name, c.value)).collect();
        (!pairs.is_empty()).then(|| pairs.join("; "))
    }

    pub fn into_cookies(self) -> Vec<Cookie> {
        self.cookies
    }
}

fn domain_matches(host: &str, domain: &str) -> bool {
    let domain = domain.trim_start_matches('.');
    host == domain || host.ends_with(&format!(".{domain}"))
}

/// Document retrieval used by warm-up and article collection.
pub trait PageFetcher: Send + Sync {
    fn fetch_page(&self, url: &str, profile: &BotProfile, session: &mut Session) -> Result<String, ClientError>;
}

/// One search engine. Implementations may set cookies on the session but
/// must not touch anything else.
pub trait EngineClient: PageFetcher {
    fn name(&self) -> &str;
    fn search(&self, query: &Query, profile: &BotProfile, session: &mut Session) -> Result<Vec<RankedResult>, ClientError>;
}

/// Wall-clock source for the orchestrator.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> i64;
    /// Waits until `t` and returns the time at which the caller proceeds.
    fn sleep_until(&self, t: i64) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> i64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
    }

    fn sleep_until(&self, t: i64) -> i64 {
        let now = self.now_ms();
        if t > now {
            std::thread::sleep(Duration::from_millis((t - now) as u64));
        }
        self.now_ms()
    }
}

/// Simulated time. Sleeping never blocks: the caller's timeline jumps to the
/// requested instant and the shared clock advances to the latest such instant.
#[derive(Debug)]
pub struct VirtualClock {
    now: AtomicI64,
}

impl VirtualClock {
    pub fn new(start_ms: i64) -> Self {
        VirtualClock { now: AtomicI64::new(start_ms) }
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self) -> i64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep_until(&self, t: i64) -> i64 {
        self.now.fetch_max(t, Ordering::SeqCst);
        t
    }
}

/// Inclusive millisecond range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct DelayRange {
    pub lo: u64,
    pub hi: u64,
}

impl DelayRange {
    pub const ZERO: DelayRange = DelayRange { lo: 0, hi: 0 };

    pub fn new(lo: u64, hi: u64) -> Self {
        DelayRange { lo: lo.min(hi), hi: lo.max(hi) }
    }

    /// Maps a uniform draw in [0, 1) into the range.
    pub fn pick(&self, u: f64) -> u64 {
        self.lo + ((self.hi - self.lo + 1) as f64 * u).floor().min((self.hi - self.lo) as f64) as u64
    }
}

impl From<[u64; 2]> for DelayRange {
    fn from(v: [u64; 2]) -> Self {
        DelayRange::new(v[0], v[1])
    }
}

impl From<DelayRange> for [u64; 2] {
    fn from(d: DelayRange) -> Self {
        [d.lo, d.hi]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BotType, HistoryKind, Language, Location};

    #[test]
    fn cookie_header_filters_by_domain() {
        let p = BotProfile::new("b", BotType::Type2, Location::new("IL").unwrap(), Language::new("he").unwrap(), HistoryKind::Stateless, "ip").unwrap();
        let mut s = Session::fresh(&p);
        s.set_cookie(Cookie::new("a", "1", "example.com"));
        s.set_cookie(Cookie::new("b", "2", "other.org"));
        s.set_cookie(Cookie::new("a", "3", "example.com"));
        assert_eq!(s.cookie_header("www.example.com").as_deref(), Some("a=3"));
        assert_eq!(s.cookie_header("badexample.com"), None);
    }

    #[test]
    fn virtual_clock_is_order_free() {
        let c = VirtualClock::new(100);
        assert_eq!(c.sleep_until(500), 500);
        assert_eq!(c.sleep_until(300), 300);
        assert_eq!(c.now_ms(), 500);
    }

    #[test]
    fn delay_range_pick_bounds() {
        let d = DelayRange::new(10, 20);
        assert_eq!(d.pick(0.0), 10);
        assert_eq!(d.pick(0.999_999), 20);
        assert_eq!(DelayRange::ZERO.pick(0.7), 0);
    }
}
