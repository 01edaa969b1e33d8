use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Clock, DelayRange, PageFetcher, Session};
use crate::model::{BotProfile, HistoryKind, Language, Location};
use crate::seed;

pub const CONFLICT_KEYWORDS: [&str; 4] = ["Palestine", "Israel", "Hamas", "Netanyahu"];
pub const GENERAL_KEYWORDS: [&str; 5] = ["movie", "health", "well-being", "dinner recipe", "sports"];

#[derive(Debug, Error)]
pub enum WarmupError {
    #[error("bot {0} is stateless and takes no warm-up")]
    Stateless(String),
    #[error("bot {bot_id} needs {need} candidate URLs, only {have} available")]
    NotEnoughUrls { bot_id: String, need: usize, have: usize },
    #[error("bot {bot_id}: {failed} of {visits} visits failed")]
    TooManyFailures { bot_id: String, failed: usize, visits: usize },
    #[error("{path}: {message}")]
    Source { path: String, message: String },
    #[error("no {list} URLs for location {location} / language {language}")]
    EmptyList { list: &'static str, location: Location, language: Language },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmupSpec {
    pub visits: usize,
    pub seed: u64,
    pub dwell_ms: DelayRange,
}

impl Default for WarmupSpec {
    fn default() -> Self {
        WarmupSpec { visits: 20, seed: 0, dwell_ms: DelayRange::new(5_000, 15_000) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub bot_id: String,
    pub order: usize,
    pub url: String,
    pub attempts: u32,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmupOutcome {
    pub profile: BotProfile,
    pub visits: Vec<VisitRecord>,
}

/// Visits `spec.visits` URLs drawn without replacement from `candidates`,
/// in one continuous session, and stores the resulting cookies on the profile.
pub fn build_history(
    profile: &BotProfile,
    spec: &WarmupSpec,
    candidates: &[String],
    fetcher: &dyn PageFetcher,
    clock: &dyn Clock,
) -> Result<WarmupOutcome, WarmupError> {
    if profile.history_kind == HistoryKind::Stateless {
        return Err(WarmupError::Stateless(profile.bot_id.clone()));
    }
    if spec.visits > candidates.len() {
        return Err(WarmupError::NotEnoughUrls {
            bot_id: profile.bot_id.clone(),
            need: spec.visits,
            have: candidates.len(),
        });
    }
    let key = seed::derive(spec.seed, &["warmup", &profile.bot_id]);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let picks = rand::seq::index::sample(&mut rng, candidates.len(), spec.visits);

    let mut session = Session::fresh(profile);
    let mut visits = Vec::with_capacity(spec.visits);
    let mut failed = 0;
    for (order, idx) in picks.into_iter().enumerate() {
        let url = &candidates[idx];
        let mut attempts = 0;
        let mut error = None;
        let ok = loop {
            attempts += 1;
            match fetcher.fetch_page(url, profile, &mut session) {
                Ok(_) => break true,
                Err(e) if attempts < 2 => error = Some(e.to_string()),
                Err(e) => {
                    error = Some(e.to_string());
                    break false;
                }
            }
        };
        if !ok {
            failed += 1;
        }
        let dwell = spec.dwell_ms.pick(seed::unit(key, order as u64, 0));
        clock.sleep_until(clock.now_ms() + dwell as i64);
        visits.push(VisitRecord {
            bot_id: profile.bot_id.clone(),
            order,
            url: url.clone(),
            attempts,
            ok,
            error: if ok { None } else { error },
        });
    }
    if failed * 2 > spec.visits {
        return Err(WarmupError::TooManyFailures { bot_id: profile.bot_id.clone(), failed, visits: spec.visits });
    }
    let mut warmed = profile.clone();
    warmed.cookie_jar = session.into_cookies();
    Ok(WarmupOutcome { profile: warmed, visits })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UrlLists {
    pub conflict: Vec<String>,
    pub general: Vec<String>,
}

impl UrlLists {
    pub fn for_history(&self, kind: HistoryKind) -> &[String] {
        match kind {
            HistoryKind::ConflictNews => &self.conflict,
            HistoryKind::GeneralNews => &self.general,
            HistoryKind::Stateless => &[],
        }
    }
}

#[derive(Deserialize)]
struct SourceRow {
    url: String,
    keyword: String,
    location: String,
    language: String,
}

/// Reads a `url,keyword,location,language` CSV and splits the rows matching
/// `location`/`language` into conflict and general lists by keyword.
pub fn load_url_lists(
    conflict_keywords: &[&str],
    general_keywords: &[&str],
    source_path: &Path,
    location: &Location,
    language: &Language,
) -> Result<UrlLists, WarmupError> {
    let src = |message: String| WarmupError::Source { path: source_path.display().to_string(), message };
    let mut reader = csv::Reader::from_path(source_path).map_err(|e| src(e.to_string()))?;
    let matches = |set: &[&str], kw: &str| set.iter().any(|k| k.eq_ignore_ascii_case(kw.trim()));
    let mut lists = UrlLists::default();
    for row in reader.deserialize::<SourceRow>() {
        let row = row.map_err(|e| src(e.to_string()))?;
        if row.location != location.as_str() || row.language != language.as_str() {
            continue;
        }
        let target = if matches(conflict_keywords, &row.keyword) {
            &mut lists.conflict
        } else if matches(general_keywords, &row.keyword) {
            &mut lists.general
        } else {
            continue;
        };
        if !target.contains(&row.url) {
            target.push(row.url);
        }
    }
    for (list, name) in [(&lists.conflict, "conflict"), (&lists.general, "general")] {
        if list.is_empty() {
            return Err(WarmupError::EmptyList { list: name, location: location.clone(), language: language.clone() });
        }
    }
    Ok(lists)
}
