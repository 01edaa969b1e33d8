use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ClientError, Clock, DelayRange, EngineClient, EngineConfig, ProfileError, Session};
use crate::crawler::profiles::{load_profiles, load_queries, type3_subset};
use crate::model::log::{LogError, LogWriter};
use crate::model::{BotProfile, ModelError, Query, RankedResult, SerpRecord, SerpStatus};
use crate::seed;

/// Upper bound on the spread of dispatch times within one wave.
pub const SIMULTANEITY_WINDOW_MS: i64 = 60_000;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("no client for engine {0}")]
    MissingClient(String),
    #[error("plan file {path}: {message}")]
    PlanFile { path: String, message: String },
    #[error(transparent)]
    Profiles(#[from] ProfileError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Humanization {
    pub typing_ms_per_char: DelayRange,
    pub jitter_seed: u64,
}

impl Default for Humanization {
    fn default() -> Self {
        Humanization { typing_ms_per_char: DelayRange::new(80, 200), jitter_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditPlan {
    pub audit_id: String,
    pub engines: Vec<String>,
    pub queries: Vec<Query>,
    pub profiles: Vec<BotProfile>,
    pub repeat_count: u32,
    pub inter_query_delay_ms: DelayRange,
    pub humanization: Humanization,
}

impl AuditPlan {
    pub fn validate(&self) -> Result<(), AuditError> {
        let bad = |m: &str| Err(AuditError::InvalidPlan(m.to_string()));
        if self.audit_id.is_empty() {
            return bad("empty audit id");
        }
        if self.engines.is_empty() {
            return bad("no engines");
        }
        if self.queries.is_empty() {
            return bad("no queries");
        }
        if self.profiles.is_empty() {
            return bad("no profiles");
        }
        if self.repeat_count == 0 {
            return bad("repeat_count must be at least 1");
        }
        let mut ids = BTreeSet::new();
        for p in &self.profiles {
            p.validate()?;
            if !ids.insert(p.bot_id.as_str()) {
                return Err(AuditError::InvalidPlan(format!("duplicate bot id {}", p.bot_id)));
            }
        }
        Ok(())
    }

    /// Audit id written for repeat `r` (1-based).
    pub fn repeat_id(&self, r: u32) -> String {
        if self.repeat_count == 1 {
            self.audit_id.clone()
        } else {
            format!("{}.r{r}", self.audit_id)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub log_path: PathBuf,
    pub records: usize,
    pub ok: usize,
    pub failed: usize,
    /// Engines that stopped early, with the reason.
    pub aborted_engines: Vec<(String, String)>,
}

fn status_for(err: &ClientError) -> SerpStatus {
    match err {
        ClientError::Captcha => SerpStatus::CaptchaBlocked,
        ClientError::Parse(_) => SerpStatus::ParseFailure,
        _ => SerpStatus::Timeout,
    }
}

/// Runs every `(repeat, engine, query)` wave and appends one record per bot
/// per wave to `log_path`, failures included.
pub fn run_audit(
    plan: &AuditPlan,
    clients: &[&dyn EngineClient],
    log_path: &Path,
    clock: &dyn Clock,
) -> Result<AuditSummary, AuditError> {
    plan.validate()?;
    let mut engines = Vec::with_capacity(plan.engines.len());
    for name in &plan.engines {
        let client = clients.iter().copied().find(|c| c.name() == name).ok_or_else(|| AuditError::MissingClient(name.clone()))?;
        engines.push(client);
    }

    let mut writer = LogWriter::append_to(log_path)?;
    let mut summary = AuditSummary {
        log_path: log_path.to_path_buf(),
        records: 0,
        ok: 0,
        failed: 0,
        aborted_engines: Vec::new(),
    };
    let mut aborted: BTreeSet<&str> = BTreeSet::new();

    for r in 1..=plan.repeat_count {
        let audit_id = plan.repeat_id(r);
        for client in &engines {
            let engine = client.name();
            for query in &plan.queries {
                if aborted.contains(engine) {
                    break;
                }
                let wave_start = clock.now_ms();
                let outcomes = run_wave(plan, *client, query, &audit_id, wave_start, clock);
                let outage = outcomes.iter().all(|(_, o)| matches!(o, Err(ClientError::EngineUnavailable(_))));
                for (profile, (ts, outcome)) in plan.profiles.iter().zip(outcomes) {
                    let (status, results) = match outcome {
                        Ok(results) if results.is_empty() => (SerpStatus::ParseFailure, Vec::new()),
                        Ok(results) => (SerpStatus::Ok, results),
                        Err(e) => (status_for(&e), Vec::new()),
                    };
                    let meta = profile.meta();
                    let record = SerpRecord::new(&audit_id, engine, meta.clone(), query.text(), query.category(), ts, status, results)
                        .or_else(|_| {
                            SerpRecord::new(&audit_id, engine, meta, query.text(), query.category(), ts, SerpStatus::ParseFailure, Vec::new())
                        })?;
                    if record.status() == SerpStatus::Ok {
                        summary.ok += 1;
                    } else {
                        summary.failed += 1;
                    }
                    writer.append(&record)?;
                    summary.records += 1;
                }
                if outage {
                    aborted.insert(engine);
                    summary.aborted_engines.push((engine.to_string(), format!("unavailable during query {:?}", query.text())));
                }
                let key = seed::derive(plan.humanization.jitter_seed, &["gap", &audit_id, engine, query.text()]);
                let gap = plan.inter_query_delay_ms.pick(seed::unit(key, 0, 0));
                clock.sleep_until(clock.now_ms() + gap as i64);
            }
        }
    }
    writer.flush()?;
    Ok(summary)
}

type Outcome = (i64, Result<Vec<RankedResult>, ClientError>);

/// Dispatches every profile for one `(engine, query)` concurrently. Results
/// come back in profile order regardless of completion order.
fn run_wave(plan: &AuditPlan, client: &dyn EngineClient, query: &Query, audit_id: &str, wave_start: i64, clock: &dyn Clock) -> Vec<Outcome> {
    let chars = query.text().chars().count() as i64;
    std::thread::scope(|s| {
        let handles: Vec<_> = plan
            .profiles
            .iter()
            .map(|profile| {
                let key = seed::derive(plan.humanization.jitter_seed, &["typing", audit_id, client.name(), query.text(), &profile.bot_id]);
                let per_char = plan.humanization.typing_ms_per_char.pick(seed::unit(key, 0, 0)) as i64;
                let offset = (chars * per_char).min(SIMULTANEITY_WINDOW_MS - 1);
                s.spawn(move || {
                    let ts = clock.sleep_until(wave_start + offset);
                    let mut session = Session::fresh(profile);
                    let outcome = catch_unwind(AssertUnwindSafe(|| client.search(query, profile, &mut session)))
                        .unwrap_or(Err(ClientError::Timeout));
                    (ts, outcome)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or((wave_start, Err(ClientError::Timeout)))).collect()
    })
}

fn default_repeat() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDelays {
    #[serde(default = "PlanDelays::inter_default")]
    pub inter_query_ms: DelayRange,
    #[serde(default = "PlanDelays::typing_default")]
    pub typing_ms_per_char: DelayRange,
}

impl PlanDelays {
    fn inter_default() -> DelayRange {
        DelayRange::new(1_000, 5_000)
    }
    fn typing_default() -> DelayRange {
        Humanization::default().typing_ms_per_char
    }
}

impl Default for PlanDelays {
    fn default() -> Self {
        PlanDelays { inter_query_ms: Self::inter_default(), typing_ms_per_char: Self::typing_default() }
    }
}

/// The on-disk audit plan (TOML). Paths are relative to the plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub audit_id: String,
    pub engines: Vec<String>,
    pub queries_path: PathBuf,
    pub profiles_path: PathBuf,
    #[serde(default = "default_repeat")]
    pub repeat_count: u32,
    #[serde(default)]
    pub seed: u64,
    /// Restrict the corpus to the shared subset used for cross-type comparisons.
    #[serde(default)]
    pub type3_subset_only: bool,
    #[serde(default)]
    pub delays: PlanDelays,
    #[serde(default)]
    pub engine_configs: Vec<EngineConfig>,
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), AuditError> {
        let err = |message: String| AuditError::PlanFile { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let plan: PlanFile = toml::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((plan, base))
    }

    pub fn into_plan(&self, base_dir: &Path) -> Result<AuditPlan, AuditError> {
        let mut queries = load_queries(&base_dir.join(&self.queries_path))?;
        if self.type3_subset_only {
            queries = type3_subset(&queries);
        }
        let plan = AuditPlan {
            audit_id: self.audit_id.clone(),
            engines: self.engines.clone(),
            queries,
            profiles: load_profiles(&base_dir.join(&self.profiles_path))?,
            repeat_count: self.repeat_count,
            inter_query_delay_ms: self.delays.inter_query_ms,
            humanization: Humanization { typing_ms_per_char: self.delays.typing_ms_per_char, jitter_seed: self.seed },
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crawler::{PageFetcher, VirtualClock};
    use crate::model::log::read_serp_log_all;
    use crate::model::{BotType, HistoryKind, Language, Location, QueryCategory};

    struct Fixed;
    impl PageFetcher for Fixed {
        fn fetch_page(&self, _: &str, _: &BotProfile, _: &mut Session) -> Result<String, ClientError> {
            Ok(String::new())
        }
    }
    impl EngineClient for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn search(&self, _: &Query, profile: &BotProfile, _: &mut Session) -> Result<Vec<RankedResult>, ClientError> {
            if profile.bot_id.ends_with("panic") {
                panic!("worker crashed");
            }
            Ok(vec![RankedResult::from_url(1, "https://a.com/", "a", "").unwrap()])
        }
    }

    struct Down;
    impl PageFetcher for Down {
        fn fetch_page(&self, _: &str, _: &BotProfile, _: &mut Session) -> Result<String, ClientError> {
            Err(ClientError::EngineUnavailable("down".into()))
        }
    }
    impl EngineClient for Down {
        fn name(&self) -> &str {
            "down"
        }
        fn search(&self, _: &Query, _: &BotProfile, _: &mut Session) -> Result<Vec<RankedResult>, ClientError> {
            Err(ClientError::EngineUnavailable("down".into()))
        }
    }

    fn plan(ids: &[&str], engines: &[&str]) -> AuditPlan {
        let loc = Location::new("BR").unwrap();
        AuditPlan {
            audit_id: "a".into(),
            engines: engines.iter().map(|s| s.to_string()).collect(),
            queries: vec![
                Query::new("q one", QueryCategory::General, false).unwrap(),
                Query::new("q two", QueryCategory::Specific, false).unwrap(),
            ],
            profiles: ids
                .iter()
                .map(|id| BotProfile::new(*id, BotType::Type2, loc.clone(), Language::new("pt").unwrap(), HistoryKind::Stateless, *id).unwrap())
                .collect(),
            repeat_count: 1,
            inter_query_delay_ms: DelayRange::new(1000, 2000),
            humanization: Humanization::default(),
        }
    }

    #[test]
    fn panicking_worker_becomes_timeout() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("log.jsonl");
        let s = run_audit(&plan(&["b1", "b2panic"], &["fixed"]), &[&Fixed], &log, &VirtualClock::new(0)).unwrap();
        assert_eq!((s.records, s.ok, s.failed), (4, 2, 2));
        let recs = read_serp_log_all(&log).unwrap();
        assert_eq!(recs[1].status(), SerpStatus::Timeout);
        assert_eq!(recs[1].bot_id(), "b2panic");
    }

    #[test]
    fn outage_aborts_only_that_engine() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("log.jsonl");
        let s = run_audit(&plan(&["b1", "b2"], &["down", "fixed"]), &[&Fixed, &Down], &log, &VirtualClock::new(0)).unwrap();
        assert_eq!(s.aborted_engines.len(), 1);
        // one wave of the down engine, then both fixed waves
        assert_eq!(s.records, 2 + 4);
        assert_eq!(s.ok, 4);
    }

    #[test]
    fn repeats_and_window() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("log.jsonl");
        let mut p = plan(&["b1", "b2", "b3"], &["fixed"]);
        p.repeat_count = 2;
        run_audit(&p, &[&Fixed], &log, &VirtualClock::new(0)).unwrap();
        let recs = read_serp_log_all(&log).unwrap();
        assert_eq!(recs.len(), 12);
        for wave in recs.chunks(3) {
            let ts: Vec<i64> = wave.iter().map(|r| r.timestamp_ms()).collect();
            assert!(ts.iter().max().unwrap() - ts.iter().min().unwrap() < SIMULTANEITY_WINDOW_MS);
        }
        assert_eq!(recs.iter().filter(|r| r.audit_id() == "a.r2").count(), 6);
    }

    #[test]
    fn missing_client_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_audit(&plan(&["b1"], &["nope"]), &[&Fixed], &dir.path().join("l"), &VirtualClock::new(0));
        assert!(matches!(err, Err(AuditError::MissingClient(_))));
    }

    #[test]
    fn plan_file_parses() {
        let text = r#"
audit_id = "x"
engines = ["sim"]
queries_path = "q.csv"
profiles_path = "p.json"
seed = 9
[delays]
inter_query_ms = [10, 20]
"#;
        let p: PlanFile = toml::from_str(text).unwrap();
        assert_eq!(p.repeat_count, 2);
        assert_eq!(p.delays.inter_query_ms, DelayRange::new(10, 20));
        assert_eq!(p.delays.typing_ms_per_char, DelayRange::new(80, 200));
    }
}
