//! From SERP logs to pairwise comparison records and grouped statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Category;
use crate::metrics::{common_top_k, d_metric, edit_distance, symdiff_top_k, to_category_sequence, MetricConfig, MetricError, RankedList};
use crate::model::{string_enum, word_count, BotType, ComparisonRecord, HistoryKind, Metric, QueryCategory, SerpRecord, SerpStatus};
use crate::seed;
use crate::stats::{anova_oneway, bonferroni, bootstrap_ci, mann_whitney_u, BootstrapCI, MwuMode, StatResult, StatsError};

/// Results per SERP considered by every metric.
pub const TOP_K: usize = 10;

string_enum!(Grouping { SameLocation => "Same Location", DiffLocation => "Diff Location" });

impl Grouping {
    pub fn of(same_location: bool) -> Grouping {
        if same_location {
            Grouping::SameLocation
        } else {
            Grouping::DiffLocation
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("category mode needs a category map")]
    NoCategoryMap,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("no records left after filtering: {0}")]
    Empty(String),
    #[error("{engine} / {category}: missing comparison group {group}")]
    MissingGroup { engine: String, category: QueryCategory, group: String },
    #[error("time control needs at least two epochs, got {0}")]
    TooFewEpochs(usize),
    #[error("epoch {epoch} does not follow the same plan as epoch 0: {detail}")]
    PlanMismatch { epoch: usize, detail: String },
}

/// Which bot pairs to form and how to compare them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingSpec {
    /// `None` forms both groupings.
    pub grouping: Option<Grouping>,
    pub bot_type: Option<BotType>,
    pub query_category: Option<QueryCategory>,
    pub metric: Metric,
    /// Compare category sequences instead of URLs. Implied by `Metric::DRboCategory`.
    pub category_mode: bool,
    /// Category mode drops queries with any SERP spanning more distinct categories.
    pub max_distinct_categories: usize,
    /// Inclusive word-count bounds on the query.
    pub word_count_range: Option<(u32, u32)>,
    /// Restrict to these query texts.
    pub queries: Option<BTreeSet<String>>,
    pub config: MetricConfig,
}

impl Default for PairingSpec {
    fn default() -> Self {
        PairingSpec {
            grouping: None,
            bot_type: None,
            query_category: None,
            metric: Metric::DRbo,
            category_mode: false,
            max_distinct_categories: 4,
            word_count_range: None,
            queries: None,
            config: MetricConfig::default(),
        }
    }
}

impl PairingSpec {
    fn category_mode(&self) -> bool {
        self.category_mode || self.metric == Metric::DRboCategory
    }

    fn recorded_metric(&self) -> Metric {
        if self.category_mode() && self.metric == Metric::DRbo {
            Metric::DRboCategory
        } else {
            self.metric
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairs {
    pub records: Vec<ComparisonRecord>,
    pub notes: Vec<String>,
}

fn compare(a: &RankedList, b: &RankedList, spec: &PairingSpec) -> Result<f64, MetricError> {
    let (s, t) = (a.items(), b.items());
    Ok(match spec.metric {
        Metric::DRbo | Metric::DRboCategory => d_metric(s, t, &spec.config)?,
        Metric::EditDistance => edit_distance(s, t) as f64,
        Metric::SymDiff10 => symdiff_top_k(s, t, spec.config.top_k_symdiff)? as f64,
        Metric::CommonTop3 => common_top_k(s, t, spec.config.top_k_common)? as f64,
    })
}

fn url_list(r: &SerpRecord) -> Result<RankedList, MetricError> {
    RankedList::distinct(r.top_urls(TOP_K).into_iter().map(str::to_string).collect())
}

fn pairs_for_query(
    serps: &[&SerpRecord],
    spec: &PairingSpec,
    categories: Option<&BTreeMap<String, Category>>,
) -> Result<(Vec<ComparisonRecord>, Option<String>), AnalyzeError> {
    let first = serps[0];
    let label = format!("{} / {} / {}", first.audit_id(), first.engine(), first.query_text());
    if serps.len() < 2 {
        return Ok((Vec::new(), Some(format!("{label}: fewer than two eligible bots"))));
    }
    let lists: Vec<RankedList> = if spec.category_mode() {
        let map = categories.ok_or(AnalyzeError::NoCategoryMap)?;
        let top: Vec<Vec<_>> = serps.iter().map(|r| r.results()[..r.results().len().min(TOP_K)].to_vec()).collect();
        let widest = top
            .iter()
            .map(|rs| rs.iter().filter_map(|x| map.get(&x.domain)).collect::<BTreeSet<_>>().len())
            .max()
            .unwrap_or(0);
        if widest > spec.max_distinct_categories {
            return Ok((Vec::new(), Some(format!("{label}: a SERP spans {widest} categories, query dropped"))));
        }
        top.iter().map(|rs| to_category_sequence(rs, map)).collect::<Result<_, _>>()?
    } else {
        serps.iter().map(|r| url_list(r)).collect::<Result<_, _>>()?
    };

    let metric = spec.recorded_metric();
    let mut out = Vec::new();
    for i in 0..serps.len() {
        for j in i + 1..serps.len() {
            let (a, b) = (serps[i].bot(), serps[j].bot());
            let same = a.location == b.location;
            if spec.grouping.is_some_and(|g| g != Grouping::of(same)) {
                continue;
            }
            out.push(ComparisonRecord {
                audit_id: first.audit_id().to_string(),
                engine: first.engine().to_string(),
                query_text: first.query_text().to_string(),
                query_category: first.query_category(),
                query_words: word_count(first.query_text()),
                bot_type: a.bot_type,
                bot_a: a.bot_id.clone(),
                bot_b: b.bot_id.clone(),
                history_a: a.history_kind,
                history_b: b.history_kind,
                same_location: same,
                metric,
                value: compare(&lists[i], &lists[j], spec)?,
            });
        }
    }
    Ok((out, None))
}

/// Expected pair counts for bots spread over locations with `sizes` bots each.
pub fn expected_pair_counts(sizes: &[usize]) -> (usize, usize) {
    let same = sizes.iter().map(|n| n * n.saturating_sub(1) / 2).sum();
    let total: usize = sizes.iter().sum();
    let all = total * total.saturating_sub(1) / 2;
    (same, all - same)
}

/// Forms every unordered pair of bots of one type that answered the same
/// query in the same audit and engine, and compares their top results.
///
/// Only `Ok` records are used. Bots of different types are never paired.
pub fn make_pairs(
    records: &[SerpRecord],
    spec: &PairingSpec,
    categories: Option<&BTreeMap<String, Category>>,
) -> Result<Pairs, AnalyzeError> {
    if spec.category_mode() && categories.is_none() {
        return Err(AnalyzeError::NoCategoryMap);
    }
    type Key<'a> = (&'a str, &'a str, BotType, &'a str);
    let mut cells: BTreeMap<Key, BTreeMap<&str, &SerpRecord>> = BTreeMap::new();
    let mut notes = Vec::new();
    for r in records {
        let bot = r.bot();
        let words = word_count(r.query_text());
        let eligible = r.status() == SerpStatus::Ok
            && spec.bot_type.is_none_or(|t| t == bot.bot_type)
            && spec.query_category.is_none_or(|c| c == r.query_category())
            && spec.word_count_range.is_none_or(|(lo, hi)| (lo..=hi).contains(&words))
            && spec.queries.as_ref().is_none_or(|q| q.contains(r.query_text()));
        if !eligible {
            continue;
        }
        let cell = cells.entry((r.audit_id(), r.engine(), bot.bot_type, r.query_text())).or_default();
        if cell.insert(r.bot_id(), r).is_some() {
            notes.push(format!("{} / {} / {}: bot {} answered twice, last record kept", r.audit_id(), r.engine(), r.query_text(), r.bot_id()));
        }
    }
    let cells: Vec<Vec<&SerpRecord>> = cells.into_values().map(|m| m.into_values().collect()).collect();
    let parts: Vec<(Vec<ComparisonRecord>, Option<String>)> =
        cells.par_iter().map(|serps| pairs_for_query(serps, spec, categories)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (recs, note) in parts {
        out.extend(recs);
        notes.extend(note);
    }
    Ok(Pairs { records: out, notes })
}

/// How records are pooled before bootstrapping a cell mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Every pair is one observation.
    #[default]
    Pooled,
    /// Pairs are averaged per query first; queries are the observations.
    PerQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub engine: String,
    pub bot_type: BotType,
    pub grouping: Grouping,
    pub category: QueryCategory,
    pub metric: Metric,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {} / {} / {} / {}", self.engine, self.bot_type, self.grouping, self.category, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub key: CellKey,
    pub n_records: usize,
    pub n_queries: usize,
    pub ci: BootstrapCI,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupMeans {
    pub cells: Vec<GroupCell>,
    pub notes: Vec<String>,
}

impl GroupMeans {
    pub fn get(&self, engine: &str, bot_type: BotType, grouping: Grouping, category: QueryCategory) -> Option<&GroupCell> {
        self.cells.iter().find(|c| {
            c.key.engine == engine && c.key.bot_type == bot_type && c.key.grouping == grouping && c.key.category == category
        })
    }
}

fn key_of(r: &ComparisonRecord) -> CellKey {
    CellKey {
        engine: r.engine.clone(),
        bot_type: r.bot_type,
        grouping: Grouping::of(r.same_location),
        category: r.query_category,
        metric: r.metric,
    }
}

/// Bootstrap mean of every (engine, bot type, grouping, query category,
/// metric) cell. Each cell's resampling seed is derived from `seed` and the
/// cell key, so a cell's interval does not depend on which others exist.
pub fn group_means(records: &[ComparisonRecord], how: Aggregation, resamples: usize, seed: u64) -> Result<GroupMeans, AnalyzeError> {
    let mut cells: BTreeMap<CellKey, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        cells.entry(key_of(r)).or_default().entry(r.query_text.as_str()).or_default().push(r.value);
    }
    let mut out = GroupMeans::default();
    let present: BTreeSet<(String, BotType, Metric)> = cells.keys().map(|k| (k.engine.clone(), k.bot_type, k.metric)).collect();
    for (engine, bot_type, metric) in present {
        for &grouping in Grouping::ALL {
            for &category in QueryCategory::ALL {
                let k = CellKey { engine: engine.clone(), bot_type, grouping, category, metric };
                if !cells.contains_key(&k) {
                    out.notes.push(format!("{k}: no records, cell omitted"));
                }
            }
        }
    }
    for (key, by_query) in cells {
        let values: Vec<f64> = match how {
            Aggregation::Pooled => by_query.values().flatten().copied().collect(),
            Aggregation::PerQuery => by_query.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect(),
        };
        let cell_seed = seed::derive(seed, &[&key.to_string()]);
        let ci = bootstrap_ci(&values, resamples, crate::stats::DEFAULT_LEVEL, cell_seed)?;
        out.cells.push(GroupCell { n_records: by_query.values().map(Vec::len).sum(), n_queries: by_query.len(), key, ci });
    }
    Ok(out)
}

/// One planned comparison; `result` is `None` when a side had no data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub engine: String,
    pub label: String,
    pub result: Option<StatResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub untestable: Option<String>,
}

impl Comparison {
    pub fn significant(&self, alpha: f64) -> bool {
        self.result.as_ref().is_some_and(|r| r.p_adjusted < alpha)
    }
}

fn test_pair(engine: &str, label: String, a: &[f64], b: &[f64], mode: MwuMode) -> Result<Comparison, AnalyzeError> {
    if a.is_empty() || b.is_empty() {
        let side = if a.is_empty() { "first" } else { "second" };
        return Ok(Comparison { engine: engine.to_string(), label, result: None, untestable: Some(format!("{side} group empty")) });
    }
    let r = mann_whitney_u(a, b, mode)?.with_labels(label.split(" vs ").map(str::to_string));
    Ok(Comparison { engine: engine.to_string(), label, result: Some(r), untestable: None })
}

fn adjust(mut tests: Vec<Comparison>, family_size: usize) -> Result<Vec<Comparison>, AnalyzeError> {
    let testable: Vec<StatResult> = tests.iter().filter_map(|c| c.result.clone()).collect();
    // the family is fixed by design; untestable cells do not shrink it
    let mut adjusted = bonferroni(testable, family_size)?.into_iter();
    for c in tests.iter_mut().filter(|c| c.result.is_some()) {
        c.result = adjusted.next();
    }
    if tests.len() > family_size {
        return Err(StatsError::FamilyTooSmall { family: family_size, results: tests.len() }.into());
    }
    Ok(tests)
}

fn values<'a>(records: impl Iterator<Item = &'a ComparisonRecord>) -> Vec<f64> {
    records.map(|r| r.value).collect()
}

/// Per engine: Same vs Diff location within each query category, then
/// General vs Specific within each grouping. Four tests per engine, adjusted
/// together against `family_size` (12 for three engines).
pub fn run_figure2_tests(records: &[ComparisonRecord], metric: Metric, family_size: usize, mode: MwuMode) -> Result<Vec<Comparison>, AnalyzeError> {
    let recs: Vec<&ComparisonRecord> = records.iter().filter(|r| r.metric == metric).collect();
    let engines: BTreeSet<&str> = recs.iter().map(|r| r.engine.as_str()).collect();
    let cell = |e: &str, g: Grouping, c: QueryCategory| {
        values(recs.iter().copied().filter(|r| r.engine == e && Grouping::of(r.same_location) == g && r.query_category == c))
    };
    let mut tests = Vec::new();
    for e in engines {
        for &c in QueryCategory::ALL {
            let label = format!("{c} Same Location vs {c} Diff Location");
            tests.push(test_pair(e, label, &cell(e, Grouping::SameLocation, c), &cell(e, Grouping::DiffLocation, c), mode)?);
        }
        for &g in Grouping::ALL {
            let label = format!("General {g} vs Specific {g}");
            tests.push(test_pair(e, label, &cell(e, g, QueryCategory::General), &cell(e, g, QueryCategory::Specific), mode)?);
        }
    }
    adjust(tests, family_size)
}

/// Type-vs-type comparisons on the queries every type answered: three type
/// pairs × two groupings per (query category, engine), adjusted against
/// `family_size` (36 for three engines and two query categories).
pub fn run_cross_type_tests(records: &[ComparisonRecord], metric: Metric, family_size: usize, mode: MwuMode) -> Result<Vec<Comparison>, AnalyzeError> {
    let recs: Vec<&ComparisonRecord> = records.iter().filter(|r| r.metric == metric).collect();
    let engines: BTreeSet<&str> = recs.iter().map(|r| r.engine.as_str()).collect();
    let mut tests = Vec::new();
    for &c in QueryCategory::ALL {
        for e in &engines {
            let per_type: BTreeMap<BotType, BTreeSet<&str>> = BotType::ALL
                .iter()
                .map(|&t| (t, recs.iter().filter(|r| r.engine == *e && r.bot_type == t).map(|r| r.query_text.as_str()).collect()))
                .collect();
            let shared: BTreeSet<&str> = per_type
                .values()
                .filter(|s| !s.is_empty())
                .fold(None, |acc: Option<BTreeSet<&str>>, s| Some(acc.map_or_else(|| s.clone(), |a| a.intersection(s).copied().collect())))
                .unwrap_or_default();
            let cell = |t: BotType, g: Grouping| {
                values(recs.iter().copied().filter(|r| {
                    r.engine == *e
                        && r.bot_type == t
                        && r.query_category == c
                        && Grouping::of(r.same_location) == g
                        && shared.contains(r.query_text.as_str())
                }))
            };
            for &g in Grouping::ALL {
                for (a, b) in [(BotType::Type1, BotType::Type2), (BotType::Type1, BotType::Type3), (BotType::Type2, BotType::Type3)] {
                    let label = format!("{c} {a} {g} vs {c} {b} {g}");
                    tests.push(test_pair(e, label, &cell(a, g), &cell(b, g), mode)?);
                }
            }
        }
    }
    adjust(tests, family_size)
}

/// One-way ANOVA over Type-3 pair values grouped by history contrast:
/// conflict vs stateless, general vs stateless, stateless vs stateless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryAnova {
    pub engine: String,
    pub category: QueryCategory,
    pub group_means: [f64; 3],
    pub group_sizes: [usize; 3],
    pub result: StatResult,
}

pub const HISTORY_GROUPS: [(HistoryKind, &str); 3] = [
    (HistoryKind::ConflictNews, "conflict v. stateless"),
    (HistoryKind::GeneralNews, "general v. stateless"),
    (HistoryKind::Stateless, "stateless v. stateless"),
];

/// `grouping` selects which pairs enter; `None` uses both.
pub fn run_history_anova(records: &[ComparisonRecord], metric: Metric, grouping: Option<Grouping>) -> Result<Vec<HistoryAnova>, AnalyzeError> {
    let recs: Vec<&ComparisonRecord> = records
        .iter()
        .filter(|r| r.metric == metric && r.bot_type == BotType::Type3)
        .filter(|r| grouping.is_none_or(|g| g == Grouping::of(r.same_location)))
        .collect();
    let engines: BTreeSet<&str> = recs.iter().map(|r| r.engine.as_str()).collect();
    let mut out = Vec::new();
    for e in engines {
        for &c in QueryCategory::ALL {
            let mut groups = Vec::new();
            for (kind, name) in HISTORY_GROUPS {
                let g = values(recs.iter().copied().filter(|r| {
                    let h = (r.history_a, r.history_b);
                    r.engine == e && r.query_category == c && (h == (kind, HistoryKind::Stateless) || h == (HistoryKind::Stateless, kind))
                }));
                if g.is_empty() {
                    return Err(AnalyzeError::MissingGroup { engine: e.to_string(), category: c, group: name.to_string() });
                }
                groups.push(g);
            }
            let result = anova_oneway(&groups)?.with_labels(HISTORY_GROUPS.iter().map(|g| g.1));
            let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
            out.push(HistoryAnova {
                engine: e.to_string(),
                category: c,
                group_means: [mean(&groups[0]), mean(&groups[1]), mean(&groups[2])],
                group_sizes: [groups[0].len(), groups[1].len(), groups[2].len()],
                result,
            });
        }
    }
    Ok(out)
}

/// Keeps queries of `lo..=hi` words, subsamples (seeded, per engine) so both
/// query categories keep the same number of queries, then takes group means.
pub fn length_control(records: &[ComparisonRecord], lo: u32, hi: u32, resamples: usize, seed: u64) -> Result<GroupMeans, AnalyzeError> {
    let kept: Vec<&ComparisonRecord> = records.iter().filter(|r| (lo..=hi).contains(&r.query_words)).collect();
    let mut by_engine: BTreeMap<&str, BTreeMap<QueryCategory, BTreeSet<&str>>> = BTreeMap::new();
    for r in &kept {
        by_engine.entry(&r.engine).or_default().entry(r.query_category).or_default().insert(&r.query_text);
    }
    let mut chosen: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (engine, cats) in &by_engine {
        let n = QueryCategory::ALL.iter().map(|c| cats.get(c).map_or(0, BTreeSet::len)).min().unwrap_or(0);
        if n == 0 {
            continue;
        }
        for (cat, qs) in cats {
            let qs: Vec<&str> = qs.iter().copied().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &["length", engine, cat.as_str()]));
            let mut idx = sample(&mut rng, qs.len(), n).into_vec();
            idx.sort_unstable();
            chosen.extend(idx.into_iter().map(|i| (*engine, qs[i])));
        }
    }
    let filtered: Vec<ComparisonRecord> =
        kept.into_iter().filter(|r| chosen.contains(&(r.engine.as_str(), r.query_text.as_str()))).cloned().collect();
    if filtered.is_empty() {
        return Err(AnalyzeError::Empty(format!("no engine has queries of both categories with {lo} to {hi} words")));
    }
    group_means(&filtered, Aggregation::Pooled, resamples, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub key: CellKey,
    pub means: Vec<f64>,
    /// Least-squares slope of the mean against the epoch index.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeControl {
    pub epochs: Vec<GroupMeans>,
    pub trends: Vec<Trend>,
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - xbar) * (y - ybar)).sum();
    let sxx: f64 = (0..ys.len()).map(|i| (i as f64 - xbar).powi(2)).sum();
    sxy / sxx
}

fn plan_of(records: &[SerpRecord]) -> (BTreeSet<(&str, &str)>, BTreeSet<&str>) {
    (records.iter().map(|r| (r.engine(), r.query_text())).collect(), records.iter().map(|r| r.bot_id()).collect())
}

/// Group means per epoch for logs collected with one plan at different
/// times, plus the slope of every cell mean across epochs.
pub fn time_control(epochs: &[Vec<SerpRecord>], spec: &PairingSpec, resamples: usize, seed: u64) -> Result<TimeControl, AnalyzeError> {
    if epochs.len() < 2 {
        return Err(AnalyzeError::TooFewEpochs(epochs.len()));
    }
    let (queries0, bots0) = plan_of(&epochs[0]);
    for (i, log) in epochs.iter().enumerate().skip(1) {
        let (q, b) = plan_of(log);
        if q != queries0 {
            return Err(AnalyzeError::PlanMismatch { epoch: i, detail: "engine/query sets differ".into() });
        }
        if b != bots0 {
            return Err(AnalyzeError::PlanMismatch { epoch: i, detail: "bot sets differ".into() });
        }
    }
    let mut means = Vec::new();
    for log in epochs {
        let pairs = make_pairs(log, spec, None)?;
        means.push(group_means(&pairs.records, Aggregation::Pooled, resamples, seed)?);
    }
    let keys: BTreeSet<CellKey> = means.iter().flat_map(|m| m.cells.iter().map(|c| c.key.clone())).collect();
    let trends = keys
        .into_iter()
        .filter_map(|key| {
            let ys: Option<Vec<f64>> = means.iter().map(|m| m.cells.iter().find(|c| c.key == key).map(|c| c.ci.mean)).collect();
            ys.map(|ys| Trend { slope: slope(&ys), means: ys, key })
        })
        .collect();
    Ok(TimeControl { epochs: means, trends })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BotProfile, Language, Location, RankedResult};
    use proptest::prelude::*;

    fn serp(bot: &str, loc: &str, t: BotType, h: HistoryKind, q: &str, cat: QueryCategory, urls: &[&str]) -> SerpRecord {
        let l = Location::new(loc).unwrap();
        let lang = if t == BotType::Type1 { Language::english() } else { l.local_language().unwrap() };
        let meta = BotProfile::new(bot, t, l, lang, h, bot).unwrap().meta();
        let results = urls.iter().enumerate().map(|(i, u)| RankedResult::from_url(i as u32 + 1, *u, "", "").unwrap()).collect();
        SerpRecord::new("a", "e", meta, q, cat, 0, SerpStatus::Ok, results).unwrap()
    }

    fn urls(offset: usize) -> Vec<String> {
        (0..10).map(|i| format!("https://s{}.com/", i + offset)).collect()
    }

    fn log(layout: &[(&str, usize)], q: &str, shift: impl Fn(&str) -> usize) -> Vec<SerpRecord> {
        let mut out = Vec::new();
        for (loc, n) in layout {
            for i in 0..*n {
                let id = format!("{loc}-{i}");
                let u = urls(shift(loc));
                let u: Vec<&str> = u.iter().map(String::as_str).collect();
                out.push(serp(&id, loc, BotType::Type1, HistoryKind::Stateless, q, QueryCategory::General, &u));
            }
        }
        out
    }

    #[test]
    fn pair_counts() {
        let recs = log(&[("IL", 3)], "q", |_| 0);
        let p = make_pairs(&recs, &PairingSpec::default(), None).unwrap();
        assert_eq!(p.records.len(), 3);
        assert!(p.records.iter().all(|r| r.same_location && r.value == 0.0));

        let recs = log(&[("IL", 2), ("BR", 2)], "q", |_| 0);
        let spec = PairingSpec { grouping: Some(Grouping::DiffLocation), ..Default::default() };
        assert_eq!(make_pairs(&recs, &spec, None).unwrap().records.len(), 4);
        assert_eq!(expected_pair_counts(&[2, 2]), (2, 4));
    }

    #[test]
    fn lonely_bot_is_noted() {
        let p = make_pairs(&log(&[("IL", 1)], "q", |_| 0), &PairingSpec::default(), None).unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.notes.len(), 1);
    }

    #[test]
    fn types_never_mix() {
        let mut recs = log(&[("IL", 2)], "q", |_| 0);
        let u = urls(0);
        let u: Vec<&str> = u.iter().map(String::as_str).collect();
        recs.push(serp("x", "IL", BotType::Type2, HistoryKind::Stateless, "q", QueryCategory::General, &u));
        let p = make_pairs(&recs, &PairingSpec::default(), None).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].bot_type, BotType::Type1);
    }

    #[test]
    fn category_mode_filters_wide_serps() {
        let recs = log(&[("IL", 2)], "q", |_| 0);
        let all: Vec<Category> = Category::ALL.to_vec();
        let map: BTreeMap<String, Category> = (0..10).map(|i| (format!("s{i}.com"), all[i % 5])).collect();
        let spec = PairingSpec { metric: Metric::DRboCategory, ..Default::default() };
        let p = make_pairs(&recs, &spec, Some(&map)).unwrap();
        assert!(p.records.is_empty() && p.notes[0].contains("5 categories"));
        let narrow: BTreeMap<String, Category> = (0..10).map(|i| (format!("s{i}.com"), all[i % 2])).collect();
        let p = make_pairs(&recs, &spec, Some(&narrow)).unwrap();
        assert_eq!(p.records[0].metric, Metric::DRboCategory);
        assert_eq!(p.records[0].value, 0.0);
        assert!(matches!(make_pairs(&recs, &spec, None), Err(AnalyzeError::NoCategoryMap)));
    }

    #[test]
    fn figure2_keeps_untestable_cells_in_family() {
        let recs = log(&[("IL", 3), ("BR", 3)], "q", |l| if l == "IL" { 0 } else { 3 });
        let p = make_pairs(&recs, &PairingSpec::default(), None).unwrap();
        let tests = run_figure2_tests(&p.records, Metric::DRbo, 12, MwuMode::Auto).unwrap();
        assert_eq!(tests.len(), 4);
        let general = &tests[0];
        assert!(general.result.as_ref().unwrap().family_size == 12);
        assert!(tests[1].result.is_none() && tests[1].untestable.is_some());
    }

    #[test]
    fn cross_type_self_probe_has_p_one() {
        let a: Vec<ComparisonRecord> = make_pairs(&log(&[("IL", 3), ("BR", 3)], "q", |l| l.len()), &PairingSpec::default(), None).unwrap().records;
        let mut b = a.clone();
        b.iter_mut().for_each(|r| r.bot_type = BotType::Type2);
        let all: Vec<ComparisonRecord> = a.into_iter().chain(b).collect();
        let tests = run_cross_type_tests(&all, Metric::DRbo, 36, MwuMode::Auto).unwrap();
        assert_eq!(tests.len(), 12);
        let t12: Vec<&Comparison> = tests.iter().filter(|c| c.label.starts_with("General Type1") && c.label.contains("Type2")).collect();
        assert!(t12.iter().all(|c| c.result.as_ref().unwrap().p_value == 1.0));
        assert!(tests.iter().filter_map(|c| c.result.as_ref()).all(|r| r.family_size == 36));
    }

    fn hist_record(ha: HistoryKind, hb: HistoryKind, cat: QueryCategory, v: f64) -> ComparisonRecord {
        ComparisonRecord {
            audit_id: "a".into(),
            engine: "e".into(),
            query_text: "q".into(),
            query_category: cat,
            query_words: 1,
            bot_type: BotType::Type3,
            bot_a: "x".into(),
            bot_b: "y".into(),
            history_a: ha,
            history_b: hb,
            same_location: true,
            metric: Metric::DRbo,
            value: v,
        }
    }

    #[test]
    fn history_anova_groups() {
        use HistoryKind::*;
        let mut recs = Vec::new();
        for &c in QueryCategory::ALL {
            for v in [1.0, 2.0, 3.0] {
                recs.push(hist_record(ConflictNews, Stateless, c, v / 10.0));
                recs.push(hist_record(Stateless, GeneralNews, c, (v + 1.0) / 10.0));
                recs.push(hist_record(Stateless, Stateless, c, (v + 2.0) / 10.0));
            }
        }
        let out = run_history_anova(&recs, Metric::DRbo, Some(Grouping::SameLocation)).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[0].result.statistic - 3.0).abs() < 1e-9);
        recs.retain(|r| r.history_a != ConflictNews);
        assert!(matches!(run_history_anova(&recs, Metric::DRbo, None), Err(AnalyzeError::MissingGroup { .. })));
    }

    #[test]
    fn length_control_errors_and_balances() {
        let mut recs = Vec::new();
        for (q, cat, words) in [("a b c", QueryCategory::General, 3), ("a b c d", QueryCategory::General, 4), ("x y z", QueryCategory::Specific, 3), ("x y", QueryCategory::Specific, 2)] {
            let mut r = hist_record(HistoryKind::Stateless, HistoryKind::Stateless, cat, 0.5);
            r.query_text = q.into();
            r.query_words = words;
            recs.push(r);
        }
        let m = length_control(&recs, 3, 8, 100, 1).unwrap();
        let n: usize = m.cells.iter().map(|c| c.n_queries).sum();
        assert_eq!(n, 2);
        let short: Vec<ComparisonRecord> = recs.iter().filter(|r| r.query_words == 2).cloned().collect();
        assert!(length_control(&short, 3, 8, 100, 1).is_err());
    }

    #[test]
    fn group_means_are_seeded_and_notes_missing_cells() {
        let recs = make_pairs(&log(&[("IL", 3), ("BR", 3)], "q", |l| l.len()), &PairingSpec::default(), None).unwrap().records;
        let a = group_means(&recs, Aggregation::Pooled, 500, 3).unwrap();
        assert_eq!(a.cells, group_means(&recs, Aggregation::Pooled, 500, 3).unwrap().cells);
        assert_eq!(a.cells.len(), 2);
        assert_eq!(a.notes.len(), 2);
        let same = a.get("e", BotType::Type1, Grouping::SameLocation, QueryCategory::General).unwrap();
        assert_eq!((same.ci.lo, same.ci.hi), (0.0, 0.0));
    }

    #[test]
    fn time_control_slopes_and_plan_check() {
        let e0 = log(&[("IL", 2), ("BR", 2)], "q", |l| l.len());
        let tc = time_control(&[e0.clone(), e0.clone(), e0.clone()], &PairingSpec::default(), 200, 1).unwrap();
        assert!(tc.trends.iter().all(|t| t.slope == 0.0));
        assert!(matches!(time_control(std::slice::from_ref(&e0), &PairingSpec::default(), 200, 1), Err(AnalyzeError::TooFewEpochs(1))));
        let other = log(&[("IL", 2), ("SA", 2)], "q", |_| 0);
        assert!(matches!(time_control(&[e0, other], &PairingSpec::default(), 200, 1), Err(AnalyzeError::PlanMismatch { .. })));
        assert!((slope(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-12);
    }

    fn shuffled_urls(seed: u64, pool: usize) -> Vec<String> {
        let mut v: Vec<usize> = (0..pool).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut v[..], &mut rng);
        v.into_iter().take(10).map(|i| format!("https://s{i}.com/")).collect()
    }

    proptest! {
        #[test]
        fn pair_counts_match_formula(sizes in proptest::collection::vec(0usize..5, 1..4), seed in 0u64..1000) {
            let locs = ["IL", "SA", "BR", "US_NY"];
            let mut recs = Vec::new();
            for (li, n) in sizes.iter().enumerate() {
                for i in 0..*n {
                    let u = shuffled_urls(seed + (li * 10 + i) as u64, 14);
                    let u: Vec<&str> = u.iter().map(String::as_str).collect();
                    recs.push(serp(&format!("{}-{i}", locs[li]), locs[li], BotType::Type2, HistoryKind::Stateless, "q", QueryCategory::Specific, &u));
                }
            }
            let p = make_pairs(&recs, &PairingSpec::default(), None).unwrap();
            let (same, diff) = expected_pair_counts(&sizes);
            prop_assert_eq!(p.records.iter().filter(|r| r.same_location).count(), same);
            prop_assert_eq!(p.records.iter().filter(|r| !r.same_location).count(), diff);
            // input order does not matter
            let mut swapped = recs.clone();
            swapped.reverse();
            let q = make_pairs(&swapped, &PairingSpec::default(), None).unwrap();
            prop_assert_eq!(p.records, q.records);
        }

        #[test]
        fn category_d_zero_when_url_d_zero(seed in 0u64..1000) {
            let u = shuffled_urls(seed, 20);
            let u: Vec<&str> = u.iter().map(String::as_str).collect();
            let recs = vec![
                serp("a", "IL", BotType::Type1, HistoryKind::Stateless, "q", QueryCategory::General, &u),
                serp("b", "BR", BotType::Type1, HistoryKind::Stateless, "q", QueryCategory::General, &u),
            ];
            let map: BTreeMap<String, Category> = (0..20).map(|i| (format!("s{i}.com"), Category::ALL[i % 3])).collect();
            let url = make_pairs(&recs, &PairingSpec::default(), None).unwrap();
            let cat = make_pairs(&recs, &PairingSpec { category_mode: true, ..Default::default() }, Some(&map)).unwrap();
            prop_assert_eq!(url.records[0].value, 0.0);
            prop_assert_eq!(cat.records[0].value, 0.0);
        }
    }
}
