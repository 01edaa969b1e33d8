use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Location, QueryCategory, SerpRecord, SerpStatus};
use crate::seed;

/// Minimum evidence for a `(location, engine, query)` cell to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuccessRule {
    pub min_urls: usize,
    pub min_ips: usize,
}

impl Default for SuccessRule {
    fn default() -> Self {
        SuccessRule { min_urls: 4, min_ips: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CellKey {
    pub audit_id: String,
    pub engine: String,
    pub location: String,
    pub query_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExclusionReason {
    /// Fewer distinct IPs than required, counting every attempt.
    InsufficientIps,
    /// Enough IPs attempted, but too few returned enough URLs.
    InsufficientUrls,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::InsufficientIps => "insufficient IPs",
            ExclusionReason::InsufficientUrls => "insufficient IPs with enough URLs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub cell: CellKey,
    pub reason: ExclusionReason,
    pub distinct_ips: usize,
    pub qualifying_ips: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<SerpRecord>,
    pub excluded: Vec<Exclusion>,
}

fn cell_of(r: &SerpRecord) -> CellKey {
    CellKey {
        audit_id: r.audit_id().to_string(),
        engine: r.engine().to_string(),
        location: r.location().as_str().to_string(),
        query_text: r.query_text().to_string(),
    }
}

/// Keeps the Ok records of cells where at least `min_ips` distinct IPs each
/// returned at least `min_urls` results. `ip_labels` maps bot ids to egress
/// labels; unmapped bots are their own IP.
pub fn success_filter(records: Vec<SerpRecord>, ip_labels: &BTreeMap<String, String>, rule: SuccessRule) -> FilterOutcome {
    let ip = |r: &SerpRecord| ip_labels.get(r.bot_id()).cloned().unwrap_or_else(|| r.bot_id().to_string());
    let mut attempted: BTreeMap<CellKey, BTreeSet<String>> = BTreeMap::new();
    let mut qualified: BTreeMap<CellKey, BTreeSet<String>> = BTreeMap::new();
    for r in &records {
        let cell = cell_of(r);
        attempted.entry(cell.clone()).or_default().insert(ip(r));
        let q = qualified.entry(cell).or_default();
        if r.status() == SerpStatus::Ok && r.results().len() >= rule.min_urls {
            q.insert(ip(r));
        }
    }
    let mut excluded = Vec::new();
    let mut keep_cells = BTreeSet::new();
    for (cell, ips) in attempted {
        let qualifying = qualified[&cell].len();
        let reason = if ips.len() < rule.min_ips {
            Some(ExclusionReason::InsufficientIps)
        } else if qualifying < rule.min_ips {
            Some(ExclusionReason::InsufficientUrls)
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(Exclusion { cell, reason, distinct_ips: ips.len(), qualifying_ips: qualifying }),
            None => {
                keep_cells.insert(cell);
            }
        }
    }
    let kept = records
        .into_iter()
        .filter(|r| r.status() == SerpStatus::Ok && keep_cells.contains(&cell_of(r)))
        .collect();
    FilterOutcome { kept, excluded }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BalanceError {
    #[error("audit {audit_id}, engine {engine}: location {location} has no surviving bots")]
    EmptyLocation { audit_id: String, engine: String, location: String },
    #[error("audit {audit_id}, engine {engine}: no query survives in every location for both categories")]
    NoQueries { audit_id: String, engine: String },
}

fn seeded_take(mut items: Vec<String>, n: usize, key: u64) -> BTreeSet<String> {
    if items.len() <= n {
        return items.into_iter().collect();
    }
    items.sort();
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(key));
    items.truncate(n);
    items.into_iter().collect()
}

/// Per `(audit, engine)`: keeps queries present in every location, then
/// subsamples so both query categories have equal counts and every location
/// has the same number of bots. `locations` lists the locations that must be
/// represented; when empty, the locations present in the input are used.
pub fn balance(records: Vec<SerpRecord>, locations: &[Location], seed: u64) -> Result<Vec<SerpRecord>, BalanceError> {
    let mut groups: BTreeMap<(String, String), Vec<&SerpRecord>> = BTreeMap::new();
    for r in &records {
        groups.entry((r.audit_id().to_string(), r.engine().to_string())).or_default().push(r);
    }

    let mut keep: BTreeSet<(String, String, String, String)> = BTreeSet::new();
    for ((audit_id, engine), group) in &groups {
        let wanted: BTreeSet<String> = if locations.is_empty() {
            group.iter().map(|r| r.location().as_str().to_string()).collect()
        } else {
            locations.iter().map(|l| l.as_str().to_string()).collect()
        };
        let mut bots_by_loc: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        let mut locs_by_query: BTreeMap<(&str, QueryCategory), BTreeSet<&str>> = BTreeMap::new();
        for r in group {
            bots_by_loc.entry(r.location().as_str()).or_default().insert(r.bot_id());
            locs_by_query.entry((r.query_text(), r.query_category())).or_default().insert(r.location().as_str());
        }
        for loc in &wanted {
            if !bots_by_loc.contains_key(loc.as_str()) {
                return Err(BalanceError::EmptyLocation { audit_id: audit_id.clone(), engine: engine.clone(), location: loc.clone() });
            }
        }

        let mut by_cat: BTreeMap<QueryCategory, Vec<String>> = BTreeMap::new();
        for ((q, cat), locs) in &locs_by_query {
            if wanted.iter().all(|l| locs.contains(l.as_str())) {
                by_cat.entry(*cat).or_default().push(q.to_string());
            }
        }
        let n_queries = QueryCategory::ALL.iter().map(|c| by_cat.get(c).map_or(0, Vec::len)).min().unwrap_or(0);
        if n_queries == 0 {
            return Err(BalanceError::NoQueries { audit_id: audit_id.clone(), engine: engine.clone() });
        }
        let mut queries = BTreeSet::new();
        for (cat, qs) in by_cat {
            let key = seed::derive(seed, &["balance-queries", audit_id, engine, cat.as_str()]);
            queries.extend(seeded_take(qs, n_queries, key));
        }

        // bots are counted after the query restriction
        let mut bots_left: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in group.iter().filter(|r| queries.contains(r.query_text())) {
            bots_left.entry(r.location().as_str()).or_default().insert(r.bot_id());
        }
        let n_bots = wanted.iter().map(|l| bots_left.get(l.as_str()).map_or(0, BTreeSet::len)).min().unwrap_or(0);
        let mut bots = BTreeSet::new();
        for loc in &wanted {
            let ids: Vec<String> = bots_left[loc.as_str()].iter().map(|s| s.to_string()).collect();
            let key = seed::derive(seed, &["balance-bots", audit_id, engine, loc]);
            bots.extend(seeded_take(ids, n_bots, key));
        }

        for r in group {
            if wanted.contains(r.location().as_str()) && queries.contains(r.query_text()) && bots.contains(r.bot_id()) {
                keep.insert((audit_id.clone(), engine.clone(), r.bot_id().to_string(), r.query_text().to_string()));
            }
        }
    }

    let out: Vec<SerpRecord> = records
        .into_iter()
        .filter(|r| {
            keep.contains(&(r.audit_id().to_string(), r.engine().to_string(), r.bot_id().to_string(), r.query_text().to_string()))
        })
        .collect();
    debug_assert!(is_balanced(&out));
    Ok(out)
}

/// Equal query counts per category and equal bot counts per location, per `(audit, engine)`.
pub(crate) fn is_balanced(records: &[SerpRecord]) -> bool {
    let mut queries: BTreeMap<(&str, &str), BTreeMap<QueryCategory, BTreeSet<&str>>> = BTreeMap::new();
    let mut bots: BTreeMap<(&str, &str), BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    for r in records {
        let k = (r.audit_id(), r.engine());
        queries.entry(k).or_default().entry(r.query_category()).or_default().insert(r.query_text());
        bots.entry(k).or_default().entry(r.location().as_str()).or_default().insert(r.bot_id());
    }
    let equal = |counts: Vec<usize>| counts.windows(2).all(|w| w[0] == w[1]);
    queries.values().all(|m| m.len() == QueryCategory::ALL.len() && equal(m.values().map(BTreeSet::len).collect()))
        && bots.values().all(|m| equal(m.values().map(BTreeSet::len).collect()))
}
