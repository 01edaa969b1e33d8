//! Rank-similarity kernels.
//!
//! All functions are pure. Lists are compared on item identity only; callers
//! choose the item key (URL, domain, or occurrence-indexed category token).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::RankedResult;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("persistence p must lie in (0, 1), got {0}")]
    Persistence(f64),
    #[error("rank-biased overlap needs two non-empty lists")]
    EmptyList,
    #[error("ranked list contains duplicate item at position {0}")]
    Duplicate(usize),
    #[error("depth k must be at least 1")]
    Depth,
    #[error("domains missing from the category map: {0:?}")]
    Unmapped(Vec<String>),
}

/// How RBO treats ranks below the evaluated depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RboVariant {
    /// Agreement observed at depth k is assumed to continue; identical lists score 1.
    #[default]
    Extrapolated,
    /// Sum truncated at depth k; identical lists score `1 - p^k`.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub p: f64,
    pub top_k_symdiff: usize,
    pub top_k_common: usize,
    pub variant: RboVariant,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { p: 0.7, top_k_symdiff: 10, top_k_common: 3, variant: RboVariant::Extrapolated }
    }
}

impl MetricConfig {
    pub fn with_p(p: f64) -> Result<Self, MetricError> {
        check_p(p)?;
        Ok(MetricConfig { p, ..Default::default() })
    }
}

fn check_p(p: f64) -> Result<(), MetricError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(MetricError::Persistence(p))
    }
}

/// An ordered list of item keys.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankedList(Vec<String>);

impl RankedList {
    /// A list of distinct items (URLs, domains).
    pub fn distinct(items: Vec<String>) -> Result<Self, MetricError> {
        check_distinct(&items)?;
        Ok(RankedList(items))
    }

    /// A list that may repeat items (categories); repeats become `item#n` tokens.
    pub fn occurrence_indexed<S: AsRef<str>>(items: &[S]) -> Self {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        RankedList(
            items
                .iter()
                .map(|it| {
                    let it = it.as_ref();
                    let n = seen.entry(it).or_insert(0);
                    *n += 1;
                    format!("{it}#{n}")
                })
                .collect(),
        )
    }

    pub fn items(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_distinct<T: Eq + Hash>(items: &[T]) -> Result<(), MetricError> {
    let mut seen = HashSet::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        if !seen.insert(it) {
            return Err(MetricError::Duplicate(i));
        }
    }
    Ok(())
}

/// Rank-biased overlap evaluated at depth `k = min(|s|, |t|)`.
///
/// With `X_d = |s[..d] ∩ t[..d]|` the extrapolated form is
/// `X_k/k · p^k + (1-p)/p · Σ_{d≤k} X_d/d · p^d`.
pub fn rbo_ext<T: Eq + Hash>(s: &[T], t: &[T], p: f64) -> Result<f64, MetricError> {
    rbo(s, t, p, RboVariant::Extrapolated)
}

pub fn rbo<T: Eq + Hash>(s: &[T], t: &[T], p: f64, variant: RboVariant) -> Result<f64, MetricError> {
    check_p(p)?;
    if s.is_empty() || t.is_empty() {
        return Err(MetricError::EmptyList);
    }
    check_distinct(s)?;
    check_distinct(t)?;
    let k = s.len().min(t.len());
    if variant == RboVariant::Extrapolated && s[..k] == t[..k] {
        return Ok(1.0);
    }

    let mut seen_s: HashSet<&T> = HashSet::with_capacity(k);
    let mut seen_t: HashSet<&T> = HashSet::with_capacity(k);
    let mut overlap = 0usize;
    let mut weighted = 0.0;
    let mut pd = 1.0;
    for d in 1..=k {
        let (a, b) = (&s[d - 1], &t[d - 1]);
        if a == b {
            overlap += 1;
        } else {
            overlap += usize::from(seen_t.contains(a)) + usize::from(seen_s.contains(b));
        }
        seen_s.insert(a);
        seen_t.insert(b);
        pd *= p;
        weighted += overlap as f64 / d as f64 * pd;
    }
    let sum = (1.0 - p) / p * weighted;
    let score = match variant {
        RboVariant::Extrapolated => overlap as f64 / k as f64 * pd + sum,
        RboVariant::Truncated => sum,
    };
    Ok(score.clamp(0.0, 1.0))
}

/// Divergence `D = 1 - RBO` under `cfg`.
pub fn d_metric<T: Eq + Hash>(s: &[T], t: &[T], cfg: &MetricConfig) -> Result<f64, MetricError> {
    Ok(1.0 - rbo(s, t, cfg.p, cfg.variant)?)
}

/// Share of total RBO weight carried by ranks `1..=k`.
pub fn prefix_weight(p: f64, k: u32) -> Result<f64, MetricError> {
    check_p(p)?;
    if k == 0 {
        return Err(MetricError::Depth);
    }
    let k = k as i32;
    let tail: f64 = (1..k).map(|i| p.powi(i) / i as f64).sum();
    Ok(1.0 - p.powi(k - 1) + k as f64 * ((1.0 - p) / p) * ((1.0 / (1.0 - p)).ln() - tail))
}

/// Levenshtein distance over item sequences with unit costs.
pub fn edit_distance<T: Eq>(s: &[T], t: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=t.len()).collect();
    let mut cur = vec![0; t.len() + 1];
    for (i, a) in s.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in t.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[t.len()]
}

fn prefix_set<T: Eq + Hash>(s: &[T], k: usize) -> HashSet<&T> {
    s.iter().take(k).collect()
}

/// Items in exactly one of the two top-`k` prefixes.
///
/// With `k = 3` this is also the "not present in both top 3" count.
pub fn symdiff_top_k<T: Eq + Hash>(s: &[T], t: &[T], k: usize) -> Result<usize, MetricError> {
    if k == 0 {
        return Err(MetricError::Depth);
    }
    let (a, b) = (prefix_set(s, k), prefix_set(t, k));
    Ok(a.symmetric_difference(&b).count())
}

/// Items present in both top-`k` prefixes.
pub fn common_top_k<T: Eq + Hash>(s: &[T], t: &[T], k: usize) -> Result<usize, MetricError> {
    if k == 0 {
        return Err(MetricError::Depth);
    }
    let (a, b) = (prefix_set(s, k), prefix_set(t, k));
    Ok(a.intersection(&b).count())
}

/// Maps results to their domain categories, preserving rank order, then
/// occurrence-indexes repeated categories (`News#1`, `News#2`, ...).
pub fn to_category_sequence<C: AsRef<str>>(
    results: &[RankedResult],
    catmap: &BTreeMap<String, C>,
) -> Result<RankedList, MetricError> {
    let mut missing: Vec<String> = Vec::new();
    let mut cats = Vec::with_capacity(results.len());
    for r in results {
        match catmap.get(&r.domain) {
            Some(c) => cats.push(c.as_ref()),
            None if !missing.contains(&r.domain) => missing.push(r.domain.clone()),
            None => {}
        }
    }
    if !missing.is_empty() {
        return Err(MetricError::Unmapped(missing));
    }
    Ok(RankedList::occurrence_indexed(&cats))
}
