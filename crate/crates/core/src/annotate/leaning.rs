use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::categorize::read_rows;
use super::{AnnotateError, Category, CategoryMap, Leaning};
use crate::model::{SerpRecord, SerpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoderKind {
    Machine,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaningLabel {
    pub url: String,
    pub coder_id: String,
    pub coder_kind: CoderKind,
    pub label: Leaning,
    pub survey_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsensusMode {
    /// Coders must give the identical five-point label.
    #[default]
    Exact,
    /// Labels are compared after the three-way collapse.
    Collapsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Consensus {
    Resolved(Leaning),
    Unresolved,
}

/// Resolves each URL labelled by human coders. A URL resolves to `L` when at
/// least `min_agree` coders gave `L` and no other label reaches that count.
/// A coder who gave one URL conflicting labels is ignored for that URL.
/// Machine labels do not take part. Under `Collapsed`, resolved labels are
/// the collapsed representatives.
pub fn consensus(labels: &[LeaningLabel], min_agree: usize, mode: ConsensusMode) -> BTreeMap<String, Consensus> {
    let mut by_url: BTreeMap<&str, BTreeMap<&str, BTreeSet<Leaning>>> = BTreeMap::new();
    for l in labels.iter().filter(|l| l.coder_kind == CoderKind::Human) {
        let label = match mode {
            ConsensusMode::Exact => l.label,
            ConsensusMode::Collapsed => l.label.collapse(),
        };
        by_url.entry(&l.url).or_default().entry(&l.coder_id).or_default().insert(label);
    }
    by_url
        .into_iter()
        .map(|(url, coders)| {
            let mut counts: BTreeMap<Leaning, usize> = BTreeMap::new();
            for given in coders.values().filter(|g| g.len() == 1) {
                *counts.entry(*given.first().expect("one label")).or_default() += 1;
            }
            let winners: Vec<Leaning> = counts.into_iter().filter(|(_, n)| *n >= min_agree.max(1)).map(|(l, _)| l).collect();
            let c = match winners.as_slice() {
                [only] => Consensus::Resolved(*only),
                _ => Consensus::Unresolved,
            };
            (url.to_string(), c)
        })
        .collect()
}

/// Machine labels per URL and coder, kept apart from the human consensus.
pub fn machine_labels(labels: &[LeaningLabel]) -> BTreeMap<String, BTreeMap<String, Leaning>> {
    let mut out: BTreeMap<String, BTreeMap<String, Leaning>> = BTreeMap::new();
    for l in labels.iter().filter(|l| l.coder_kind == CoderKind::Machine) {
        out.entry(l.url.clone()).or_default().insert(l.coder_id.clone(), l.label);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    All,
    Top3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaningCell {
    pub engine: String,
    pub location: String,
    pub scope: Scope,
    /// News results with a resolved label (the denominator).
    pub labeled: usize,
    pub unresolved: usize,
    /// Share per label, in scale order.
    pub proportions: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LeaningReport {
    pub cells: Vec<LeaningCell>,
    pub notes: Vec<String>,
}

/// Label shares among News results per `(engine, location)`, over the first
/// page (`All`) or the first three ranks (`Top3`).
pub fn leaning_proportions(
    records: &[SerpRecord],
    categories: &CategoryMap,
    resolved: &BTreeMap<String, Consensus>,
    scope: Scope,
) -> LeaningReport {
    let depth = match scope {
        Scope::All => 10,
        Scope::Top3 => 3,
    };
    let mut counts: BTreeMap<(String, String), ([usize; 5], usize)> = BTreeMap::new();
    let mut unmapped: BTreeSet<String> = BTreeSet::new();
    for r in records.iter().filter(|r| r.status() == SerpStatus::Ok) {
        let cell = counts.entry((r.engine().to_string(), r.location().as_str().to_string())).or_default();
        for res in r.results().iter().take(depth) {
            match categories.get(&res.domain) {
                Some(Category::News) => {}
                Some(_) => continue,
                None => {
                    unmapped.insert(res.domain.clone());
                    continue;
                }
            }
            match resolved.get(&res.url) {
                Some(Consensus::Resolved(l)) => cell.0[l.index()] += 1,
                _ => cell.1 += 1,
            }
        }
    }
    let mut report = LeaningReport::default();
    if !unmapped.is_empty() {
        report.notes.push(format!("{} uncategorized domains treated as non-News", unmapped.len()));
    }
    for ((engine, location), (per_label, unresolved)) in counts {
        let labeled: usize = per_label.iter().sum();
        if labeled == 0 {
            report.notes.push(format!("{engine}/{location}: no labelled News results in scope {scope:?}; cell omitted"));
            continue;
        }
        let proportions = per_label.map(|n| n as f64 / labeled as f64);
        report.cells.push(LeaningCell { engine, location, scope, labeled, unresolved, proportions });
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    /// Rows: machine label; columns: human label; both in scale order.
    pub counts: [[usize; 5]; 5],
    /// Row-normalized counts. Rows without observations are all zero.
    pub proportions: [[f64; 5]; 5],
}

pub fn agreement_matrix(
    machine: &BTreeMap<String, Leaning>,
    human: &BTreeMap<String, Leaning>,
) -> Result<AgreementMatrix, AnnotateError> {
    let mut counts = [[0usize; 5]; 5];
    let mut any = false;
    for (url, m) in machine {
        if let Some(h) = human.get(url) {
            counts[m.index()][h.index()] += 1;
            any = true;
        }
    }
    if !any {
        return Err(AnnotateError::NoOverlap);
    }
    let proportions = counts.map(|row| {
        let total: usize = row.iter().sum();
        row.map(|n| if total == 0 { 0.0 } else { n as f64 / total as f64 })
    });
    Ok(AgreementMatrix { counts, proportions })
}

#[derive(Deserialize)]
struct LabelRow {
    url: String,
    coder_id: String,
    label: String,
    survey_id: String,
    attention_pass: bool,
    #[serde(default)]
    coder_kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelImport {
    pub labels: Vec<LeaningLabel>,
    /// Rows discarded because the coder failed an attention check.
    pub dropped: usize,
}

/// Reads `url,coder_id,label,survey_id,attention_pass[,coder_kind]` rows.
/// `coder_kind` defaults to Human.
pub fn import_labels(path: &Path) -> Result<LabelImport, AnnotateError> {
    let err = |m: String| AnnotateError::File { path: path.display().to_string(), message: m };
    let mut out = LabelImport { labels: Vec::new(), dropped: 0 };
    for row in read_rows::<LabelRow>(path)? {
        if !row.attention_pass {
            out.dropped += 1;
            continue;
        }
        let coder_kind = match row.coder_kind.as_deref().unwrap_or("Human") {
            "Human" | "" => CoderKind::Human,
            "Machine" => CoderKind::Machine,
            other => return Err(err(format!("unknown coder kind {other:?}"))),
        };
        let label = row.label.parse::<Leaning>().map_err(err)?;
        out.labels.push(LeaningLabel { url: row.url, coder_id: row.coder_id, coder_kind, label, survey_id: row.survey_id });
    }
    Ok(out)
}
