use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{BotProfile, BotType, HistoryKind, Language, Location, ModelError, Query, QueryCategory};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("location {0} has no registered local language")]
    NoLanguage(Location),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How many bots of one type to create in each location.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub bot_type: BotType,
    pub locations: Vec<Location>,
    /// Bots per location for Type1 and Type2.
    pub per_location: usize,
    /// Conflict-history, general-history and stateless bots per location for Type3.
    pub type3_mix: [usize; 3],
}

impl ProfileSpec {
    pub fn defaults(bot_type: BotType) -> Self {
        ProfileSpec { bot_type, locations: Location::defaults(), per_location: 10, type3_mix: [3, 3, 2] }
    }
}

/// Creates profiles with empty jars and one egress IP label per bot.
pub fn make_profiles(spec: &ProfileSpec) -> Result<Vec<BotProfile>, ProfileError> {
    let tag = match spec.bot_type {
        BotType::Type1 => "t1",
        BotType::Type2 => "t2",
        BotType::Type3 => "t3",
    };
    let mut out = Vec::new();
    for loc in &spec.locations {
        let language = match spec.bot_type {
            BotType::Type1 => Language::english(),
            _ => loc.local_language().ok_or_else(|| ProfileError::NoLanguage(loc.clone()))?,
        };
        let kinds: Vec<HistoryKind> = match spec.bot_type {
            BotType::Type3 => {
                let [c, g, s] = spec.type3_mix;
                std::iter::repeat_n(HistoryKind::ConflictNews, c)
                    .chain(std::iter::repeat_n(HistoryKind::GeneralNews, g))
                    .chain(std::iter::repeat_n(HistoryKind::Stateless, s))
                    .collect()
            }
            _ => vec![HistoryKind::Stateless; spec.per_location],
        };
        for (i, kind) in kinds.into_iter().enumerate() {
            let id = format!("{tag}-{}-{:02}", loc.as_str(), i + 1);
            let ip = format!("ip-{id}");
            out.push(BotProfile::new(id, spec.bot_type, loc.clone(), language.clone(), kind, ip)?);
        }
    }
    Ok(out)
}

pub fn load_profiles(path: &Path) -> Result<Vec<BotProfile>, ProfileError> {
    let text = fs::read_to_string(path).map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
    let profiles: Vec<BotProfile> = serde_json::from_str(&text)
        .map_err(|e| ProfileError::Format { path: path.display().to_string(), message: e.to_string() })?;
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}

pub fn save_profiles(profiles: &[BotProfile], path: &Path) -> Result<(), ProfileError> {
    let mut text = serde_json::to_string_pretty(profiles).expect("profiles serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| ProfileError::Io { path: path.display().to_string(), source })
}

#[derive(Deserialize)]
struct QueryRow {
    text: String,
    category: String,
    in_type3_subset: bool,
}

fn parse_queries(reader: impl std::io::Read, origin: &str) -> Result<Vec<Query>, ProfileError> {
    let fmt = |message: String| ProfileError::Format { path: origin.to_string(), message };
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize::<QueryRow>() {
        let row = row.map_err(|e| fmt(e.to_string()))?;
        let category: QueryCategory = row.category.parse().map_err(|_| fmt(format!("unknown category {:?}", row.category)))?;
        out.push(Query::new(row.text, category, row.in_type3_subset)?);
    }
    Ok(out)
}

/// Reads a query corpus CSV with header `text,category,in_type3_subset`.
pub fn load_queries(path: &Path) -> Result<Vec<Query>, ProfileError> {
    let file = fs::File::open(path).map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
    parse_queries(file, &path.display().to_string())
}

/// The bundled 27 + 27 query corpus.
pub fn default_queries() -> Vec<Query> {
    parse_queries(include_str!("../../data/queries.csv").as_bytes(), "bundled queries").expect("bundled corpus is valid")
}

pub fn type3_subset(queries: &[Query]) -> Vec<Query> {
    queries.iter().filter(|q| q.in_type3_subset()).cloned().collect()
}
