//! Shared domain types.
//!
//! Types here are immutable once constructed; constructors enforce the
//! invariants (rank contiguity, status/result consistency, bot type rules) so
//! downstream code can rely on them.

mod domain;
pub mod log;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use domain::{registrable_domain, DomainError, PublicSuffixList};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("empty query text")]
    EmptyQuery,
    #[error("ranks must be 1..n without gaps; position {position} has rank {rank}")]
    RankGap { position: usize, rank: u32 },
    #[error("status Ok requires at least one result")]
    OkWithoutResults,
    #[error("status {0} must carry no results")]
    FailureWithResults(SerpStatus),
    #[error("invalid profile {bot_id}: {reason}")]
    InvalidProfile { bot_id: String, reason: String },
    #[error("comparison needs two distinct bots, got {0} twice")]
    SelfComparison(String),
    #[error("metric {metric} value {value} out of range")]
    MetricRange { metric: Metric, value: f64 },
    #[error("invalid {kind} identifier {value:?}")]
    BadIdentifier { kind: &'static str, value: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Audit geography. Stored as a string on disk so new locations need no
/// format change; [`Location::registry`] lists the built-in ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Location(String);

impl Location {
    pub fn new(code: impl Into<String>) -> Result<Self, ModelError> {
        let code = code.into();
        let ok = !code.is_empty()
            && code
                .chars()
                .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
        if ok {
            Ok(Location(code))
        } else {
            Err(ModelError::BadIdentifier { kind: "location", value: code })
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Built-in locations and their dominant browser language.
    pub fn registry() -> &'static [(&'static str, &'static str)] {
        &[("IL", "he"), ("SA", "ar"), ("BR", "pt"), ("US_NY", "en")]
    }

    /// The four audit locations in registry order.
    pub fn defaults() -> Vec<Location> {
        Self::registry().iter().map(|(c, _)| Location(c.to_string())).collect()
    }

    pub fn local_language(&self) -> Option<Language> {
        Self::registry()
            .iter()
            .find(|(c, _)| *c == self.0)
            .map(|(_, l)| Language(l.to_string()))
    }
}

impl TryFrom<String> for Location {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, ModelError> {
        Location::new(s)
    }
}

impl From<Location> for String {
    fn from(l: Location) -> String {
        l.0
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// BCP-47 language tag such as `he`, `ar`, `pt`, `en`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Language(String);

impl Language {
    pub fn new(tag: impl Into<String>) -> Result<Self, ModelError> {
        let tag = tag.into();
        let ok = !tag.is_empty()
            && !tag.starts_with('-')
            && !tag.ends_with('-')
            && tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        if ok {
            Ok(Language(tag))
        } else {
            Err(ModelError::BadIdentifier { kind: "language", value: tag })
        }
    }

    pub fn english() -> Self {
        Language("en".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Language {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, ModelError> {
        Language::new(s)
    }
}

impl From<Language> for String {
    fn from(l: Language) -> String {
        l.0
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

macro_rules! string_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(format!("unknown {} {:?}", stringify!($name), other)),
                }
            }
        }
    };
}

pub(crate) use string_enum;

string_enum!(
    /// Incremental bot design: location only, + language, + browsing history.
    BotType { Type1 => "Type1", Type2 => "Type2", Type3 => "Type3" }
);

string_enum!(HistoryKind {
    Stateless => "Stateless",
    GeneralNews => "GeneralNews",
    ConflictNews => "ConflictNews",
});

string_enum!(QueryCategory { General => "General", Specific => "Specific" });

string_enum!(SerpStatus {
    Ok => "Ok",
    CaptchaBlocked => "CaptchaBlocked",
    Timeout => "Timeout",
    ParseFailure => "ParseFailure",
});

string_enum!(Metric {
    DRbo => "DRbo",
    EditDistance => "EditDistance",
    SymDiff10 => "SymDiff10",
    CommonTop3 => "CommonTop3",
    DRboCategory => "DRboCategory",
});

impl Metric {
    /// Metrics bounded to [0, 1]; the others are non-negative counts.
    pub fn is_unit_interval(self) -> bool {
        matches!(self, Metric::DRbo | Metric::DRboCategory)
    }
}

/// A cookie as stored in a bot's jar. Identity is `(name, domain)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cookie {
    pub name: String,
    pub value: String,
    pub domain: String,
}

impl Cookie {
    pub fn new(name: impl Into<String>, value: impl Into<String>, domain: impl Into<String>) -> Self {
        Cookie { name: name.into(), value: value.into(), domain: domain.into() }
    }
}

/// Inserts or replaces a cookie by `(name, domain)`.
pub fn upsert_cookie(jar: &mut Vec<Cookie>, cookie: Cookie) {
    match jar.iter_mut().find(|c| c.name == cookie.name && c.domain == cookie.domain) {
        Some(existing) => existing.value = cookie.value,
        None => jar.push(cookie),
    }
}

/// One bot's audit-relevant identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotProfile {
    pub bot_id: String,
    pub bot_type: BotType,
    pub location: Location,
    pub language: Language,
    pub history_kind: HistoryKind,
    #[serde(default)]
    pub cookie_jar: Vec<Cookie>,
    /// Egress identity (proxy IP/port label). Bots sharing a label share an IP.
    pub ip_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxy_url: Option<String>,
}

impl BotProfile {
    pub fn new(
        bot_id: impl Into<String>,
        bot_type: BotType,
        location: Location,
        language: Language,
        history_kind: HistoryKind,
        ip_label: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let p = BotProfile {
            bot_id: bot_id.into(),
            bot_type,
            location,
            language,
            history_kind,
            cookie_jar: Vec::new(),
            ip_label: ip_label.into(),
            proxy_url: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| {
            Err(ModelError::InvalidProfile { bot_id: self.bot_id.clone(), reason: reason.into() })
        };
        if self.bot_id.is_empty() {
            return bad("empty bot id");
        }
        match self.bot_type {
            BotType::Type1 if self.language != Language::english() => {
                return bad("Type1 bots use the default language (en)")
            }
            BotType::Type1 | BotType::Type2 if self.history_kind != HistoryKind::Stateless => {
                return bad("only Type3 bots carry a browsing history")
            }
            _ => {}
        }
        if self.history_kind == HistoryKind::Stateless && !self.cookie_jar.is_empty() {
            return bad("stateless bots must have an empty cookie jar");
        }
        Ok(())
    }

    pub fn meta(&self) -> BotMeta {
        BotMeta {
            bot_id: self.bot_id.clone(),
            bot_type: self.bot_type,
            location: self.location.clone(),
            language: self.language.clone(),
            history_kind: self.history_kind,
        }
    }
}

/// The subset of a profile written with every log record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BotMeta {
    pub bot_id: String,
    pub bot_type: BotType,
    pub location: Location,
    pub language: Language,
    pub history_kind: HistoryKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    text: String,
    category: QueryCategory,
    word_count: u32,
    in_type3_subset: bool,
}

impl Query {
    pub fn new(
        text: impl Into<String>,
        category: QueryCategory,
        in_type3_subset: bool,
    ) -> Result<Self, ModelError> {
        let text = text.into();
        let word_count = word_count(&text);
        if word_count == 0 {
            return Err(ModelError::EmptyQuery);
        }
        Ok(Query { text, category, word_count, in_type3_subset })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
    pub fn category(&self) -> QueryCategory {
        self.category
    }
    pub fn word_count(&self) -> u32 {
        self.word_count
    }
    pub fn in_type3_subset(&self) -> bool {
        self.in_type3_subset
    }
}

pub fn word_count(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankedResult {
    pub rank: u32,
    pub url: String,
    pub domain: String,
    pub title: String,
    pub snippet: String,
}

impl RankedResult {
    /// Builds a result, deriving `domain` from the URL.
    pub fn from_url(
        rank: u32,
        url: impl Into<String>,
        title: impl Into<String>,
        snippet: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let url = url.into();
        let domain = registrable_domain(&url)?;
        Ok(RankedResult { rank, url, domain, title: title.into(), snippet: snippet.into() })
    }
}

/// One `(engine, bot, query, time)` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SerpRecord {
    audit_id: String,
    engine: String,
    bot: BotMeta,
    query_text: String,
    query_category: QueryCategory,
    timestamp_ms: i64,
    status: SerpStatus,
    results: Vec<RankedResult>,
}

impl SerpRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        audit_id: impl Into<String>,
        engine: impl Into<String>,
        bot: BotMeta,
        query_text: impl Into<String>,
        query_category: QueryCategory,
        timestamp_ms: i64,
        status: SerpStatus,
        results: Vec<RankedResult>,
    ) -> Result<Self, ModelError> {
        match status {
            SerpStatus::Ok if results.is_empty() => return Err(ModelError::OkWithoutResults),
            SerpStatus::Ok => {}
            other if !results.is_empty() => return Err(ModelError::FailureWithResults(other)),
            _ => {}
        }
        for (i, r) in results.iter().enumerate() {
            if r.rank as usize != i + 1 {
                return Err(ModelError::RankGap { position: i, rank: r.rank });
            }
        }
        Ok(SerpRecord {
            audit_id: audit_id.into(),
            engine: engine.into(),
            bot,
            query_text: query_text.into(),
            query_category,
            timestamp_ms,
            status,
            results,
        })
    }

    pub fn audit_id(&self) -> &str {
        &self.audit_id
    }
    pub fn engine(&self) -> &str {
        &self.engine
    }
    pub fn bot(&self) -> &BotMeta {
        &self.bot
    }
    pub fn bot_id(&self) -> &str {
        &self.bot.bot_id
    }
    pub fn location(&self) -> &Location {
        &self.bot.location
    }
    pub fn query_text(&self) -> &str {
        &self.query_text
    }
    pub fn query_category(&self) -> QueryCategory {
        self.query_category
    }
    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp_ms
    }
    pub fn status(&self) -> SerpStatus {
        self.status
    }
    pub fn results(&self) -> &[RankedResult] {
        &self.results
    }

    /// URLs of the first `k` results, in rank order.
    pub fn top_urls(&self, k: usize) -> Vec<&str> {
        self.results.iter().take(k).map(|r| r.url.as_str()).collect()
    }
}

/// One bot pair, one query, one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub audit_id: String,
    pub engine: String,
    pub query_text: String,
    pub query_category: QueryCategory,
    pub query_words: u32,
    pub bot_type: BotType,
    pub bot_a: String,
    pub bot_b: String,
    pub history_a: HistoryKind,
    pub history_b: HistoryKind,
    pub same_location: bool,
    pub metric: Metric,
    pub value: f64,
}

impl ComparisonRecord {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.bot_a == self.bot_b {
            return Err(ModelError::SelfComparison(self.bot_a.clone()));
        }
        let v = self.value;
        let ok = if self.metric.is_unit_interval() {
            (0.0..=1.0).contains(&v)
        } else {
            v >= 0.0 && v.fract() == 0.0
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::MetricRange { metric: self.metric, value: v })
        }
    }
}
