//! Deterministic simulated search engine with known, tunable personalization.
//!
//! Every query owns a pool of synthetic documents generated from the persona
//! seed. A request is scored linearly:
//!
//! ```text
//! score = base + w_loc·aff_loc + w_lang·[lang match] + w_hist·⟨history, aff_hist⟩
//!       + boost·aff_loc (Specific queries only) + noise
//! ```
//!
//! An optional leaning skew then rewrites the first ranks seen from one
//! location: each of the top `depth` slots goes to the best remaining
//! document of the skewed leaning with probability `share`, otherwise to the
//! best remaining document of any other leaning.
//!
//! Because the injected effects are known exactly, the analysis pipeline can
//! be checked against them end to end.

mod client;
mod server;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{Category, Leaning};
use crate::model::{Cookie, Language, Location, Query, QueryCategory, RankedResult};
use crate::seed;

pub use client::{warmup_sources, write_warmup_sources, SimClient};
pub use server::{router, serve, serve_blocking, CONTENT_HASH_HEADER};

/// Documents generated per query.
pub const DOCS_PER_QUERY: usize = 200;
/// Results per page.
pub const PAGE_SIZE: usize = 10;
/// Standard deviation of the per-epoch shift of base relevance.
pub const EPOCH_DRIFT: f64 = 0.2;

/// Topic groups recognized in tracking cookies.
pub const TOPICS: [&str; 2] = ["conflict", "general"];

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("persona {name}: {field} must be finite and non-negative, got {value}")]
    BadWeight { name: String, field: &'static str, value: f64 },
    #[error("unknown tracking topic {0:?}")]
    UnknownTopic(String),
    #[error("duplicate query {0:?} in corpus")]
    DuplicateQuery(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

/// Top-rank composition for one leaning, seen only from one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaningSkew {
    pub location: Location,
    pub leaning: Leaning,
    /// Probability that a skewed slot holds the skewed leaning.
    pub share: f64,
    #[serde(default = "default_skew_depth")]
    pub depth: usize,
}

fn default_skew_depth() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnginePersona {
    pub name: String,
    #[serde(default)]
    pub w_loc: f64,
    #[serde(default)]
    pub w_lang: f64,
    #[serde(default)]
    pub w_hist: f64,
    #[serde(default)]
    pub specific_affinity_boost: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub epoch: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaning_skew: Option<LeaningSkew>,
}

impl EnginePersona {
    /// No personalization and no noise.
    pub fn neutral(name: impl Into<String>, seed: u64) -> Self {
        EnginePersona {
            name: name.into(),
            w_loc: 0.0,
            w_lang: 0.0,
            w_hist: 0.0,
            specific_affinity_boost: 0.0,
            noise_sigma: 0.0,
            epoch: 0,
            seed,
            leaning_skew: None,
        }
    }

    /// Reads a TOML persona and validates it.
    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        let err = |message: String| SimError::Config { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let persona: EnginePersona = toml::from_str(&text).map_err(|e| err(e.to_string()))?;
        persona.validate()?;
        Ok(persona)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fields = vec![
            ("w_loc", self.w_loc),
            ("w_lang", self.w_lang),
            ("w_hist", self.w_hist),
            ("specific_affinity_boost", self.specific_affinity_boost),
            ("noise_sigma", self.noise_sigma),
        ];
        if let Some(s) = &self.leaning_skew {
            if !(0.0..=1.0).contains(&s.share) {
                return Err(SimError::BadWeight { name: self.name.clone(), field: "leaning_skew.share", value: s.share });
            }
        }
        for (field, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::BadWeight { name: self.name.clone(), field, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDoc {
    pub doc_id: String,
    pub url: String,
    pub domain: String,
    pub category: Category,
    /// `None` for sites with no particular home location.
    pub home: Option<Location>,
    pub loc_affinity: BTreeMap<Location, f64>,
    pub lang: Language,
    pub hist_affinity: BTreeMap<String, f64>,
    pub leaning: Option<Leaning>,
    pub title: String,
    pub body: String,
    /// Epoch-independent part of base relevance.
    pub relevance: f64,
    #[serde(skip)]
    index: u64,
    #[serde(skip)]
    query_text: String,
}

/// What the engine knows about the requester.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestContext {
    pub location: Location,
    pub language: Language,
    /// Share of tracking exposure per topic group (sums to 1, or empty).
    pub history_topics: BTreeMap<String, f64>,
    /// Egress identity; keys the noise term.
    pub ip: String,
}

impl RequestContext {
    pub fn new(location: Location, language: Language, cookies: &[Cookie], ip: impl Into<String>) -> Self {
        RequestContext { location, language, history_topics: history_topics(cookies), ip: ip.into() }
    }
}

/// Normalized topic exposure from `topic=<group>.<keyword>` cookies.
pub fn history_topics(cookies: &[Cookie]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for c in cookies.iter().filter(|c| c.name == "topic") {
        if let Some((group, _)) = c.value.split_once('.') {
            if TOPICS.contains(&group) {
                *counts.entry(group.to_string()).or_default() += 1.0;
            }
        }
    }
    let total: f64 = counts.values().sum();
    counts.values_mut().for_each(|v| *v /= total);
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSerp {
    pub query: String,
    /// Set when the query is not in the corpus; `results` is then empty.
    pub unknown_query: bool,
    pub results: Vec<RankedResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResponse {
    pub cookie: Cookie,
    pub body: String,
}

struct Pool {
    category: QueryCategory,
    docs: Vec<SynthDoc>,
}

pub struct SimEngine {
    persona: EnginePersona,
    pools: BTreeMap<String, Pool>,
    by_id: BTreeMap<String, (String, usize)>,
}

fn tld(home: Option<&Location>) -> &'static str {
    match home.map(Location::as_str) {
        Some("IL") => "co.il",
        Some("SA") => "com.sa",
        Some("BR") => "com.br",
        Some("US_NY") => "com",
        _ => "org",
    }
}

pub(crate) fn site_tld(home: Option<&Location>) -> &'static str {
    tld(home)
}

fn category_mix(cat: QueryCategory) -> Vec<(Category, f64)> {
    use Category::*;
    let (head, rest): (Vec<(Category, f64)>, Vec<Category>) = match cat {
        QueryCategory::Specific => (
            vec![(News, 0.83), (Reference, 0.07), (Education, 0.03)],
            vec![Government, FactChecking, SocialMedia, NonProfit, Entertainment, Finance, Religion, ECommerce, Technology, Sports, Travel, Science],
        ),
        QueryCategory::General => (
            vec![(Lifestyle, 0.26), (Health, 0.18), (Entertainment, 0.13)],
            vec![
                Reference, Education, Technology, News, Business, Finance, Government, NonProfit, SocialMedia, Travel,
                ECommerce, Art, Science, Fashion, Legal, Career, Retail, Automotive, Food,
            ],
        ),
    };
    let left = 1.0 - head.iter().map(|x| x.1).sum::<f64>();
    let each = left / rest.len() as f64;
    head.into_iter().chain(rest.into_iter().map(|c| (c, each))).collect()
}

fn pick<T: Copy>(items: &[(T, f64)], u: f64) -> T {
    let mut acc = 0.0;
    for &(item, w) in items {
        acc += w;
        if u < acc {
            return item;
        }
    }
    items.last().expect("non-empty mix").0
}

const FILLER: [&str; 12] = [
    "Officials gave few details.",
    "Several sources described the events differently.",
    "Readers shared the story widely.",
    "The report drew on interviews and public records.",
    "Experts offered a range of explanations.",
    "Background material is summarized below.",
    "Figures were updated during the day.",
    "Local coverage followed within hours.",
    "The topic has been discussed for months.",
    "A longer analysis is planned.",
    "Photos accompanied the original piece.",
    "Comments on the article were closed.",
];

fn conflict_affine(c: Category) -> bool {
    matches!(c, Category::News | Category::FactChecking | Category::Government | Category::Religion | Category::NonProfit)
}

fn general_affine(c: Category) -> bool {
    matches!(c, Category::Lifestyle | Category::Health | Category::Entertainment | Category::Food | Category::Sports | Category::Travel)
}

fn make_doc(seed_key: u64, qi: usize, j: usize, query: &Query, locations: &[Location]) -> SynthDoc {
    let u = |field: u64| seed::unit(seed_key, j as u64, field);
    let category = pick(&category_mix(query.category()), u(0));
    let home_idx = (u(1) * (locations.len() + 1) as f64) as usize;
    let home = locations.get(home_idx).cloned();
    let loc_affinity = locations
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let v = match &home {
                Some(h) if h == l => 0.5 + 0.5 * u(10 + i as u64),
                Some(_) => 0.3 * u(10 + i as u64),
                None => 0.3 + 0.3 * u(10 + i as u64),
            };
            (l.clone(), v)
        })
        .collect();
    let lang = home.as_ref().and_then(Location::local_language).unwrap_or_else(Language::english);
    let aff = |hot: bool, field: u64| if hot { 0.5 + 0.5 * u(field) } else { 0.3 * u(field) };
    let hist_affinity = BTreeMap::from([
        ("conflict".to_string(), aff(query.category() == QueryCategory::Specific && conflict_affine(category), 20)),
        ("general".to_string(), aff(general_affine(category), 21)),
    ]);
    let leaning = (category == Category::News).then(|| Leaning::ALL[(u(2) * 5.0) as usize % 5]);
    let site_no = 1 + (u(3) * 8.0) as usize;
    let domain = format!("{}{site_no}.{}", category.stem(), tld(home.as_ref()));
    let doc_id = format!("q{qi:02}d{j:03}");
    let url = format!("https://{domain}/a/{doc_id}");
    let title = format!("{}: {} coverage {j}", query.text(), category.as_str());
    let mut sentences: Vec<&str> = (0..4).map(|k| FILLER[(u(30 + k) * FILLER.len() as f64) as usize % FILLER.len()]).collect();
    if let Some(l) = leaning {
        sentences.insert(2, l.cue());
    }
    let body = format!("{title}\n\nPublished by {domain}. {}", sentences.join(" "));
    SynthDoc {
        doc_id,
        url,
        domain,
        category,
        home,
        loc_affinity,
        lang,
        hist_affinity,
        leaning,
        title,
        body,
        relevance: u(4),
        index: j as u64,
        query_text: query.text().to_string(),
    }
}

/// Linear score of `doc` for one request under `persona`.
pub fn score(doc: &SynthDoc, category: QueryCategory, ctx: &RequestContext, persona: &EnginePersona) -> f64 {
    let drift_key = seed::derive(persona.seed, &["drift", &doc.query_text]);
    let noise_key = seed::derive(persona.seed, &["noise", &doc.query_text, &ctx.ip]);
    score_keyed(doc, category, ctx, persona, drift_key, noise_key)
}

fn score_keyed(doc: &SynthDoc, category: QueryCategory, ctx: &RequestContext, persona: &EnginePersona, drift_key: u64, noise_key: u64) -> f64 {
    let epoch = persona.epoch as u64;
    let base = doc.relevance + EPOCH_DRIFT * seed::normal(drift_key, doc.index, epoch);
    let aff = doc.loc_affinity.get(&ctx.location).copied().unwrap_or(0.0);
    let mut s = base + persona.w_loc * aff;
    if doc.lang == ctx.language {
        s += persona.w_lang;
    }
    let hist: f64 = ctx.history_topics.iter().map(|(t, w)| w * doc.hist_affinity.get(t).copied().unwrap_or(0.0)).sum();
    s += persona.w_hist * hist;
    if category == QueryCategory::Specific {
        s += persona.specific_affinity_boost * aff;
    }
    if persona.noise_sigma > 0.0 {
        s += persona.noise_sigma * seed::normal(noise_key, doc.index, epoch);
    }
    s
}

impl SimEngine {
    /// Builds the corpus for `queries`. The corpus depends only on
    /// `persona.seed` and the query list, not on the weights.
    pub fn new(persona: EnginePersona, queries: &[Query]) -> Result<Self, SimError> {
        persona.validate()?;
        let locations = Location::defaults();
        let mut pools = BTreeMap::new();
        let mut by_id = BTreeMap::new();
        for (qi, q) in queries.iter().enumerate() {
            let key = seed::derive(persona.seed, &["corpus", q.text()]);
            let docs: Vec<SynthDoc> = (0..DOCS_PER_QUERY).map(|j| make_doc(key, qi, j, q, &locations)).collect();
            for (i, d) in docs.iter().enumerate() {
                by_id.insert(d.doc_id.clone(), (q.text().to_string(), i));
            }
            if pools.insert(q.text().to_string(), Pool { category: q.category(), docs }).is_some() {
                return Err(SimError::DuplicateQuery(q.text().to_string()));
            }
        }
        Ok(SimEngine { persona, pools, by_id })
    }

    pub fn persona(&self) -> &EnginePersona {
        &self.persona
    }

    pub fn docs(&self, query: &str) -> Option<&[SynthDoc]> {
        self.pools.get(query).map(|p| p.docs.as_slice())
    }

    pub fn doc(&self, doc_id: &str) -> Option<&SynthDoc> {
        let (q, i) = self.by_id.get(doc_id)?;
        Some(&self.pools[q].docs[*i])
    }

    /// Top results by score, ties broken by ascending doc id.
    pub fn serve_search(&self, q: &str, ctx: &RequestContext) -> SimSerp {
        let Some(pool) = self.pools.get(q) else {
            return SimSerp { query: q.to_string(), unknown_query: true, results: Vec::new() };
        };
        let drift_key = seed::derive(self.persona.seed, &["drift", q]);
        let noise_key = seed::derive(self.persona.seed, &["noise", q, &ctx.ip]);
        let mut scored: Vec<(f64, &SynthDoc)> = pool
            .docs
            .iter()
            .map(|d| (score_keyed(d, pool.category, ctx, &self.persona, drift_key, noise_key), d))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.doc_id.cmp(&b.1.doc_id)));
        let mut ranked: Vec<&SynthDoc> = scored.into_iter().map(|(_, d)| d).collect();
        if let Some(skew) = self.persona.leaning_skew.as_ref().filter(|s| s.location == ctx.location) {
            let key = seed::derive(self.persona.seed, &["skew", q, &ctx.ip]);
            for slot in 0..skew.depth.min(ranked.len()) {
                let want = seed::unit(key, slot as u64, self.persona.epoch as u64) < skew.share;
                if let Some(j) = (slot..ranked.len()).find(|&j| (ranked[j].leaning == Some(skew.leaning)) == want) {
                    let d = ranked.remove(j);
                    ranked.insert(slot, d);
                }
            }
        }
        let results = ranked
            .into_iter()
            .take(PAGE_SIZE)
            .enumerate()
            .map(|(i, d)| RankedResult {
                rank: i as u32 + 1,
                url: d.url.clone(),
                domain: d.domain.clone(),
                title: d.title.clone(),
                snippet: d.body.lines().last().unwrap_or_default().chars().take(120).collect(),
            })
            .collect();
        SimSerp { query: q.to_string(), unknown_query: false, results }
    }

    /// Tracking pixel for `topic` (`<group>/<keyword>`) embedded on `site`.
    pub fn serve_track(&self, topic: &str, site: &str) -> Result<TrackResponse, SimError> {
        let (group, keyword) = topic.trim_matches('/').split_once('/').ok_or_else(|| SimError::UnknownTopic(topic.to_string()))?;
        let keyword = keyword.trim().to_lowercase().replace([' ', '/'], "-");
        if !TOPICS.contains(&group) || keyword.is_empty() {
            return Err(SimError::UnknownTopic(topic.to_string()));
        }
        Ok(TrackResponse {
            cookie: Cookie::new("topic", format!("{group}.{keyword}"), site),
            body: format!("<html><body><p>Stories about {keyword}.</p></body></html>"),
        })
    }

    /// Article page; the leaning is only readable through [`SimEngine::truth`].
    pub fn serve_page(&self, doc_id: &str) -> Option<String> {
        let d = self.doc(doc_id)?;
        let paras: String = d.body.split("\n\n").skip(1).map(|p| format!("<p>{p}</p>")).collect();
        Some(format!(
            "<html><head><title>{}</title></head><body><nav>Home | World | Contact</nav><article>{paras}</article></body></html>",
            d.title
        ))
    }

    /// `None` for unknown ids, `Some(None)` for documents without a leaning.
    pub fn truth(&self, doc_id: &str) -> Option<Option<Leaning>> {
        self.doc(doc_id).map(|d| d.leaning)
    }

    /// Generation-time category of every domain in the corpus.
    pub fn domain_categories(&self) -> BTreeMap<String, Category> {
        self.pools.values().flat_map(|p| p.docs.iter().map(|d| (d.domain.clone(), d.category))).collect()
    }

    /// Maps a result URL back to its document id.
    pub fn doc_id_of(url: &str) -> Option<&str> {
        url.rsplit_once("/a/").map(|(_, id)| id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crawler::default_queries;

    fn loc(s: &str) -> Location {
        Location::new(s).unwrap()
    }

    fn ctx(l: &str) -> RequestContext {
        let l = loc(l);
        let lang = l.local_language().unwrap();
        RequestContext::new(l, lang, &[], "ip-1")
    }

    fn engine(p: EnginePersona) -> SimEngine {
        SimEngine::new(p, &default_queries()[..4]).unwrap()
    }

    #[test]
    fn zero_weights_score_is_base() {
        let e = engine(EnginePersona::neutral("s", 1));
        let d = &e.docs("military complex Al-Shifa hospital").unwrap()[0];
        let a = score(d, QueryCategory::Specific, &ctx("IL"), e.persona());
        let b = score(d, QueryCategory::Specific, &ctx("BR"), e.persona());
        assert_eq!(a, b);
        let q = "Israel banned Olympics";
        assert_eq!(e.serve_search(q, &ctx("IL")), e.serve_search(q, &ctx("SA")));
    }

    #[test]
    fn leaning_skew_sets_top_slots_for_one_location() {
        let mut p = EnginePersona::neutral("s", 2);
        p.leaning_skew = Some(LeaningSkew { location: loc("IL"), leaning: Leaning::ProIsrael, share: 1.0, depth: 3 });
        let e = engine(p);
        let q = "military complex Al-Shifa hospital";
        let top: Vec<_> = e.serve_search(q, &ctx("IL")).results.iter().take(3).map(|r| e.truth(SimEngine::doc_id_of(&r.url).unwrap())).collect();
        assert!(top.iter().all(|l| *l == Some(Some(Leaning::ProIsrael))));
        let neutral = engine(EnginePersona::neutral("s", 2));
        assert_eq!(e.serve_search(q, &ctx("BR")), neutral.serve_search(q, &ctx("BR")));

        let mut none = EnginePersona::neutral("s", 2);
        none.leaning_skew = Some(LeaningSkew { location: loc("IL"), leaning: Leaning::ProIsrael, share: 0.0, depth: 3 });
        let e = engine(none);
        let top: Vec<_> = e.serve_search(q, &ctx("IL")).results.iter().take(3).map(|r| e.truth(SimEngine::doc_id_of(&r.url).unwrap())).collect();
        assert!(top.iter().all(|l| *l != Some(Some(Leaning::ProIsrael))));
        let mut bad = EnginePersona::neutral("s", 2);
        bad.leaning_skew = Some(LeaningSkew { location: loc("IL"), leaning: Leaning::ProIsrael, share: 1.5, depth: 3 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn location_weight_is_linear() {
        let mut p = EnginePersona::neutral("s", 1);
        p.w_loc = 1.0;
        let e = engine(p);
        let mut d = e.docs("Tiktok antisemitism").unwrap()[3].clone();
        d.loc_affinity.insert(loc("IL"), 1.0);
        d.loc_affinity.insert(loc("BR"), 0.0);
        let il = score(&d, QueryCategory::General, &ctx("IL"), e.persona());
        let br = score(&d, QueryCategory::General, &ctx("BR"), e.persona());
        assert!((il - br - 1.0).abs() < 1e-12);
        assert_eq!(il, score(&d, QueryCategory::General, &ctx("IL"), e.persona()));
    }

    #[test]
    fn results_are_deterministic_and_ranked() {
        let mut p = EnginePersona::neutral("s", 5);
        p.w_loc = 0.5;
        p.noise_sigma = 0.1;
        let a = engine(p.clone()).serve_search("Israeli babies beheaded", &ctx("US_NY"));
        let b = engine(p).serve_search("Israeli babies beheaded", &ctx("US_NY"));
        assert_eq!(a, b);
        assert_eq!(a.results.len(), PAGE_SIZE);
        assert!(a.results.iter().enumerate().all(|(i, r)| r.rank as usize == i + 1));
        for r in &a.results {
            assert_eq!(crate::model::registrable_domain(&r.url).unwrap(), r.domain);
        }
    }

    #[test]
    fn ties_go_to_lower_doc_id() {
        let e = engine(EnginePersona::neutral("s", 2));
        let mut docs: Vec<SynthDoc> = e.docs("Tiktok antisemitism").unwrap().to_vec();
        for d in &mut docs {
            d.relevance = 0.5;
            d.index = 0;
        }
        let mut scored: Vec<(f64, &SynthDoc)> = docs.iter().map(|d| (score(d, QueryCategory::Specific, &ctx("IL"), e.persona()), d)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.doc_id.cmp(&b.1.doc_id)));
        assert!(scored.windows(2).all(|w| w[0].0 > w[1].0 || w[0].1.doc_id < w[1].1.doc_id));
    }

    #[test]
    fn unknown_query_flagged() {
        let s = engine(EnginePersona::neutral("s", 1)).serve_search("nope", &ctx("IL"));
        assert!(s.unknown_query && s.results.is_empty());
    }

    #[test]
    fn corpus_follows_category_targets() {
        let e = SimEngine::new(EnginePersona::neutral("s", 3), &default_queries()).unwrap();
        let share = |cat: QueryCategory, c: Category| {
            let docs: Vec<&SynthDoc> = default_queries()
                .iter()
                .filter(|q| q.category() == cat)
                .flat_map(|q| e.docs(q.text()).unwrap())
                .collect();
            docs.iter().filter(|d| d.category == c).count() as f64 / docs.len() as f64
        };
        assert!((share(QueryCategory::Specific, Category::News) - 0.83).abs() < 0.02);
        assert!((share(QueryCategory::General, Category::Lifestyle) - 0.26).abs() < 0.02);
        for d in e.docs("Gaza tunnels").unwrap() {
            assert_eq!(d.leaning.is_some(), d.category == Category::News);
            assert!(d.loc_affinity.values().chain(d.hist_affinity.values()).all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn tracking_cookies() {
        let e = engine(EnginePersona::neutral("s", 1));
        let t = e.serve_track("conflict/hamas", "hamas1.co.il").unwrap();
        assert_eq!(t.cookie, Cookie::new("topic", "conflict.hamas", "hamas1.co.il"));
        assert_eq!(e.serve_track("conflict/hamas", "hamas1.co.il").unwrap(), t);
        assert!(e.serve_track("weather/rain", "x").is_err());
        let h = history_topics(&[t.cookie, Cookie::new("topic", "general.movie", "m.com"), Cookie::new("sid", "1", "x")]);
        assert_eq!(h["conflict"], 0.5);
        assert_eq!(h["general"], 0.5);
    }

    #[test]
    fn pages_and_truth() {
        let e = engine(EnginePersona::neutral("s", 1));
        let news = e.docs("military complex Al-Shifa hospital").unwrap();
        let n = news.iter().find(|d| d.category == Category::News).unwrap();
        assert!(e.serve_page(&n.doc_id).unwrap().contains("<article>"));
        assert_eq!(e.truth(&n.doc_id), Some(n.leaning));
        let other = news.iter().find(|d| d.category != Category::News).unwrap();
        assert_eq!(e.truth(&other.doc_id), Some(None));
        assert_eq!(e.truth("missing"), None);
        assert_eq!(SimEngine::doc_id_of(&n.url), Some(n.doc_id.as_str()));
    }

    #[test]
    fn bad_persona_rejected() {
        let mut p = EnginePersona::neutral("s", 1);
        p.w_hist = f64::NAN;
        assert!(matches!(SimEngine::new(p, &[]), Err(SimError::BadWeight { field: "w_hist", .. })));
    }
}
