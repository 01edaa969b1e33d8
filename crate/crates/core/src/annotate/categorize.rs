use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnnotateError, AnnotationCache, Annotator, Category, DOMAIN_PROMPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CategorySource {
    Auto,
    ManualVerified,
}

/// Domain → category, with where each label came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryMap {
    entries: BTreeMap<String, (Category, CategorySource)>,
}

impl CategoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a label. An `Auto` label never replaces a `ManualVerified` one.
    pub fn insert(&mut self, domain: impl Into<String>, category: Category, source: CategorySource) {
        let domain = domain.into();
        if source == CategorySource::Auto
            && matches!(self.entries.get(&domain), Some((_, CategorySource::ManualVerified)))
        {
            return;
        }
        self.entries.insert(domain, (category, source));
    }

    pub fn get(&self, domain: &str) -> Option<Category> {
        self.entries.get(domain).map(|e| e.0)
    }

    pub fn source(&self, domain: &str) -> Option<CategorySource> {
        self.entries.get(domain).map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Category, CategorySource)> {
        self.entries.iter().map(|(d, (c, s))| (d.as_str(), *c, *s))
    }

    /// Plain domain → category view for the metric kernels.
    pub fn categories(&self) -> BTreeMap<String, Category> {
        self.entries.iter().map(|(d, (c, _))| (d.clone(), *c)).collect()
    }

    /// Writes `domain,category,source` rows.
    pub fn save(&self, path: &Path) -> Result<(), AnnotateError> {
        let err = |e: csv::Error| AnnotateError::File { path: path.display().to_string(), message: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["domain", "category", "source"]).map_err(err)?;
        for (d, c, s) in self.iter() {
            let source = match s {
                CategorySource::Auto => "Auto",
                CategorySource::ManualVerified => "ManualVerified",
            };
            w.write_record([d, c.as_str(), source]).map_err(err)?;
        }
        w.flush().map_err(|e| AnnotateError::File { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let mut map = CategoryMap::new();
        for row in read_rows::<MapRow>(path)? {
            let category: Category = row.category.parse().map_err(|m| file_err(path, m))?;
            let source = match row.source.as_str() {
                "Auto" => CategorySource::Auto,
                "ManualVerified" => CategorySource::ManualVerified,
                other => return Err(file_err(path, format!("unknown source {other:?}"))),
            };
            map.insert(row.domain, category, source);
        }
        Ok(map)
    }
}

#[derive(Deserialize)]
struct MapRow {
    domain: String,
    category: String,
    source: String,
}

#[derive(Deserialize)]
struct OverrideRow {
    domain: String,
    category: String,
}

fn file_err(path: &Path, message: impl Into<String>) -> AnnotateError {
    AnnotateError::File { path: path.display().to_string(), message: message.into() }
}

pub(crate) fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, AnnotateError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| file_err(path, e.to_string()))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| file_err(path, e.to_string()))
}

/// Reads manual `domain,category` overrides.
pub fn load_overrides(path: &Path) -> Result<BTreeMap<String, Category>, AnnotateError> {
    read_rows::<OverrideRow>(path)?
        .into_iter()
        .map(|r| Ok((r.domain.to_ascii_lowercase(), r.category.parse().map_err(|m: String| file_err(path, m))?)))
        .collect()
}

/// Labels every domain: cache first, then the annotator (at most
/// `concurrency` calls in flight), then manual overrides on top.
pub fn categorize_domains(
    domains: &[String],
    annotator: &dyn Annotator,
    cache: Option<&AnnotationCache>,
    overrides: &BTreeMap<String, Category>,
    concurrency: usize,
) -> Result<CategoryMap, AnnotateError> {
    let todo: BTreeSet<&str> = domains.iter().map(String::as_str).filter(|d| !overrides.contains_key(*d)).collect();
    let todo: Vec<&str> = todo.into_iter().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| AnnotateError::Annotator(e.to_string()))?;
    let answers: Vec<(&str, Result<String, AnnotateError>)> = pool.install(|| {
        todo.par_iter()
            .map(|&d| {
                if let Some(hit) = cache.and_then(|c| c.get(DOMAIN_PROMPT, d)) {
                    return (d, Ok(hit));
                }
                (d, annotator.annotate(DOMAIN_PROMPT, d))
            })
            .collect()
    });

    let mut map = CategoryMap::new();
    let mut failed = Vec::new();
    for (domain, answer) in answers {
        match answer {
            Ok(label) => {
                let category = Category::parse_response(&label)?;
                if let Some(c) = cache {
                    // a cache write failure only costs a repeat call later
                    let _ = c.put(DOMAIN_PROMPT, domain, category.as_str());
                }
                map.insert(domain, category, CategorySource::Auto);
            }
            Err(_) => failed.push(domain.to_string()),
        }
    }
    if !failed.is_empty() {
        return Err(AnnotateError::Uncategorized(failed));
    }
    for (domain, category) in overrides {
        map.insert(domain.clone(), *category, CategorySource::ManualVerified);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::StubAnnotator;

    struct Always(&'static str);
    impl Annotator for Always {
        fn annotate(&self, _: &str, _: &str) -> Result<String, AnnotateError> {
            Ok(self.0.to_string())
        }
    }

    struct Broken;
    impl Annotator for Broken {
        fn annotate(&self, _: &str, _: &str) -> Result<String, AnnotateError> {
            Err(AnnotateError::Annotator("offline".into()))
        }
    }

    fn ds(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn override_wins() {
        let overrides = BTreeMap::from([("example.com".to_string(), Category::News)]);
        let map = categorize_domains(&ds(&["example.com", "b.org"]), &Always("Entertainment"), None, &overrides, 2).unwrap();
        assert_eq!(map.get("example.com"), Some(Category::News));
        assert_eq!(map.source("example.com"), Some(CategorySource::ManualVerified));
        assert_eq!(map.get("b.org"), Some(Category::Entertainment));
        let mut m = map.clone();
        m.insert("example.com", Category::Art, CategorySource::Auto);
        assert_eq!(m.get("example.com"), Some(Category::News));
    }

    #[test]
    fn warm_cache_makes_no_calls() {
        let dir = tempfile::tempdir().unwrap();
        let cache = AnnotationCache::open(dir.path()).unwrap();
        let stub = StubAnnotator::new();
        let domains = ds(&["news1.co.il", "wiki2.org", "shop3.com.br"]);
        let first = categorize_domains(&domains, &stub, Some(&cache), &BTreeMap::new(), 4).unwrap();
        assert_eq!(stub.calls(), 3);
        let second = categorize_domains(&domains, &stub, Some(&cache), &BTreeMap::new(), 4).unwrap();
        assert_eq!(stub.calls(), 3);
        assert_eq!(first, second);
    }

    #[test]
    fn failures_and_bad_labels() {
        let err = categorize_domains(&ds(&["b.com", "a.com"]), &Broken, None, &BTreeMap::new(), 1).unwrap_err();
        assert_eq!(err.to_string(), "no category for: a.com, b.com");
        let err = categorize_domains(&ds(&["a.com"]), &Always("Gossip"), None, &BTreeMap::new(), 1).unwrap_err();
        assert!(err.to_string().contains("\"Gossip\""));
    }

    #[test]
    fn map_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut m = CategoryMap::new();
        m.insert("a.com", Category::SocialMedia, CategorySource::Auto);
        m.insert("b.org", Category::FactChecking, CategorySource::ManualVerified);
        m.save(&path).unwrap();
        assert_eq!(CategoryMap::load(&path).unwrap(), m);
        std::fs::write(dir.path().join("o.csv"), "domain,category\nX.com,Sports\n").unwrap();
        assert_eq!(load_overrides(&dir.path().join("o.csv")).unwrap()["x.com"], Category::Sports);
    }
}
