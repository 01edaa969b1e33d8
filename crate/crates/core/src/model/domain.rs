use std::collections::HashSet;
use std::sync::OnceLock;

use thiserror::Error;
use url::{Host, Url};

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("not an absolute URL: {0:?}")]
    Invalid(String),
    #[error("unsupported scheme {scheme:?} in {url:?}")]
    Scheme { url: String, scheme: String },
    #[error("URL has no host: {0:?}")]
    NoHost(String),
    #[error("host {0:?} is itself a public suffix")]
    PublicSuffix(String),
}

const SNAPSHOT: &str = include_str!("../../data/public_suffix_list.dat");

/// Public suffix rules in the standard list format (normal, `*.` wildcard and
/// `!` exception rules).
#[derive(Debug, Default)]
pub struct PublicSuffixList {
    rules: HashSet<String>,
    wildcards: HashSet<String>,
    exceptions: HashSet<String>,
}

impl PublicSuffixList {
    pub fn parse(text: &str) -> Self {
        let mut list = PublicSuffixList::default();
        for line in text.lines() {
            let rule = line.split_whitespace().next().unwrap_or("");
            if rule.is_empty() || rule.starts_with("//") {
                continue;
            }
            let rule = rule.to_ascii_lowercase();
            if let Some(rest) = rule.strip_prefix('!') {
                list.exceptions.insert(rest.to_string());
            } else if let Some(rest) = rule.strip_prefix("*.") {
                list.wildcards.insert(rest.to_string());
            } else {
                list.rules.insert(rule);
            }
        }
        list
    }

    /// The pinned snapshot shipped with the crate.
    pub fn snapshot() -> &'static PublicSuffixList {
        static LIST: OnceLock<PublicSuffixList> = OnceLock::new();
        LIST.get_or_init(|| PublicSuffixList::parse(SNAPSHOT))
    }

    /// Number of labels in the public suffix of `host`.
    fn suffix_len(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        let mut best = 1; // implicit "*" rule
        for take in 1..=n {
            let candidate = labels[n - take..].join(".");
            if self.exceptions.contains(&candidate) {
                return take - 1;
            }
            if self.rules.contains(&candidate) {
                best = best.max(take);
            }
            // "*.parent" matches one extra label left of parent
            if take < n && self.wildcards.contains(&candidate) {
                best = best.max(take + 1);
            }
        }
        best
    }

    /// Registrable domain (public suffix plus one label) of a bare host name.
    pub fn registrable(&self, host: &str) -> Result<String, DomainError> {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let labels: Vec<&str> = host.split('.').collect();
        if labels.iter().any(|l| l.is_empty()) {
            return Err(DomainError::Invalid(host));
        }
        let suffix = self.suffix_len(&labels);
        if labels.len() <= suffix {
            return Err(DomainError::PublicSuffix(host));
        }
        Ok(labels[labels.len() - suffix - 1..].join("."))
    }
}

/// Lowercased registrable domain of an absolute http(s) URL.
///
/// IP-literal hosts are returned as-is.
pub fn registrable_domain(url: &str) -> Result<String, DomainError> {
    let parsed = Url::parse(url).map_err(|_| DomainError::Invalid(url.to_string()))?;
    match parsed.scheme() {
        "http" | "https" => {}
        other => {
            return Err(DomainError::Scheme { url: url.to_string(), scheme: other.to_string() })
        }
    }
    match parsed.host() {
        Some(Host::Domain(d)) => PublicSuffixList::snapshot().registrable(d),
        Some(Host::Ipv4(ip)) => Ok(ip.to_string()),
        Some(Host::Ipv6(ip)) => Ok(ip.to_string()),
        None => Err(DomainError::NoHost(url.to_string())),
    }
}
