//! Domain categorization and article leaning labels.
//!
//! Categories come from an external [`Annotator`] (cached on disk) with a
//! manual override file applied last. Leaning labels arrive from human coders
//! through an import file and from machine annotators; only exact human
//! agreement resolves a label.

mod annotator;
mod article;
mod categorize;
mod leaning;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::string_enum;

pub use annotator::{
    AnnotationCache, Annotator, HttpAnnotator, StubAnnotator, DOMAIN_PROMPT, LEANING_PROMPT,
};
pub use article::{prepare_article, prepare_article_with, IdentityTranslation, Translator};
pub use categorize::{categorize_domains, load_overrides, CategoryMap, CategorySource};
pub use leaning::{
    agreement_matrix, consensus, import_labels, leaning_proportions, machine_labels, AgreementMatrix, CoderKind,
    Consensus, ConsensusMode, LabelImport, LeaningCell, LeaningLabel, LeaningReport, Scope,
};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("annotator failed: {0}")]
    Annotator(String),
    #[error("no category for: {}", .0.join(", "))]
    Uncategorized(Vec<String>),
    #[error("response {0:?} is not in the category vocabulary")]
    OutOfVocabulary(String),
    #[error("response {0:?} is not a leaning label")]
    BadLeaning(String),
    #[error("no article text extracted from {0}")]
    EmptyArticle(String),
    #[error("no URL carries both a machine and a human label")]
    NoOverlap,
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

string_enum!(
    /// Closed website-category vocabulary.
    Category {
        Reference => "Reference",
        Entertainment => "Entertainment",
        Education => "Education",
        Technology => "Technology",
        News => "News",
        Lifestyle => "Lifestyle",
        Business => "Business",
        Finance => "Finance",
        Health => "Health",
        Government => "Government",
        NonProfit => "Non-Profit",
        SocialMedia => "Social Media",
        Travel => "Travel",
        ECommerce => "E-Commerce",
        Art => "Art",
        Science => "Science",
        Fashion => "Fashion",
        Legal => "Legal",
        Career => "Career",
        Retail => "Retail",
        Automotive => "Automotive",
        Food => "Food",
        FactChecking => "Fact-Checking",
        Religion => "Religion",
        Sports => "Sports",
    }
);

impl Category {
    /// Parses an annotator response, ignoring case and surrounding punctuation.
    pub fn parse_response(s: &str) -> Result<Category, AnnotateError> {
        let t = s.trim().trim_matches(|c: char| c == '.' || c == '"' || c == '\'').trim();
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| AnnotateError::OutOfVocabulary(s.to_string()))
    }

    /// Host-name stem used by simulated sites of this category.
    pub fn stem(self) -> &'static str {
        match self {
            Category::Reference => "wiki",
            Category::Entertainment => "fun",
            Category::Education => "learn",
            Category::Technology => "tech",
            Category::News => "news",
            Category::Lifestyle => "living",
            Category::Business => "biz",
            Category::Finance => "money",
            Category::Health => "health",
            Category::Government => "govportal",
            Category::NonProfit => "charity",
            Category::SocialMedia => "social",
            Category::Travel => "travel",
            Category::ECommerce => "shop",
            Category::Art => "art",
            Category::Science => "science",
            Category::Fashion => "style",
            Category::Legal => "law",
            Category::Career => "jobs",
            Category::Retail => "store",
            Category::Automotive => "auto",
            Category::Food => "food",
            Category::FactChecking => "factcheck",
            Category::Religion => "faith",
            Category::Sports => "sports",
        }
    }
}

impl AsRef<str> for Category {
    fn as_ref(&self) -> &str {
        self.as_str()
    }
}

string_enum!(
    /// Five-point leaning scale, ordered from one side to the other.
    Leaning {
        ProIsrael => "pro-Israel",
        SlightlyProIsrael => "slightly pro-Israel",
        Neutral => "neutral",
        SlightlyProPalestine => "slightly pro-Palestine",
        ProPalestine => "pro-Palestine",
    }
);

impl Leaning {
    pub fn index(self) -> usize {
        Leaning::ALL.iter().position(|l| *l == self).expect("variant listed in ALL")
    }

    pub fn parse_response(s: &str) -> Result<Leaning, AnnotateError> {
        let t = s.trim().trim_matches(|c: char| c == '.' || c == '"' || c == '\'').trim();
        Leaning::ALL
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(t) || format!("{l:?}").eq_ignore_ascii_case(t))
            .ok_or_else(|| AnnotateError::BadLeaning(s.to_string()))
    }

    /// Three-way collapse: both pro-Israel grades, neutral, both pro-Palestine grades.
    pub fn collapse(self) -> Leaning {
        match self {
            Leaning::ProIsrael | Leaning::SlightlyProIsrael => Leaning::ProIsrael,
            Leaning::Neutral => Leaning::Neutral,
            Leaning::SlightlyProPalestine | Leaning::ProPalestine => Leaning::ProPalestine,
        }
    }

    /// Sentence the simulator writes into articles with this leaning and the
    /// stub annotator looks for.
    pub fn cue(self) -> &'static str {
        match self {
            Leaning::ProIsrael => "The piece strongly backs the Israeli side.",
            Leaning::SlightlyProIsrael => "The piece tilts mildly toward the Israeli side.",
            Leaning::Neutral => "The piece weighs both sides evenly.",
            Leaning::SlightlyProPalestine => "The piece tilts mildly toward the Palestinian side.",
            Leaning::ProPalestine => "The piece strongly backs the Palestinian side.",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_closed_and_stems_unique() {
        assert_eq!(Category::ALL.len(), 25);
        let mut stems: Vec<_> = Category::ALL.iter().map(|c| c.stem()).collect();
        stems.sort();
        stems.dedup();
        assert_eq!(stems.len(), 25);
        assert_eq!(Category::parse_response(" news.").unwrap(), Category::News);
        assert_eq!(Category::parse_response("non-profit").unwrap(), Category::NonProfit);
        assert!(matches!(Category::parse_response("Gossip"), Err(AnnotateError::OutOfVocabulary(_))));
    }

    #[test]
    fn leaning_parse_and_collapse() {
        assert_eq!(Leaning::parse_response("Slightly pro-Israel").unwrap(), Leaning::SlightlyProIsrael);
        assert_eq!(Leaning::parse_response("ProPalestine").unwrap(), Leaning::ProPalestine);
        assert_eq!(Leaning::SlightlyProPalestine.collapse(), Leaning::ProPalestine);
        assert_eq!(Leaning::Neutral.index(), 2);
    }
}
