//! Significance testing: bootstrap intervals, Mann-Whitney U, one-way ANOVA
//! and an unclamped Bonferroni adjustment.

mod anova;
mod bootstrap;
mod mwu;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::anova_oneway;
pub use bootstrap::{bootstrap_ci, BootstrapCI, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
pub use mwu::{exact_u_cdf, mann_whitney_u, MwuMode, EXACT_AUTO_LIMIT};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("{0}: sample is empty")]
    Empty(&'static str),
    #[error("confidence level must lie in (0, 1), got {0}")]
    Level(f64),
    #[error("resample count must be positive")]
    Resamples,
    #[error("ANOVA needs at least two groups with two values each")]
    AnovaShape,
    #[error("family size {family} is smaller than the {results} results being adjusted")]
    FamilyTooSmall { family: usize, results: usize },
    #[error("exact test with ties needs {0} labelings, above the enumeration limit")]
    ExactTooLarge(u128),
    #[error("non-finite observation")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    MannWhitneyU,
    AnovaF,
}

/// Significance marker derived from the adjusted p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p_adjusted: f64) -> Stars {
        if p_adjusted < 0.001 {
            Stars::Three
        } else if p_adjusted < 0.01 {
            Stars::Two
        } else if p_adjusted < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Conditions under which a statistic was computed on degenerate input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatFlag {
    /// Every observation identical; the test has no information.
    DegenerateData,
    /// Zero within-group variance with unequal means.
    InfiniteF,
}

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub test: TestKind,
    pub group_labels: Vec<String>,
    pub statistic: f64,
    pub p_value: f64,
    pub family_size: usize,
    /// `p_value × family_size`, not clamped to 1.
    pub p_adjusted: f64,
    pub stars: Stars,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<StatFlag>,
}

impl StatResult {
    pub(crate) fn unadjusted(test: TestKind, statistic: f64, p_value: f64, flag: Option<StatFlag>) -> Self {
        StatResult {
            test,
            group_labels: Vec::new(),
            statistic,
            p_value,
            family_size: 1,
            p_adjusted: p_value,
            stars: Stars::from_p(p_value),
            flag,
        }
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Self {
        self.group_labels = labels.into_iter().map(Into::into).collect();
        self
    }

    /// Re-adjusts against a family of `family_size` comparisons.
    pub fn adjusted(mut self, family_size: usize) -> Self {
        self.family_size = family_size.max(1);
        self.p_adjusted = self.p_value * self.family_size as f64;
        self.stars = Stars::from_p(self.p_adjusted);
        self
    }
}

/// Bonferroni adjustment without clamping: `p_adjusted = p × family_size`.
pub fn bonferroni(results: Vec<StatResult>, family_size: usize) -> Result<Vec<StatResult>, StatsError> {
    if family_size < results.len().max(1) {
        return Err(StatsError::FamilyTooSmall { family: family_size, results: results.len() });
    }
    Ok(results.into_iter().map(|r| r.adjusted(family_size)).collect())
}

pub(crate) fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn raw(p: f64) -> StatResult {
        StatResult::unadjusted(TestKind::MannWhitneyU, 0.0, p, None)
    }

    #[test]
    fn bonferroni_table_rows() {
        let out = bonferroni(vec![raw(0.002), raw(0.88), raw(0.0)], 12).unwrap();
        assert_abs_diff_eq!(out[0].p_adjusted, 0.024, epsilon = 1e-12);
        assert_eq!(out[0].stars, Stars::One);
        assert_abs_diff_eq!(out[1].p_adjusted, 10.56, epsilon = 1e-12);
        assert!(out[1].p_adjusted > 1.0);
        assert_eq!(out[2].p_adjusted, 0.0);
        assert_eq!(out[2].stars, Stars::Three);
        assert!(out.iter().all(|r| r.family_size == 12));
        let unrounded = bonferroni(vec![raw(10.52 / 12.0)], 12).unwrap();
        assert_abs_diff_eq!(unrounded[0].p_adjusted, 10.52, epsilon = 1e-12);
    }

    #[test]
    fn bonferroni_family_too_small() {
        assert!(bonferroni(vec![raw(0.1), raw(0.2)], 1).is_err());
    }

    #[test]
    fn stars_thresholds_are_monotone() {
        let ps = [0.0, 0.0005, 0.001, 0.005, 0.01, 0.03, 0.05, 0.5, 3.0];
        let stars: Vec<Stars> = ps.iter().map(|&p| Stars::from_p(p)).collect();
        assert!(stars.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(Stars::from_p(0.001), Stars::Two);
        assert_eq!(Stars::from_p(0.05), Stars::None);
    }

    #[test]
    fn bonferroni_preserves_order() {
        let ps = [0.3, 0.001, 0.04, 0.2];
        let out = bonferroni(ps.iter().map(|&p| raw(p)).collect(), 36).unwrap();
        for i in 0..ps.len() {
            for j in 0..ps.len() {
                assert_eq!(ps[i] < ps[j], out[i].p_adjusted < out[j].p_adjusted);
            }
        }
    }
}
