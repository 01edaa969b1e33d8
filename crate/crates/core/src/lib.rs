//! Desk-scale auditing of search-engine result customization.
//!
//! The crate is organised around the flow of an audit:
//!
//! * [`model`] holds the shared domain types and the append-only audit log
//!   formats every other module reads and writes through.
//! * [`crawler`] builds bot profiles, warms them up with a browsing history,
//!   and dispatches simultaneous multi-bot audits through an [`crawler::EngineClient`].
//! * [`simengine`] is a deterministic simulated search engine with tunable,
//!   known personalization; it is the ground truth the pipeline is validated on.
//! * [`metrics`] and [`stats`] are the pure numeric kernels (rank-biased
//!   overlap, edit distance, Mann-Whitney U, bootstrap, ANOVA).
//! * [`annotate`] categorizes domains and aggregates article leaning labels.
//! * [`analyze`] turns logs into pairwise comparisons and grouped statistics.
//! * [`report`] renders CSV tables and SVG bar charts.
//! * [`validate`] runs the end-to-end simulator scenarios.

pub mod analyze;
pub mod annotate;
pub mod crawler;
pub mod metrics;
pub mod model;
pub mod report;
pub mod seed;
pub mod simengine;
pub mod stats;
pub mod validate;

pub use metrics::{d_metric, rbo_ext, MetricConfig, RankedList, RboVariant};
pub use model::{
    BotProfile, BotType, ComparisonRecord, Cookie, HistoryKind, Language, Location, Metric, Query,
    QueryCategory, RankedResult, SerpRecord, SerpStatus,
};
pub use stats::{BootstrapCI, StatResult, Stars};
