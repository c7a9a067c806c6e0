//! Reconstruction scoring: matching, per-scene components, cell aggregation,
//! class synonyms and the statistics used in reports.

mod matching;
mod scores;
mod stats;
mod synonyms;

use thiserror::Error;

pub use matching::{hungarian_match, solve_assignment, MatchPair, MatchResult, COST_CAP};
pub use scores::{
    aggregate_cell, component_scores, fidelity, fov_filter, reconstruct_score, CellAggregate,
    CellIntervals, ComponentScores, MatchAcceptance, SceneOutcome, ScoreConfig, ZeroFilledMeans,
};
pub use stats::{
    bootstrap_ci, correlations, correlations_with, mean, pearson, ranks, spearman, Interval,
    RankTies, DEFAULT_LEVEL, DEFAULT_RESAMPLES,
};
pub use synonyms::{class_match, normalize_class, SynonymTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no ground truth")]
    NoGroundTruth,
    #[error("{what} = {value} outside [0, 1]")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite value")]
    NonFinite,
}
