//! Rhythm measures: per-bar component density, symmetry, syncopation,
//! groove consistency, pattern rate, and the paired difference report.

mod density;
mod groove;
mod report;
mod rhythm;

pub use density::{density_report, DensityCounts, DensityGroup, DensityReport, REFERENCE_TRAINING_DENSITY};
pub use groove::{consistency_of, groove_consistency, groove_patterns, pattern_similarity, GrooveMode, GroovePattern};
pub use report::{
    metric_diff_report, metric_vector, render_density_table, render_diff_table, DiffReport, FeatureStats, MetricConfig,
    MetricVector, FEATURE_NAMES, REFERENCE_DIFF_MEAN, REFERENCE_DIFF_STDDEV,
};
pub use rhythm::{
    bar_relative_onsets, bar_syncopation, drum_steps, max_bar_syncopation, metrical_weights, pattern_rate, symmetry,
    syncopation,
};

use crate::pattern::PatternError;
use crate::time::{Quarters, TimeSignature};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("phrase has no bars")]
    NoBars,
    #[error("phrase has no drum notes")]
    NoDrums,
    #[error("groove consistency needs at least two bars")]
    SingleBar,
    #[error("onset lies outside the phrase bars")]
    OnsetOutsideBars,
    #[error("onset {0} is not on the grid")]
    OffGrid(Quarters),
    #[error("no metrical tree for {ts} at {grid} steps per quarter")]
    UnsupportedMeter { ts: TimeSignature, grid: u32 },
    #[error("resolution must be at least 1")]
    BadResolution,
    #[error("{generated} generated vectors but {truth} ground-truth vectors")]
    LengthMismatch { generated: usize, truth: usize },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}
