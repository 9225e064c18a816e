//! Per-trial efficiency and safety metrics, group statistics, and reports.

mod metrics;
mod report;
mod stats;

pub use metrics::{compute_trial_metrics, InteractionTimes, MetricsError, TrialMetrics};
pub use report::{aggregate_report, metrics_csv, ConditionSummary, PairwiseRow, Report, Summary, METRIC_NAMES};
pub use stats::{one_way_anova, stars, welch_t_test, AnovaResult, StatsError, WelchResult};
