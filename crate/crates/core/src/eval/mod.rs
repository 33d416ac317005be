//! Downstream evaluation: link prediction, top-K recommendation,
//! co-clustering NMI, and the MI-difference identity check.

mod cluster;
mod link;
mod ranking;
mod report;
pub mod theory;

pub use cluster::{cluster_assign, nmi, nmi_with, NmiNormalization};
pub use link::{
    auc_pr, auc_roc, edge_features, edge_features_with, evaluate_link_prediction, fit_logistic, FeatureKind,
    LinkClassifier, LinkEvalConfig, LinkMetrics,
};
pub use ranking::{
    evaluate_ranking, rank_and_score, rank_items, topk_metrics, ItemScorer, RankingResult, ScoringRule, TopKMetrics,
};
pub use report::{MetricSummary, MetricsReport};
pub use theory::{random_instance, verify_mi_difference, MiDifference};
