//! Black-box test input selection for classifiers.
//!
//! Picks a fixed-size subset of unlabeled inputs that is both uncertain (mean
//! Gini score of the model's output probabilities) and diverse (log
//! determinant of the Gram matrix of normalized feature vectors), using a
//! customized NSGA-II search. Also provides the comparison baselines and the
//! evaluation harness used to score selections against known fault clusters.

pub mod baselines;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod fitness;
pub mod io;
pub mod method;
pub mod search;
pub mod synthetic;

pub use baselines::{gini_top_k, maxp_top_k, random_select, BaselineMethod};
pub use data::{
    misprediction_mask, FaultPartition, FeatureMatrix, GroundTruthLabels,
    NormalizedFeatureMatrix, ProbabilityMatrix, RunData, RunManifest, SelectionResult, NOISE,
};
pub use error::{Error, Result};
pub use evaluation::{
    dbscan_cluster, evaluate_selection, fault_detection_rate, stability_stats,
    wilcoxon_signed_rank, Alternative, EvalReport, StabilityStats, WilcoxonResult,
};
pub use fitness::{
    gini_score, log_geometric_diversity, normalize_features, subset_gini, FitnessPair,
    SelectionProblem,
};
pub use method::Method;
pub use search::{knee_point, select, Individual, Profile, SearchParams, Variant};
