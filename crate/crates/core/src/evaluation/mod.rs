//! Scoring of selections against fault clusters.

mod dbscan;
mod stats;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{GroundTruthLabels, NormalizedFeatureMatrix, ProbabilityMatrix, NOISE};
use crate::data::{FaultPartition, SelectionResult};
use crate::error::{Error, Result};
use crate::fitness::log_geometric_diversity;

pub use dbscan::{dbscan_cluster, Dbscan};
pub use stats::{
    stability_stats, wilcoxon_signed_rank, Alternative, StabilityStats, WilcoxonResult,
};

/// Distinct non-noise fault clusters among the mispredicted members of `subset`.
pub fn faults_revealed(
    subset: &[usize],
    mask: &[bool],
    clusters: &FaultPartition,
) -> Result<BTreeSet<i64>> {
    let mut found = BTreeSet::new();
    for &id in subset {
        let mispredicted = *mask.get(id).ok_or(Error::Index {
            id,
            len: mask.len(),
        })?;
        if !mispredicted {
            continue;
        }
        match clusters.cluster_of(id) {
            None => return Err(Error::Coverage(id)),
            Some(NOISE) => {}
            Some(c) => {
                found.insert(c);
            }
        }
    }
    Ok(found)
}

/// Faults revealed divided by `min(|S|, total faults)`.
pub fn fault_detection_rate(
    subset: &[usize],
    mask: &[bool],
    clusters: &FaultPartition,
) -> Result<f64> {
    let total = clusters.total_faults();
    if total == 0 {
        return Err(Error::Config("total fault count is zero".into()));
    }
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let revealed = faults_revealed(subset, mask, clusters)?.len();
    Ok(revealed as f64 / subset.len().min(total) as f64)
}

/// Log geometric diversity of the selected inputs.
pub fn selection_diversity(f: &NormalizedFeatureMatrix, subset: &[usize]) -> Result<f64> {
    log_geometric_diversity(f, subset)
}

/// Feature rows of the mispredicted inputs, each extended by its actual and
/// predicted class scaled to [0, 1] and multiplied by `class_weight`.
///
/// Returns the ids of the mispredicted inputs alongside their rows.
pub fn build_fault_features(
    f: &NormalizedFeatureMatrix,
    y: &GroundTruthLabels,
    p: &ProbabilityMatrix,
    mask: &[bool],
    class_weight: f64,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let n = f.n_inputs();
    if p.n_inputs() != n || y.len() != n || mask.len() != n {
        return Err(Error::Shape(format!(
            "features {n}, probabilities {}, labels {}, mask {} rows",
            p.n_inputs(),
            y.len(),
            mask.len()
        )));
    }
    let scale = (p.n_classes() - 1) as f64;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for i in (0..n).filter(|&i| mask[i]) {
        let mut row = f.row(i).to_vec();
        row.push(class_weight * y.as_slice()[i] as f64 / scale);
        row.push(class_weight * p.predicted_class(i)? as f64 / scale);
        ids.push(i);
        rows.push(row);
    }
    Ok((ids, rows))
}

/// Score of one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub budget: usize,
    pub fdr: f64,
    pub faults_revealed: usize,
    pub mispredictions: usize,
    /// `null` when the selection's Gram matrix is singular.
    #[serde(with = "crate::fitness::neg_inf_as_null")]
    pub log_gd: f64,
    pub seed: Option<u64>,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "method,budget,seed,fdr,faults_revealed,mispredictions,log_gd";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:?},{},{},{}",
            self.method,
            self.budget,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.fdr,
            self.faults_revealed,
            self.mispredictions,
            if self.log_gd.is_finite() {
                format!("{:?}", self.log_gd)
            } else {
                "-inf".into()
            }
        )
    }
}

/// Scores a selection: fault detection rate, misprediction count and diversity.
pub fn evaluate_selection(
    selection: &SelectionResult,
    features: &NormalizedFeatureMatrix,
    mask: &[bool],
    clusters: &FaultPartition,
) -> Result<EvalReport> {
    selection.validate(mask.len())?;
    let revealed = faults_revealed(&selection.subset, mask, clusters)?;
    Ok(EvalReport {
        method: selection.method.clone(),
        budget: selection.subset.len(),
        fdr: fault_detection_rate(&selection.subset, mask, clusters)?,
        faults_revealed: revealed.len(),
        mispredictions: selection.subset.iter().filter(|&&i| mask[i]).count(),
        log_gd: selection_diversity(features, &selection.subset)?,
        seed: selection.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::normalize_features;
    use crate::data::FeatureMatrix;
    use proptest::prelude::*;

    /// Ten inputs, the first six mispredicted across four clusters.
    fn scenario() -> (Vec<bool>, FaultPartition) {
        let mut mask = vec![false; 10];
        mask[..6].iter_mut().for_each(|m| *m = true);
        let clusters =
            FaultPartition::from_pairs(&[(0, 0), (1, 0), (2, 1), (3, 2), (4, 3), (5, NOISE)], None)
                .unwrap();
        (mask, clusters)
    }

    #[test]
    fn nothing_mispredicted_reveals_nothing() {
        let (mask, clusters) = scenario();
        assert!(faults_revealed(&[6, 7, 8], &mask, &clusters).unwrap().is_empty());
        assert_eq!(fault_detection_rate(&[6, 7, 8], &mask, &clusters).unwrap(), 0.0);
    }

    #[test]
    fn same_cluster_counts_once() {
        let (mask, clusters) = scenario();
        assert_eq!(faults_revealed(&[0, 1], &mask, &clusters).unwrap().len(), 1);
    }

    #[test]
    fn worked_examples() {
        let (mask, clusters) = scenario();
        assert_eq!(clusters.total_faults(), 4);
        // ten inputs, four mispredictions in four clusters
        let subset2 = [0, 2, 3, 4, 6, 7, 8, 9, 5, 1];
        assert_eq!(faults_revealed(&subset2, &mask, &clusters).unwrap().len(), 4);
        assert_eq!(fault_detection_rate(&subset2, &mask, &clusters).unwrap(), 1.0);
        // three inputs, two mispredicted from the same fault
        assert_eq!(
            fault_detection_rate(&[0, 1, 9], &mask, &clusters).unwrap(),
            1.0 / 3.0
        );
    }

    #[test]
    fn coverage_and_config_errors() {
        let mask = vec![true, true];
        let partial = FaultPartition::from_pairs(&[(0, 0)], None).unwrap();
        assert!(matches!(
            fault_detection_rate(&[0, 1], &mask, &partial),
            Err(Error::Coverage(1))
        ));
        let empty = FaultPartition::from_pairs(&[(0, NOISE), (1, NOISE)], None).unwrap();
        assert!(matches!(
            fault_detection_rate(&[0, 1], &mask, &empty),
            Err(Error::Config(_))
        ));
        let pinned = FaultPartition::from_pairs(&[(0, NOISE), (1, NOISE)], Some(3)).unwrap();
        assert_eq!(fault_detection_rate(&[0, 1], &mask, &pinned).unwrap(), 0.0);
    }

    #[test]
    fn fault_features_shape_and_scaling() {
        let f = normalize_features(
            &FeatureMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.0]]).unwrap(),
        );
        let p = ProbabilityMatrix::from_rows(&[vec![0.2, 0.8], vec![0.9, 0.1]]).unwrap();
        let y = GroundTruthLabels::new(vec![0, 0], 2).unwrap();
        let (ids, rows) = build_fault_features(&f, &y, &p, &[true, false], 1.0).unwrap();
        assert_eq!(ids, vec![0]);
        assert_eq!(rows[0].len(), 5);
        assert_eq!(&rows[0][3..], &[0.0, 1.0]);
        let (ids, rows) = build_fault_features(&f, &y, &p, &[false, false], 1.0).unwrap();
        assert!(ids.is_empty() && rows.is_empty());
        assert!(build_fault_features(&f, &y, &p, &[true], 1.0).is_err());
    }

    #[test]
    fn report_rejects_unknown_ids() {
        let (mask, clusters) = scenario();
        let f = normalize_features(
            &FeatureMatrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap(),
        );
        let bad = SelectionResult::new("external", vec![0, 10]);
        assert!(matches!(
            evaluate_selection(&bad, &f, &mask, &clusters),
            Err(Error::Index { .. })
        ));
        let good = SelectionResult::new("external", vec![0, 2]);
        let report = evaluate_selection(&good, &f, &mask, &clusters).unwrap();
        assert_eq!((report.faults_revealed, report.mispredictions), (2, 2));
        assert_eq!(report.fdr, 1.0);
    }

    proptest! {
        #[test]
        fn revealed_faults_grow_with_the_subset(
            labels in proptest::collection::vec(-1i64..5, 30),
            mispredicted in proptest::collection::vec(any::<bool>(), 30),
            small in proptest::collection::btree_set(0usize..30, 1..10),
            extra in proptest::collection::btree_set(0usize..30, 0..10),
        ) {
            let pairs: Vec<(usize, i64)> = (0..30).filter(|&i| mispredicted[i]).map(|i| (i, labels[i])).collect();
            let clusters = FaultPartition::from_pairs(&pairs, Some(5)).unwrap();
            let s: Vec<usize> = small.iter().copied().collect();
            let big: Vec<usize> = small.union(&extra).copied().collect();
            let a = faults_revealed(&s, &mispredicted, &clusters).unwrap();
            let b = faults_revealed(&big, &mispredicted, &clusters).unwrap();
            prop_assert!(a.is_subset(&b));
            let fdr = fault_detection_rate(&s, &mispredicted, &clusters).unwrap();
            prop_assert!((0.0..=1.0).contains(&fdr));
        }
    }
}
