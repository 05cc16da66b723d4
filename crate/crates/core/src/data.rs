//! Shared domain types and validated loading of the numeric inputs.
//!
//! Input ids are 0-based row indices into the probability and feature
//! matrices. Every label, cluster and selection file refers to inputs by
//! these ids.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessPair;
use crate::io::{self, RawMatrix};
use crate::search::{Profile, SearchParams, Variant};

/// Maximum accepted deviation of a probability row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-5;
/// Slack allowed on either side of [0, 1] for individual probabilities.
pub const ENTRY_TOLERANCE: f64 = 1e-9;
/// Cluster value marking a mispredicted input that belongs to no fault.
pub const NOISE: i64 = -1;

/// Row-stochastic matrix of classifier outputs, one row per input.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    /// Validates shape, entry range and row sums. Rows whose sum is off by at
    /// most [`ROW_SUM_TOLERANCE`] are rescaled to sum to one.
    pub fn new(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Shape("probability matrix has no rows".into()));
        }
        if cols < 2 {
            return Err(Error::Shape(format!(
                "probability matrix needs at least 2 classes, got {cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for (row, chunk) in data.chunks_exact_mut(cols).enumerate() {
            for v in chunk.iter_mut() {
                if !v.is_finite() || *v < -ENTRY_TOLERANCE || *v > 1.0 + ENTRY_TOLERANCE {
                    return Err(Error::Value(format!(
                        "probability {v} in row {row} is outside [0, 1]"
                    )));
                }
                *v = v.clamp(0.0, 1.0);
            }
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Stochasticity { row, sum });
            }
            // leave rows that are stochastic up to rounding untouched so files round-trip
            if (sum - 1.0).abs() > 1e-12 {
                chunk.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let raw = raw_from_rows(rows)?;
        Self::new(raw.rows, raw.cols, raw.data)
    }

    pub fn n_inputs(&self) -> usize {
        self.rows
    }

    pub fn n_classes(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Argmax of row `i`; ties go to the lowest class index.
    pub fn predicted_class(&self, i: usize) -> Result<usize> {
        if i >= self.rows {
            return Err(Error::Index {
                id: i,
                len: self.rows,
            });
        }
        Ok(argmax(self.row(i)))
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

fn raw_from_rows(rows: &[Vec<f64>]) -> Result<RawMatrix> {
    let cols = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Shape("matrix has no rows".into()))?;
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Shape(format!(
            "row {i} has {} columns, expected {cols}",
            r.len()
        )));
    }
    Ok(RawMatrix {
        rows: rows.len(),
        cols,
        data: rows.concat(),
    })
}

/// Per-input feature vectors; every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("feature matrix is {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite feature at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let raw = raw_from_rows(rows)?;
        Self::new(raw.rows, raw.cols, raw.data)
    }

    pub fn n_inputs(&self) -> usize {
        self.rows
    }

    pub fn n_features(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Column-wise min-max scaled features. Built by
/// [`normalize_features`](crate::fitness::normalize_features).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// Columns that are not identically zero; constant input columns drop out.
    active: Vec<usize>,
}

impl NormalizedFeatureMatrix {
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        let active = (0..cols)
            .filter(|&c| (0..rows).any(|r| data[r * cols + c] != 0.0))
            .collect();
        Self {
            rows,
            cols,
            data,
            active,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.rows
    }

    pub fn n_features(&self) -> usize {
        self.cols
    }

    /// Columns carrying any signal. All-zero columns contribute nothing to
    /// inner products, so the diversity computation ignores them.
    pub fn active_columns(&self) -> &[usize] {
        &self.active
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Ground-truth class per input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthLabels(Vec<usize>);

impl GroundTruthLabels {
    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if let Some((i, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= n_classes) {
            return Err(Error::Value(format!(
                "label {c} of input {i} is not a class in [0, {n_classes})"
            )));
        }
        Ok(Self(labels))
    }

    /// Builds labels from `id,value` pairs that must cover ids `0..n` exactly once.
    pub fn from_pairs(pairs: &[(usize, i64)], n: usize, n_classes: usize) -> Result<Self> {
        let mut labels = vec![None; n];
        for &(id, value) in pairs {
            let slot = labels.get_mut(id).ok_or(Error::Index { id, len: n })?;
            if slot.is_some() {
                return Err(Error::Value(format!("input {id} is labelled twice")));
            }
            let class = usize::try_from(value)
                .map_err(|_| Error::Value(format!("negative label {value} for input {id}")))?;
            *slot = Some(class);
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| Error::Shape(format!("input {i} has no label"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, n_classes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// `mask[i]` is true when the predicted class of input `i` differs from its label.
pub fn misprediction_mask(p: &ProbabilityMatrix, y: &GroundTruthLabels) -> Result<Vec<bool>> {
    if p.n_inputs() != y.len() {
        return Err(Error::Shape(format!(
            "{} probability rows but {} labels",
            p.n_inputs(),
            y.len()
        )));
    }
    Ok(y.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &label)| argmax(p.row(i)) != label)
        .collect())
}

/// Fault-cluster assignment of mispredicted inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultPartition {
    clusters: BTreeMap<usize, i64>,
    total_faults: usize,
}

impl FaultPartition {
    /// `total_faults` defaults to the number of distinct non-noise clusters;
    /// pass `Some` to pin it to a census computed elsewhere.
    pub fn new(clusters: BTreeMap<usize, i64>, total_faults: Option<usize>) -> Result<Self> {
        if let Some((id, v)) = clusters.iter().find(|(_, &v)| v < NOISE) {
            return Err(Error::Value(format!(
                "cluster id {v} of input {id} is neither a cluster nor noise"
            )));
        }
        let derived = clusters
            .values()
            .filter(|&&c| c != NOISE)
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        Ok(Self {
            clusters,
            total_faults: total_faults.unwrap_or(derived),
        })
    }

    pub fn from_pairs(pairs: &[(usize, i64)], total_faults: Option<usize>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(id, c) in pairs {
            if map.insert(id, c).is_some() {
                return Err(Error::Value(format!("input {id} has two cluster labels")));
            }
        }
        Self::new(map, total_faults)
    }

    pub fn cluster_of(&self, id: usize) -> Option<i64> {
        self.clusters.get(&id).copied()
    }

    pub fn total_faults(&self) -> usize {
        self.total_faults
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.clusters.iter().map(|(&k, &v)| (k, v))
    }

    /// Checks that only mispredicted inputs carry a cluster label.
    pub fn check_against(&self, mask: &[bool]) -> Result<()> {
        for &id in self.clusters.keys() {
            match mask.get(id) {
                None => {
                    return Err(Error::Index {
                        id,
                        len: mask.len(),
                    })
                }
                Some(false) => {
                    return Err(Error::Value(format!(
                        "input {id} has a fault cluster but is predicted correctly"
                    )))
                }
                Some(true) => {}
            }
        }
        Ok(())
    }
}

/// A chosen subset of inputs and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    pub budget: usize,
    pub subset: Vec<usize>,
    pub fitness: Option<FitnessPair>,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SearchParams>,
}

impl SelectionResult {
    pub fn new(method: impl Into<String>, subset: Vec<usize>) -> Self {
        Self {
            method: method.into(),
            budget: subset.len(),
            subset,
            fitness: None,
            seed: None,
            params: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.subset.len() != self.budget {
            return Err(Error::Shape(format!(
                "selection holds {} ids but budget is {}",
                self.subset.len(),
                self.budget
            )));
        }
        let mut seen = vec![false; n];
        for &id in &self.subset {
            let slot = seen.get_mut(id).ok_or(Error::Index { id, len: n })?;
            if std::mem::replace(slot, true) {
                return Err(Error::Value(format!("input {id} selected twice")));
            }
        }
        Ok(())
    }
}

/// JSON description of one run: where the inputs live and how to select.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub probabilities: PathBuf,
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<PathBuf>,
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_faults: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    /// Directory relative paths resolve against; the manifest's own directory.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_method() -> String {
    "deepgd".into()
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Search parameters from the manifest's profile and variant.
    pub fn search_params(&self) -> SearchParams {
        let mut params = SearchParams::for_profile(self.profile.unwrap_or_default(), self.budget);
        params.seed = self.seed;
        params.variant = self.variant.unwrap_or_default();
        params
    }
}

pub fn load_probability_matrix(path: &Path) -> Result<ProbabilityMatrix> {
    let raw = io::read_matrix(path)?;
    ProbabilityMatrix::new(raw.rows, raw.cols, raw.data)
}

pub fn load_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let raw = io::read_matrix(path)?;
    FeatureMatrix::new(raw.rows, raw.cols, raw.data)
}

pub fn load_labels(path: &Path, n: usize, n_classes: usize) -> Result<GroundTruthLabels> {
    GroundTruthLabels::from_pairs(&io::read_id_values(path)?, n, n_classes)
}

pub fn load_fault_partition(path: &Path, total_faults: Option<usize>) -> Result<FaultPartition> {
    FaultPartition::from_pairs(&io::read_id_values(path)?, total_faults)
}

/// Everything a manifest points at, loaded and cross-checked.
#[derive(Debug, Clone)]
pub struct RunData {
    pub manifest: RunManifest,
    pub probabilities: ProbabilityMatrix,
    pub features: FeatureMatrix,
    pub labels: Option<GroundTruthLabels>,
    pub clusters: Option<FaultPartition>,
}

impl RunData {
    pub fn load(manifest: RunManifest) -> Result<Self> {
        let probabilities = load_probability_matrix(&manifest.resolve(&manifest.probabilities))?;
        let features = load_feature_matrix(&manifest.resolve(&manifest.features))?;
        let n = probabilities.n_inputs();
        if features.n_inputs() != n {
            return Err(Error::Shape(format!(
                "{n} probability rows but {} feature rows",
                features.n_inputs()
            )));
        }
        for (name, declared, actual) in [
            ("n", manifest.n, n),
            ("m", manifest.m, probabilities.n_classes()),
            ("d", manifest.d, features.n_features()),
        ] {
            if let Some(declared) = declared {
                if declared != actual {
                    return Err(Error::Shape(format!(
                        "manifest declares {name}={declared} but files have {actual}"
                    )));
                }
            }
        }
        let labels = manifest
            .labels
            .as_ref()
            .map(|p| load_labels(&manifest.resolve(p), n, probabilities.n_classes()))
            .transpose()?;
        let clusters = manifest
            .clusters
            .as_ref()
            .map(|p| load_fault_partition(&manifest.resolve(p), manifest.total_faults))
            .transpose()?;
        if let (Some(labels), Some(clusters)) = (&labels, &clusters) {
            clusters.check_against(&misprediction_mask(&probabilities, labels)?)?;
        }
        Ok(Self {
            manifest,
            probabilities,
            features,
            labels,
            clusters,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.probabilities.n_inputs()
    }

    pub fn mask(&self) -> Result<Vec<bool>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Config("manifest has no `labels` file".into()))?;
        misprediction_mask(&self.probabilities, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_simple_probability_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = load_probability_matrix(&write(dir.path(), "p.csv", "1,0\n0.5,0.5\n")).unwrap();
        assert_eq!((p.n_inputs(), p.n_classes()), (2, 2));
    }

    #[test]
    fn rejects_row_summing_to_1_2() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_probability_matrix(&write(dir.path(), "p.csv", "0.6,0.6\n")).unwrap_err();
        assert!(matches!(err, Error::Stochasticity { row: 0, .. }));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let p = ProbabilityMatrix::from_rows(&[vec![0.499999, 0.500001]]).unwrap();
        assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let p = ProbabilityMatrix::from_rows(&[vec![0.499999, 0.499999]]).unwrap();
        assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p.row(0)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(matches!(
            ProbabilityMatrix::from_rows(&[vec![1.5, -0.5]]),
            Err(Error::Value(_))
        ));
    }

    #[test]
    fn rejects_single_class() {
        assert!(matches!(
            ProbabilityMatrix::from_rows(&[vec![1.0]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn feature_loading() {
        let dir = tempfile::tempdir().unwrap();
        let f = load_feature_matrix(&write(dir.path(), "f.csv", "2,1\n4,1\n6,1\n")).unwrap();
        assert_eq!((f.n_inputs(), f.n_features()), (3, 2));
        let err = load_feature_matrix(&write(dir.path(), "g.csv", "1,NaN\n")).unwrap_err();
        assert!(matches!(err, Error::Value(_)));
        let err = load_feature_matrix(&write(dir.path(), "h.csv", "")).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn argmax_tie_goes_low() {
        let p = ProbabilityMatrix::from_rows(&[
            vec![0.1, 0.7, 0.2],
            vec![0.5, 0.5, 0.0],
            vec![0.2, 0.3, 0.5],
        ])
        .unwrap();
        assert_eq!(p.predicted_class(0).unwrap(), 1);
        assert_eq!(p.predicted_class(1).unwrap(), 0);
        assert_eq!(p.predicted_class(2).unwrap(), 2);
        assert!(matches!(p.predicted_class(3), Err(Error::Index { .. })));
    }

    #[test]
    fn mispredictions() {
        let p = ProbabilityMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let y = GroundTruthLabels::new(vec![0, 1], 2).unwrap();
        assert_eq!(misprediction_mask(&p, &y).unwrap(), vec![false, false]);
        let y = GroundTruthLabels::new(vec![1, 0], 2).unwrap();
        assert_eq!(misprediction_mask(&p, &y).unwrap(), vec![true, true]);
        let tie = ProbabilityMatrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let y = GroundTruthLabels::new(vec![0], 2).unwrap();
        assert_eq!(misprediction_mask(&tie, &y).unwrap(), vec![false]);
        let short = GroundTruthLabels::new(vec![0], 2).unwrap();
        assert!(matches!(misprediction_mask(&p, &short), Err(Error::Shape(_))));
    }

    #[test]
    fn labels_must_be_valid_classes() {
        assert!(GroundTruthLabels::new(vec![0, 2], 2).is_err());
        assert!(GroundTruthLabels::from_pairs(&[(0, 1)], 2, 2).is_err());
        assert!(GroundTruthLabels::from_pairs(&[(0, 1), (1, -3)], 2, 2).is_err());
        let y = GroundTruthLabels::from_pairs(&[(1, 0), (0, 1)], 2, 2).unwrap();
        assert_eq!(y.as_slice(), &[1, 0]);
    }

    #[test]
    fn fault_count_derived_or_pinned() {
        let pairs = [(0, 0), (1, 0), (2, 3), (4, NOISE)];
        assert_eq!(FaultPartition::from_pairs(&pairs, None).unwrap().total_faults(), 2);
        assert_eq!(
            FaultPartition::from_pairs(&pairs, Some(42)).unwrap().total_faults(),
            42
        );
        assert!(FaultPartition::from_pairs(&[(0, -2)], None).is_err());
        assert!(FaultPartition::from_pairs(&[(0, 1), (0, 2)], None).is_err());
    }

    #[test]
    fn clusters_only_on_mispredicted_inputs() {
        let part = FaultPartition::from_pairs(&[(1, 0)], None).unwrap();
        assert!(part.check_against(&[false, true]).is_ok());
        assert!(part.check_against(&[true, false]).is_err());
        assert!(part.check_against(&[true]).is_err());
    }

    #[test]
    fn selection_validation() {
        let s = SelectionResult::new("x", vec![0, 2]);
        assert!(s.validate(3).is_ok());
        assert!(matches!(s.validate(2), Err(Error::Index { id: 2, .. })));
        assert!(SelectionResult::new("x", vec![1, 1]).validate(3).is_err());
    }

    #[test]
    fn manifest_shape_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "p.csv", "1,0\n0,1\n");
        write(dir.path(), "f.csv", "1\n2\n");
        write(
            dir.path(),
            "m.json",
            r#"{"probabilities":"p.csv","features":"f.csv","budget":1,"n":3}"#,
        );
        let m = RunManifest::load(&dir.path().join("m.json")).unwrap();
        assert!(matches!(RunData::load(m), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn mask_is_invariant_under_class_permutation(
            rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 4), 1..20),
            labels_seed in proptest::collection::vec(0usize..4, 20),
            perm_seed in 0usize..24,
        ) {
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|r| { let s: f64 = r.iter().sum(); r.into_iter().map(|v| v / s).collect() })
                .collect();
            let n = rows.len();
            let labels: Vec<usize> = labels_seed[..n].to_vec();
            // the `perm_seed`-th permutation of 4 classes
            let mut pool = vec![0usize, 1, 2, 3];
            let mut perm = Vec::new();
            let mut k = perm_seed;
            for base in (1..=4).rev() {
                perm.push(pool.remove(k % base));
                k /= base;
            }
            let p = ProbabilityMatrix::from_rows(&rows).unwrap();
            let y = GroundTruthLabels::new(labels.clone(), 4).unwrap();
            let permuted_rows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| { let mut out = vec![0.0; 4]; for c in 0..4 { out[perm[c]] = r[c]; } out })
                .collect();
            let permuted_labels: Vec<usize> = labels.iter().map(|&c| perm[c]).collect();
            let pp = ProbabilityMatrix::from_rows(&permuted_rows).unwrap();
            let yp = GroundTruthLabels::new(permuted_labels, 4).unwrap();
            // strict argmax uniqueness is needed for covariance; random reals give it a.s.
            prop_assert_eq!(misprediction_mask(&p, &y).unwrap(), misprediction_mask(&pp, &yp).unwrap());
        }

        #[test]
        fn mask_count_matches_accuracy(
            rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 1..30),
            labels_seed in proptest::collection::vec(0usize..3, 30),
        ) {
            let n = rows.len();
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|r| { let s: f64 = r.iter().sum(); r.into_iter().map(|v| v / s).collect() })
                .collect();
            let labels = labels_seed[..n].to_vec();
            let correct = rows
                .iter()
                .zip(&labels)
                .filter(|(r, &l)| r.iter().all(|&v| v <= r[l]) && r[..l].iter().all(|&v| v < r[l]))
                .count();
            let accuracy = correct as f64 / n as f64;
            let p = ProbabilityMatrix::from_rows(&rows).unwrap();
            let y = GroundTruthLabels::new(labels, 3).unwrap();
            let wrong = misprediction_mask(&p, &y).unwrap().iter().filter(|&&b| b).count();
            prop_assert_eq!(wrong, (n as f64 * (1.0 - accuracy)).round() as usize);
        }
    }
}
