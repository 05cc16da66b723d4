//! The two search objectives: mean Gini uncertainty and geometric diversity.
//!
//! Geometric diversity is the determinant of the Gram matrix of a subset's
//! normalized feature rows. The determinant of a 100x100 Gram matrix easily
//! leaves the range of `f64`, so it is always handled as a log-determinant
//! obtained from a Cholesky factorization. A singular Gram matrix yields
//! `f64::NEG_INFINITY`, which sorts below every finite value and compares
//! equal to itself.
//!
//! When a subset has more rows than there are informative feature columns the
//! Gram matrix is rank deficient for every subset. In that regime the
//! determinant of the dual `d x d` scatter matrix `F_S^T F_S` is used instead.
//! By Cauchy-Binet both quantities are sums of squared maximal minors of
//! `F_S`, and they coincide when the subset size equals the feature count.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, NormalizedFeatureMatrix, ProbabilityMatrix, ROW_SUM_TOLERANCE};
use crate::error::{Error, Result};

/// Schur-complement pivots below this value mark the matrix as singular.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Objective values of one subset. Larger is better for both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessPair {
    pub gini: f64,
    /// `null` in JSON when the subset is degenerate (log-determinant of zero).
    #[serde(with = "neg_inf_as_null")]
    pub log_gd: f64,
}

impl FitnessPair {
    pub fn new(gini: f64, log_gd: f64) -> Self {
        Self { gini, log_gd }
    }

    /// Pareto dominance for maximization: no worse on both, better on one.
    pub fn dominates(&self, other: &FitnessPair) -> bool {
        self.gini >= other.gini
            && self.log_gd >= other.log_gd
            && (self.gini > other.gini || self.log_gd > other.log_gd)
    }
}

pub(crate) mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// `1 - sum(p_i^2)` for one output distribution.
pub fn gini_score(row: &[f64]) -> Result<f64> {
    if row.len() < 2 || row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Value(format!("{row:?} is not a distribution")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::Value(format!("distribution sums to {sum}")));
    }
    Ok(gini_unchecked(row))
}

#[inline]
fn gini_unchecked(row: &[f64]) -> f64 {
    1.0 - row.iter().map(|p| p * p).sum::<f64>()
}

/// Gini score of every input, in id order.
pub fn gini_scores(p: &ProbabilityMatrix) -> Vec<f64> {
    (0..p.n_inputs()).map(|i| gini_unchecked(p.row(i))).collect()
}

/// Mean Gini score over the subset.
pub fn subset_gini(p: &ProbabilityMatrix, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_ids(subset, p.n_inputs())?;
    let total: f64 = subset.iter().map(|&i| gini_unchecked(p.row(i))).sum();
    Ok(total / subset.len() as f64)
}

fn check_ids(subset: &[usize], n: usize) -> Result<()> {
    match subset.iter().find(|&&i| i >= n) {
        Some(&id) => Err(Error::Index { id, len: n }),
        None => Ok(()),
    }
}

/// Column-wise min-max scaling to [0, 1]. Constant columns become all zero.
pub fn normalize_features(f: &FeatureMatrix) -> NormalizedFeatureMatrix {
    let (rows, cols) = (f.n_inputs(), f.n_features());
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for r in 0..rows {
        for (c, &v) in f.row(r).iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for (c, &v) in f.row(r).iter().enumerate() {
            let span = hi[c] - lo[c];
            data.push(if span > 0.0 { (v - lo[c]) / span } else { 0.0 });
        }
    }
    NormalizedFeatureMatrix::from_parts(rows, cols, data)
}

/// Log-determinant of the Gram matrix of the subset's feature rows.
///
/// With more rows than non-constant feature columns the Gram matrix is always
/// singular; the determinant of the `d x d` scatter matrix `XᵀX` is used
/// instead. It is the product of the Gram matrix's non-zero eigenvalues.
///
/// Returns `f64::NEG_INFINITY` when the matrix is singular to working
/// precision, which includes subsets with repeated feature rows.
pub fn log_geometric_diversity(f: &NormalizedFeatureMatrix, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_ids(subset, f.n_inputs())?;
    Ok(log_gd_unchecked(f, subset))
}

pub(crate) fn log_gd_unchecked(f: &NormalizedFeatureMatrix, subset: &[usize]) -> f64 {
    let cols = f.active_columns();
    let k = subset.len();
    let d = cols.len();
    if d == 0 {
        return f64::NEG_INFINITY;
    }
    let mut gram;
    let size;
    if k <= d {
        size = k;
        gram = vec![0.0; k * k];
        for a in 0..k {
            let ra = f.row(subset[a]);
            for b in 0..=a {
                let rb = f.row(subset[b]);
                let dot: f64 = cols.iter().map(|&c| ra[c] * rb[c]).sum();
                gram[a * k + b] = dot;
            }
        }
    } else {
        size = d;
        gram = vec![0.0; d * d];
        let mut buf = vec![0.0; d];
        for &i in subset {
            let row = f.row(i);
            for (slot, &c) in buf.iter_mut().zip(cols) {
                *slot = row[c];
            }
            for a in 0..d {
                let va = buf[a];
                if va == 0.0 {
                    continue;
                }
                for b in 0..=a {
                    gram[a * d + b] += va * buf[b];
                }
            }
        }
    }
    cholesky_log_det(&mut gram, size)
}

/// In-place Cholesky on the lower triangle of a symmetric `n x n` matrix.
fn cholesky_log_det(a: &mut [f64], n: usize) -> f64 {
    let mut log_det = 0.0;
    for j in 0..n {
        let mut pivot = a[j * n + j];
        for k in 0..j {
            pivot -= a[j * n + k] * a[j * n + k];
        }
        if !(pivot >= PIVOT_FLOOR) {
            return f64::NEG_INFINITY;
        }
        let diag = pivot.sqrt();
        a[j * n + j] = diag;
        log_det += pivot.ln();
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / diag;
        }
    }
    log_det
}

/// Change in log geometric diversity caused by input `member`:
/// `logGD(S) - logGD(S \ {member})`. Lower means more redundant.
///
/// If dropping `member` turns a singular subset into a regular one the
/// contribution is `-inf`. If the subset stays singular either way it is 0.
pub fn gd_contribution(
    f: &NormalizedFeatureMatrix,
    subset: &[usize],
    member: usize,
) -> Result<f64> {
    check_ids(subset, f.n_inputs())?;
    if member >= f.n_inputs() {
        return Err(Error::Index {
            id: member,
            len: f.n_inputs(),
        });
    }
    let pos = subset
        .iter()
        .position(|&i| i == member)
        .ok_or(Error::Membership(member))?;
    if subset.len() < 2 {
        return Err(Error::EmptySubset);
    }
    let full = log_gd_unchecked(f, subset);
    Ok(contribution_given_full(f, subset, pos, full))
}

pub(crate) fn contribution_given_full(
    f: &NormalizedFeatureMatrix,
    subset: &[usize],
    pos: usize,
    full: f64,
) -> f64 {
    let rest: Vec<usize> = subset
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != pos)
        .map(|(_, &i)| i)
        .collect();
    let without = log_gd_unchecked(f, &rest);
    if full == f64::NEG_INFINITY && without == f64::NEG_INFINITY {
        0.0
    } else {
        full - without
    }
}

/// [`gd_contribution`] for every member of the subset, in subset order.
///
/// Uses the Cholesky factor of the full matrix: in the Gram regime the
/// contribution of row `i` is `-ln((G^-1)_ii)`, in the scatter regime it is
/// `-ln(1 - x_i^T A^-1 x_i)`. Members whose removal brings the matrix close to
/// singular, and singular subsets, fall back to direct evaluation.
pub fn gd_contributions(f: &NormalizedFeatureMatrix, subset: &[usize]) -> Result<Vec<f64>> {
    if subset.len() < 2 {
        return Err(Error::EmptySubset);
    }
    check_ids(subset, f.n_inputs())?;
    Ok(contributions_unchecked(f, subset))
}

pub(crate) fn contributions_unchecked(f: &NormalizedFeatureMatrix, subset: &[usize]) -> Vec<f64> {
    let cols = f.active_columns();
    let (k, d) = (subset.len(), cols.len());
    let size = k.min(d);
    let full = log_gd_unchecked(f, subset);
    let brute = |pos: usize| contribution_given_full(f, subset, pos, full);
    if !full.is_finite() || size == 0 {
        return (0..k).map(brute).collect();
    }
    // rebuild and factor the same matrix log_gd_unchecked used
    let mut a = vec![0.0; size * size];
    let row_of = |i: usize| -> Vec<f64> { cols.iter().map(|&c| f.row(i)[c]).collect() };
    let rows: Vec<Vec<f64>> = subset.iter().map(|&i| row_of(i)).collect();
    if k <= d {
        for x in 0..k {
            for y in 0..=x {
                a[x * k + y] = rows[x].iter().zip(&rows[y]).map(|(p, q)| p * q).sum();
            }
        }
    } else {
        for r in &rows {
            for x in 0..d {
                for y in 0..=x {
                    a[x * d + y] += r[x] * r[y];
                }
            }
        }
    }
    if !cholesky_log_det(&mut a, size).is_finite() {
        return (0..k).map(brute).collect();
    }
    let lower = |x: usize, y: usize| a[x * size + y];
    // forward substitution L z = b
    let solve = |b: &mut [f64]| {
        for x in 0..size {
            let mut s = b[x];
            for y in 0..x {
                s -= lower(x, y) * b[y];
            }
            b[x] = s / lower(x, x);
        }
    };
    const MIN_REMAINDER: f64 = 1e-6;
    if k <= d {
        // (G^-1)_ii = |L^-1 e_i|^2
        (0..k)
            .map(|pos| {
                let mut e = vec![0.0; k];
                e[pos] = 1.0;
                solve(&mut e);
                let inv_diag: f64 = e.iter().map(|v| v * v).sum();
                let schur = 1.0 / inv_diag;
                if schur < MIN_REMAINDER {
                    brute(pos)
                } else {
                    schur.ln()
                }
            })
            .collect()
    } else {
        rows.iter()
            .enumerate()
            .map(|(pos, r)| {
                let mut z = r.clone();
                solve(&mut z);
                let remainder = 1.0 - z.iter().map(|v| v * v).sum::<f64>();
                if remainder < MIN_REMAINDER {
                    brute(pos)
                } else {
                    -remainder.ln()
                }
            })
            .collect()
    }
}

/// Both objectives for one subset.
pub fn evaluate_fitness(
    p: &ProbabilityMatrix,
    f: &NormalizedFeatureMatrix,
    subset: &[usize],
) -> Result<FitnessPair> {
    if p.n_inputs() != f.n_inputs() {
        return Err(Error::Shape(format!(
            "{} probability rows but {} feature rows",
            p.n_inputs(),
            f.n_inputs()
        )));
    }
    Ok(FitnessPair::new(
        subset_gini(p, subset)?,
        log_geometric_diversity(f, subset)?,
    ))
}

/// Probabilities and normalized features of one dataset with per-input Gini
/// scores cached. This is what the search and the baselines operate on.
#[derive(Debug, Clone)]
pub struct SelectionProblem {
    probabilities: ProbabilityMatrix,
    features: NormalizedFeatureMatrix,
    gini: Vec<f64>,
}

impl SelectionProblem {
    pub fn new(probabilities: ProbabilityMatrix, features: &FeatureMatrix) -> Result<Self> {
        Self::with_normalized(probabilities, normalize_features(features))
    }

    pub fn with_normalized(
        probabilities: ProbabilityMatrix,
        features: NormalizedFeatureMatrix,
    ) -> Result<Self> {
        if probabilities.n_inputs() != features.n_inputs() {
            return Err(Error::Shape(format!(
                "{} probability rows but {} feature rows",
                probabilities.n_inputs(),
                features.n_inputs()
            )));
        }
        let gini = gini_scores(&probabilities);
        Ok(Self {
            probabilities,
            features,
            gini,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.gini.len()
    }

    pub fn probabilities(&self) -> &ProbabilityMatrix {
        &self.probabilities
    }

    pub fn features(&self) -> &NormalizedFeatureMatrix {
        &self.features
    }

    pub fn gini(&self, id: usize) -> f64 {
        self.gini[id]
    }

    pub fn gini_all(&self) -> &[f64] {
        &self.gini
    }

    /// Fitness of a subset whose ids are known to be valid and distinct.
    pub fn fitness(&self, subset: &[usize]) -> FitnessPair {
        let gini = subset.iter().map(|&i| self.gini[i]).sum::<f64>() / subset.len() as f64;
        FitnessPair::new(gini, log_gd_unchecked(&self.features, subset))
    }
}
