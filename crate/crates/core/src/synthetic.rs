//! Planted-fault benchmark generator.
//!
//! Inputs come from Gaussian class blobs in feature space. A fixed share of
//! them is mispredicted, and the mispredicted inputs are grouped into faults:
//! tight sub-blobs sitting between an actual class and the class the model
//! confuses it with. Correctly predicted inputs stay close to their class
//! centre and are mostly confident. Probability rows are built from a
//! per-input uncertainty level. Larger faults are more uncertain than small
//! ones, and all mispredicted inputs are shifted up by a common offset tuned
//! so the Pearson correlation between Gini score and misprediction hits a
//! requested target.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{
    misprediction_mask, FaultPartition, FeatureMatrix, GroundTruthLabels, ProbabilityMatrix,
    RunManifest,
};
use crate::error::{Error, Result};
use crate::fitness::gini_scores;
use crate::io;

/// Generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub faults: usize,
    pub mispredict_rate: f64,
    pub seed: u64,
    /// Target Pearson correlation between Gini score and misprediction.
    pub correlation: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            m: 10,
            d: 32,
            faults: 20,
            mispredict_rate: 0.15,
            seed: 0,
            correlation: 0.5,
        }
    }
}

impl SyntheticConfig {
    pub fn mispredicted(&self) -> usize {
        (self.n as f64 * self.mispredict_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.faults == 0 {
            return Err(Error::Value("at least one fault is required".into()));
        }
        if !(self.mispredict_rate > 0.0 && self.mispredict_rate < 1.0) {
            return Err(Error::Value(format!(
                "mispredict rate must lie in (0, 1), got {}",
                self.mispredict_rate
            )));
        }
        if self.m < 2 || self.d == 0 {
            return Err(Error::Value(format!(
                "need at least 2 classes and 1 feature, got m = {}, d = {}",
                self.m, self.d
            )));
        }
        let k = self.mispredicted();
        if k < 2 * self.faults || k >= self.n {
            return Err(Error::Value(format!(
                "{k} mispredicted inputs cannot hold {} faults of at least 2 inputs among {} inputs",
                self.faults, self.n
            )));
        }
        if !(self.correlation > 0.0 && self.correlation < 1.0) {
            return Err(Error::Value(format!(
                "correlation target must lie in (0, 1), got {}",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// Generated benchmark.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub probabilities: ProbabilityMatrix,
    pub features: FeatureMatrix,
    pub labels: GroundTruthLabels,
    pub clusters: FaultPartition,
    /// Realised Gini/misprediction correlation.
    pub correlation: f64,
}

const CENTER_SCALE: f64 = 1.0;
const CLASS_SPREAD: f64 = 0.3;
const FAULT_SPREAD: f64 = 0.2;
const FAULT_JITTER: f64 = 0.5;
const MAX_UNCERTAINTY: f64 = 0.97;

/// One input's ingredients for its probability row.
struct RowSeed {
    predicted: usize,
    actual: usize,
    base: f64,
    /// Random distribution over classes, largest entry at `predicted`.
    spread: Vec<f64>,
}

impl RowSeed {
    fn row(&self, u: f64) -> Vec<f64> {
        let u = u.clamp(0.0, MAX_UNCERTAINTY);
        let mut row: Vec<f64> = self.spread.iter().map(|v| u * v).collect();
        row[self.predicted] += 1.0 - u;
        row
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let SyntheticConfig { n, m, d, faults, .. } = *config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gauss = |rng: &mut ChaCha8Rng, s: f64| s * rng.sample::<f64, _>(StandardNormal);

    let centers: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| gauss(&mut rng, CENTER_SCALE)).collect())
        .collect();

    // fault sizes: two each, the rest shared by log-normal weights
    let k = config.mispredicted();
    let weight_dist = LogNormal::new(0.0, 0.75).expect("valid log-normal");
    let weights: Vec<f64> = (0..faults).map(|_| weight_dist.sample(&mut rng)).collect();
    let sizes = apportion(k - 2 * faults, &weights)
        .into_iter()
        .map(|s| s + 2)
        .collect::<Vec<_>>();

    struct Fault {
        actual: usize,
        predicted: usize,
        center: Vec<f64>,
        offset: f64,
    }
    let fault_specs: Vec<Fault> = (0..faults)
        .map(|f| {
            let actual = rng.random_range(0..m);
            let mut predicted = rng.random_range(0..m - 1);
            if predicted >= actual {
                predicted += 1;
            }
            let lambda = rng.random_range(0.3..0.7);
            let center = (0..d)
                .map(|j| {
                    centers[actual][j]
                        + lambda * (centers[predicted][j] - centers[actual][j])
                        + gauss(&mut rng, FAULT_JITTER)
                })
                .collect();
            Fault {
                actual,
                predicted,
                center,
                offset: 0.15 * weights[f].ln().tanh(),
            }
        })
        .collect();

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut fault_of = vec![None; n];
    let mut cursor = 0;
    for (f, &size) in sizes.iter().enumerate() {
        for &id in &ids[cursor..cursor + size] {
            fault_of[id] = Some(f);
        }
        cursor += size;
    }

    let correct_u = Beta::new(1.0, 12.0).expect("valid beta");
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut seeds = Vec::with_capacity(n);
    for fault in &fault_of {
        let (actual, predicted, base) = match fault {
            Some(f) => {
                let spec = &fault_specs[*f];
                features.extend(spec.center.iter().map(|c| c + gauss(&mut rng, FAULT_SPREAD)));
                let base = spec.offset + gauss(&mut rng, 0.08);
                (spec.actual, spec.predicted, base)
            }
            None => {
                let y = rng.random_range(0..m);
                features.extend(centers[y].iter().map(|c| c + gauss(&mut rng, CLASS_SPREAD)));
                (y, y, correct_u.sample(&mut rng))
            }
        };
        let mut spread: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = spread.iter().sum();
        spread.iter_mut().for_each(|v| *v /= total);
        place_largest(&mut spread, predicted);
        if actual != predicted {
            place_runner_up(&mut spread, actual);
        }
        labels.push(actual);
        seeds.push(RowSeed {
            predicted,
            actual,
            base,
            spread,
        });
    }

    let mask: Vec<bool> = seeds.iter().map(|s| s.actual != s.predicted).collect();
    let build = |shift: f64| -> Result<ProbabilityMatrix> {
        let rows: Vec<Vec<f64>> = seeds
            .iter()
            .map(|s| {
                if s.actual != s.predicted {
                    s.row(s.base + shift)
                } else {
                    s.row(s.base)
                }
            })
            .collect();
        ProbabilityMatrix::from_rows(&rows)
    };
    let correlation_at = |shift: f64| -> Result<f64> {
        Ok(pearson(&gini_scores(&build(shift)?), &mask))
    };

    let (mut lo, mut hi) = (-1.0, 1.5);
    let (c_lo, c_hi) = (correlation_at(lo)?, correlation_at(hi)?);
    let shift = if c_lo >= config.correlation {
        lo
    } else if c_hi <= config.correlation {
        hi
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if correlation_at(mid)? < config.correlation {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let probabilities = build(shift)?;
    let correlation = pearson(&gini_scores(&probabilities), &mask);

    let labels = GroundTruthLabels::new(labels, m)?;
    debug_assert_eq!(misprediction_mask(&probabilities, &labels)?, mask);
    let pairs: Vec<(usize, i64)> = fault_of
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.map(|f| (i, f as i64)))
        .collect();
    Ok(SyntheticData {
        probabilities,
        features: FeatureMatrix::new(n, d, features)?,
        labels,
        clusters: FaultPartition::from_pairs(&pairs, None)?,
        correlation,
    })
}

/// Largest-remainder split of `total` proportional to `weights`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

fn place_largest(v: &mut [f64], at: usize) {
    let top = crate::data::argmax(v);
    v.swap(top, at);
}

/// Moves the second largest entry to `at`, keeping the largest where it is.
fn place_runner_up(v: &mut [f64], at: usize) {
    let top = crate::data::argmax(v);
    let second = (0..v.len())
        .filter(|&i| i != top)
        .max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a)))
        .expect("at least two classes");
    v.swap(second, at);
}

/// Pearson correlation of a real variable with a binary one.
pub fn pearson(x: &[f64], flag: &[bool]) -> f64 {
    let n = x.len() as f64;
    let y: Vec<f64> = flag.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

pub const PROBABILITIES_FILE: &str = "probabilities.dsm";
pub const FEATURES_FILE: &str = "features.dsm";
pub const LABELS_FILE: &str = "labels.csv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

impl SyntheticData {
    /// Writes matrices, labels, clusters and a manifest into `dir`.
    pub fn write(&self, dir: &Path, budget: usize, seed: u64) -> Result<RunManifest> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = &self.probabilities;
        let f = &self.features;
        io::write_matrix(&dir.join(PROBABILITIES_FILE), p.n_inputs(), p.n_classes(), p.as_slice())?;
        io::write_matrix(&dir.join(FEATURES_FILE), f.n_inputs(), f.n_features(), f.as_slice())?;
        let labels: Vec<(usize, i64)> = self
            .labels
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, y as i64))
            .collect();
        io::write_bytes(&dir.join(LABELS_FILE), io::format_id_values(&labels).as_bytes())?;
        let clusters: Vec<(usize, i64)> = self.clusters.iter().collect();
        io::write_bytes(&dir.join(CLUSTERS_FILE), io::format_id_values(&clusters).as_bytes())?;
        let manifest = RunManifest {
            probabilities: PROBABILITIES_FILE.into(),
            features: FEATURES_FILE.into(),
            labels: Some(LABELS_FILE.into()),
            clusters: Some(CLUSTERS_FILE.into()),
            budget,
            seed,
            method: "deepgd".into(),
            total_faults: Some(self.clusters.total_faults()),
            n: Some(p.n_inputs()),
            m: Some(p.n_classes()),
            d: Some(f.n_features()),
            profile: None,
            variant: None,
            base_dir: dir.to_path_buf(),
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        io::write_bytes(&dir.join(MANIFEST_FILE), json.as_bytes())?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RunData;

    fn small(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n: 400,
            m: 5,
            d: 8,
            faults: 6,
            mispredict_rate: 0.15,
            seed,
            correlation: 0.5,
        }
    }

    #[test]
    fn counts_match_the_request() {
        for seed in 0..4 {
            let cfg = small(seed);
            let data = generate(&cfg).unwrap();
            let mask = misprediction_mask(&data.probabilities, &data.labels).unwrap();
            assert_eq!(mask.iter().filter(|&&b| b).count(), 60);
            assert_eq!(data.clusters.total_faults(), 6);
            assert_eq!(data.clusters.len(), 60);
            data.clusters.check_against(&mask).unwrap();
        }
    }

    #[test]
    fn default_correlation_lands_in_the_medium_band() {
        for seed in 0..3 {
            let data = generate(&SyntheticConfig {
                seed,
                ..SyntheticConfig::default()
            })
            .unwrap();
            assert!(
                (0.4..=0.6).contains(&data.correlation),
                "seed {seed}: {}",
                data.correlation
            );
        }
    }

    #[test]
    fn correlation_knob_is_monotone() {
        let at = |c: f64| {
            generate(&SyntheticConfig {
                correlation: c,
                ..small(3)
            })
            .unwrap()
            .correlation
        };
        assert!(at(0.3) < at(0.5) && at(0.5) < at(0.7));
    }

    #[test]
    fn invalid_settings() {
        for cfg in [
            SyntheticConfig { faults: 0, ..small(0) },
            SyntheticConfig { mispredict_rate: 0.0, ..small(0) },
            SyntheticConfig { mispredict_rate: 1.0, ..small(0) },
            SyntheticConfig { faults: 40, ..small(0) },
            SyntheticConfig { m: 1, ..small(0) },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::Value(_))), "{cfg:?}");
        }
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1.0, 1.0, 2.0]).iter().sum::<usize>(), 10);
        assert_eq!(apportion(4, &[1.0, 1.0, 2.0]), vec![1, 1, 2]);
        assert_eq!(apportion(0, &[3.0]), vec![0]);
    }

    #[test]
    fn written_files_reload_and_repeat() {
        let data = generate(&small(9)).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        data.write(a.path(), 20, 9).unwrap();
        generate(&small(9)).unwrap().write(b.path(), 20, 9).unwrap();
        for file in [PROBABILITIES_FILE, FEATURES_FILE, LABELS_FILE, CLUSTERS_FILE, MANIFEST_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(file)).unwrap(),
                std::fs::read(b.path().join(file)).unwrap(),
                "{file}"
            );
        }
        let run = RunData::load(RunManifest::load(&a.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(run.probabilities, data.probabilities);
        assert_eq!(run.clusters.as_ref().unwrap(), &data.clusters);
    }
}
