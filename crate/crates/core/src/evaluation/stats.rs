//! Repeated-run summaries and the paired signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Spread of a metric over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
}

pub fn stability_stats(values: &[f64]) -> Result<StabilityStats> {
    if values.len() < 2 {
        return Err(Error::Value(format!(
            "stability statistics need at least 2 runs, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Value(format!("non-finite run value {v}")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let var = if min == max {
        0.0
    } else {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Ok(StabilityStats {
        // rounding can push the mean of a constant sequence off its value
        mean: mean.clamp(min, max),
        min,
        max,
        std: var.sqrt(),
    })
}

/// Alternative hypothesis about the differences `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `a` tends to be larger than `b`.
    Greater,
    /// `a` tends to be smaller than `b`.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

pub const MIN_NONZERO_PAIRS: usize = 5;
pub const EXACT_LIMIT: usize = 20;

/// Wilcoxon signed-rank test on paired observations.
///
/// Zero differences are dropped and tied magnitudes receive midranks. Up to
/// [`EXACT_LIMIT`] pairs the null distribution is enumerated exactly; beyond
/// that a normal approximation with tie and continuity correction is used.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)], alternative: Alternative) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs.iter().map(|&(a, b)| a - b).filter(|&d| d != 0.0).collect();
    if let Some(d) = diffs.iter().find(|d| !d.is_finite()) {
        return Err(Error::Value(format!("non-finite paired difference {d}")));
    }
    if diffs.len() < MIN_NONZERO_PAIRS {
        return Err(Error::SampleSize {
            required: MIN_NONZERO_PAIRS,
            actual: diffs.len(),
        });
    }
    let (doubled, ties) = doubled_midranks(&diffs);
    let w2: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = diffs.len();
    let exact = n <= EXACT_LIMIT;
    let p_value = if exact {
        exact_p(&doubled, w2, alternative)
    } else {
        normal_p(n, &ties, w2 as f64 / 2.0, alternative)
    };
    Ok(WilcoxonResult {
        statistic: w2 as f64 / 2.0,
        p_value,
        n,
        exact,
    })
}

/// Twice the midrank of each |d| (always an integer) and the sizes of tie groups.
fn doubled_midranks(diffs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut doubled = vec![0; diffs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // ranks start+1 ..= end, their mean doubled
        let r2 = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            doubled[i] = r2;
        }
        ties.push(end - start);
        start = end;
    }
    (doubled, ties)
}

/// Exact p-value from the distribution of the doubled positive rank sum over
/// all 2^n equally likely sign assignments.
fn exact_p(doubled: &[u64], observed: u64, alternative: Alternative) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled.len() as i32);
    let upper = counts[observed as usize..].iter().sum::<f64>() / all;
    let lower = counts[..=observed as usize].iter().sum::<f64>() / all;
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

fn normal_p(n: usize, ties: &[usize], w: f64, alternative: Alternative) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let z = Normal::standard();
    match alternative {
        Alternative::Greater => z.sf((w - mean - 0.5) / sd),
        Alternative::Less => z.cdf((w - mean + 0.5) / sd),
        Alternative::TwoSided => {
            let dev = ((w - mean).abs() - 0.5).max(0.0);
            (2.0 * z.sf(dev / sd)).min(1.0)
        }
    }
}
