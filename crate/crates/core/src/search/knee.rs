use super::nsga::floor_sentinels;
use super::Individual;
use crate::error::{Error, Result};

/// The front member closest to the ideal point.
///
/// Both objectives are min-max normalized over the front (a constant objective
/// maps to 0), which puts the ideal point formed by the per-objective maxima
/// at `(1, 1)`. Ties go to the lexicographically smaller gene set.
pub fn knee_point(front: &[Individual]) -> Result<&Individual> {
    if front.is_empty() {
        return Err(Error::EmptyFront);
    }
    let gini = normalize(front.iter().map(|i| i.fitness.gini).collect());
    let gd = normalize(floor_sentinels(
        front.iter().map(|i| i.fitness.log_gd).collect(),
    ));
    let distance = |k: usize| ((1.0 - gini[k]).powi(2) + (1.0 - gd[k]).powi(2)).sqrt();
    let best = (0..front.len())
        .min_by(|&a, &b| {
            distance(a)
                .total_cmp(&distance(b))
                .then_with(|| front[a].key().cmp(front[b].key()))
        })
        .expect("front is non-empty");
    Ok(&front[best])
}

fn normalize(values: Vec<f64>) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .into_iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}
