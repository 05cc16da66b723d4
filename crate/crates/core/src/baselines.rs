//! Black-box comparison selectors: random sampling, Gini top-k and MaxP top-k.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ProbabilityMatrix, SelectionResult};
use crate::error::{Error, Result};
use crate::fitness::gini_scores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Random,
    Gini,
    Maxp,
}

impl BaselineMethod {
    pub fn tag(self) -> &'static str {
        match self {
            BaselineMethod::Random => "random",
            BaselineMethod::Gini => "gini",
            BaselineMethod::Maxp => "maxp",
        }
    }
}

impl std::str::FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(BaselineMethod::Random),
            "gini" | "deepgini" => Ok(BaselineMethod::Gini),
            "maxp" => Ok(BaselineMethod::Maxp),
            _ => Err(Error::Config(format!("unknown baseline {s:?}"))),
        }
    }
}

fn check_budget(budget: usize, n: usize) -> Result<()> {
    if budget == 0 || budget > n {
        Err(Error::Budget { budget, n })
    } else {
        Ok(())
    }
}

/// Uniform `budget`-subset of `0..n` without replacement, ids ascending.
pub fn random_select<R: Rng + ?Sized>(n: usize, budget: usize, rng: &mut R) -> Result<SelectionResult> {
    check_budget(budget, n)?;
    let mut ids = index::sample(rng, n, budget).into_vec();
    ids.sort_unstable();
    Ok(SelectionResult::new(BaselineMethod::Random.tag(), ids))
}

/// The `budget` ids with the largest score, ties by ascending id. The
/// returned order is the ranking order.
pub fn top_k(scores: &[f64], budget: usize) -> Result<Vec<usize>> {
    check_budget(budget, scores.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(budget);
    Ok(order)
}

/// Inputs with the highest Gini score.
pub fn gini_top_k(p: &ProbabilityMatrix, budget: usize) -> Result<SelectionResult> {
    let ids = top_k(&gini_scores(p), budget)?;
    Ok(SelectionResult::new(BaselineMethod::Gini.tag(), ids))
}

/// `1 - max_k p_k` per input.
pub fn maxp_scores(p: &ProbabilityMatrix) -> Vec<f64> {
    (0..p.n_inputs())
        .map(|i| 1.0 - p.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Inputs whose most likely class has the lowest probability.
pub fn maxp_top_k(p: &ProbabilityMatrix, budget: usize) -> Result<SelectionResult> {
    let ids = top_k(&maxp_scores(p), budget)?;
    Ok(SelectionResult::new(BaselineMethod::Maxp.tag(), ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn pm(rows: &[Vec<f64>]) -> ProbabilityMatrix {
        ProbabilityMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn random_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_select(5, 5, &mut rng).unwrap().subset, vec![0, 1, 2, 3, 4]);
        let a = random_select(100, 10, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = random_select(100, 10, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert!(random_select(3, 4, &mut rng).is_err());
        assert!(random_select(3, 0, &mut rng).is_err());
    }

    #[test]
    fn random_subsets_are_uniform() {
        // n = 4, beta = 2: six subsets, each expected 1/6 of the time
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            *counts.entry(random_select(4, 2, &mut rng).unwrap().subset).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (subset, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.02, "{subset:?}: {freq}");
        }
    }

    #[test]
    fn random_marginals_pass_chi_square() {
        // each of 10 ids is included with probability 3/10
        let (n, beta, draws) = (10, 3, 20_000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = vec![0usize; n];
        for _ in 0..draws {
            for id in random_select(n, beta, &mut rng).unwrap().subset {
                hits[id] += 1;
            }
        }
        let expected = draws as f64 * beta as f64 / n as f64;
        let chi2: f64 = hits
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn gini_examples() {
        let p = pm(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![0.8, 0.2]]);
        assert_eq!(gini_top_k(&p, 1).unwrap().subset, vec![1]);
        assert_eq!(gini_top_k(&p, 3).unwrap().subset.len(), 3);
        let same = pm(&vec![vec![0.7, 0.3]; 4]);
        assert_eq!(gini_top_k(&same, 2).unwrap().subset, vec![0, 1]);
        assert!(gini_top_k(&p, 4).is_err());
    }

    #[test]
    fn maxp_examples() {
        let p = pm(&[vec![1.0, 0.0], vec![0.6, 0.4]]);
        assert_eq!(maxp_top_k(&p, 1).unwrap().subset, vec![1]);
        let onehot = pm(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(maxp_top_k(&onehot, 2).unwrap().subset, vec![0, 1]);
    }

    proptest! {
        #[test]
        fn binary_gini_and_maxp_agree(tops in proptest::collection::vec(0.0f64..1.0, 1..40), k in 1usize..40) {
            let rows: Vec<Vec<f64>> = tops.iter().map(|&t| vec![t, 1.0 - t]).collect();
            let p = pm(&rows);
            let k = k.min(rows.len());
            prop_assert_eq!(gini_top_k(&p, k).unwrap().subset, maxp_top_k(&p, k).unwrap().subset);
        }

        #[test]
        fn top_k_follows_scores(scores in proptest::collection::vec(0u8..5, 1..30), k in 1usize..30) {
            let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
            let k = k.min(s.len());
            let ids = top_k(&s, k).unwrap();
            let worst_in = ids.iter().map(|&i| s[i]).fold(f64::INFINITY, f64::min);
            for (i, &v) in s.iter().enumerate() {
                if !ids.contains(&i) {
                    prop_assert!(v <= worst_in);
                }
            }
        }
    }
}
