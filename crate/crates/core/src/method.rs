//! Uniform entry point over the search and the baselines.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{gini_top_k, maxp_top_k, random_select, BaselineMethod};
use crate::data::SelectionResult;
use crate::error::{Error, Result};
use crate::fitness::SelectionProblem;
use crate::search::{method_tag, select, SearchParams, Variant};

/// A selection method: the evolutionary search with some operator variant,
/// or one of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DeepGd(Variant),
    Baseline(BaselineMethod),
}

impl Method {
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            Method::Baseline(BaselineMethod::Gini) | Method::Baseline(BaselineMethod::Maxp)
        )
    }

    /// Runs the method. Baselines use only `budget` and `seed` from `params`.
    pub fn run(self, problem: &SelectionProblem, params: &SearchParams) -> Result<SelectionResult> {
        let mut result = match self {
            Method::DeepGd(variant) => {
                let params = SearchParams {
                    variant,
                    ..params.clone()
                };
                return select(problem, &params);
            }
            Method::Baseline(BaselineMethod::Random) => {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                let mut r = random_select(problem.n_inputs(), params.budget, &mut rng)?;
                r.seed = Some(params.seed);
                r
            }
            Method::Baseline(BaselineMethod::Gini) => gini_top_k(problem.probabilities(), params.budget)?,
            Method::Baseline(BaselineMethod::Maxp) => maxp_top_k(problem.probabilities(), params.budget)?,
        };
        result.fitness = Some(problem.fitness(&result.subset));
        Ok(result)
    }
}

impl Default for Method {
    fn default() -> Self {
        Method::DeepGd(Variant::Full)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::DeepGd(v) => f.write_str(&method_tag(*v)),
            Method::Baseline(b) => f.write_str(b.tag()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `deepgd`, `deepgd:<variant>`, `random`, `gini` (or `deepgini`), `maxp`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "deepgd" {
            return Ok(Method::DeepGd(Variant::Full));
        }
        if let Some(v) = s.strip_prefix("deepgd:") {
            return Ok(Method::DeepGd(v.parse()?));
        }
        s.parse()
            .map(Method::Baseline)
            .map_err(|_| Error::Config(format!("unknown method {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureMatrix, ProbabilityMatrix};

    #[test]
    fn names_round_trip() {
        for m in [
            "deepgd",
            "deepgd:simple_crossover",
            "deepgd:gd_only_mutation",
            "random",
            "gini",
            "maxp",
        ] {
            assert_eq!(m.parse::<Method>().unwrap().to_string(), m);
        }
        assert_eq!("deepgd:full".parse::<Method>().unwrap().to_string(), "deepgd");
        assert_eq!("deepgini".parse::<Method>().unwrap().to_string(), "gini");
        assert!("deepgd:nope".parse::<Method>().is_err());
        assert!("kmeans".parse::<Method>().is_err());
    }

    #[test]
    fn baselines_report_fitness() {
        let p = ProbabilityMatrix::from_rows(&[
            vec![0.9, 0.1],
            vec![0.5, 0.5],
            vec![0.7, 0.3],
            vec![1.0, 0.0],
        ])
        .unwrap();
        let f = FeatureMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.5, 0.2]]).unwrap();
        let problem = SelectionProblem::new(p, &f).unwrap();
        let params = SearchParams::new(2, 3);
        for m in ["random", "gini", "maxp"] {
            let r = m.parse::<Method>().unwrap().run(&problem, &params).unwrap();
            assert_eq!(r.subset.len(), 2);
            assert_eq!(r.fitness, Some(problem.fitness(&r.subset)));
            assert_eq!(r.method, m);
        }
        let r = Method::Baseline(BaselineMethod::Random).run(&problem, &params).unwrap();
        assert_eq!(r.seed, Some(3));
    }
}
