//! Customized NSGA-II search over fixed-size input subsets.
//!
//! Each generation pairs parents by binary tournament, applies the
//! Gini-sorted crossover and the diversity-aware mutation, scores the
//! offspring, and keeps the best `population_size` of parents and offspring by
//! Pareto rank and crowding distance. A non-dominated archive is refreshed
//! after every generation and the final subset is its knee point.
//!
//! All randomness comes from one ChaCha8 stream seeded from
//! [`SearchParams::seed`]. Fitness evaluation consumes no randomness and may
//! run on any number of threads without changing the result.

mod archive;
mod knee;
mod nsga;
mod operators;

use log::debug;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{RunData, RunManifest, SelectionResult};
use crate::error::{Error, Result};
use crate::fitness::{FitnessPair, SelectionProblem};

pub use archive::ParetoArchive;
pub use knee::knee_point;
pub use nsga::{crowding_distance, non_dominated_sort, survive, tournament_select, Ranking};
pub use operators::{crossover, crossover_at, mutate, mutation_counts, repair_duplicates, sort_by_gini};

/// One candidate subset with its cached objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    genes: Vec<usize>,
    key: Vec<usize>,
    pub fitness: FitnessPair,
}

impl Individual {
    /// Scores `genes`, which must be distinct valid ids.
    pub fn new(genes: Vec<usize>, problem: &SelectionProblem) -> Self {
        let fitness = problem.fitness(&genes);
        Self::with_fitness(genes, fitness)
    }

    pub(crate) fn with_fitness(genes: Vec<usize>, fitness: FitnessPair) -> Self {
        let mut key = genes.clone();
        key.sort_unstable();
        Self {
            genes,
            key,
            fitness,
        }
    }

    /// Genes in stored order.
    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    /// Genes sorted ascending; identifies the subset and breaks ties.
    pub fn key(&self) -> &[usize] {
        &self.key
    }
}

/// Operator configuration. `Full` is the complete method; the others swap one
/// operator for a simpler one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    SimpleCrossover,
    SimpleMutation,
    GiniOnlyMutation,
    GdOnlyMutation,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::SimpleCrossover,
        Variant::SimpleMutation,
        Variant::GiniOnlyMutation,
        Variant::GdOnlyMutation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::SimpleCrossover => "simple_crossover",
            Variant::SimpleMutation => "simple_mutation",
            Variant::GiniOnlyMutation => "gini_only_mutation",
            Variant::GdOnlyMutation => "gd_only_mutation",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// Preset population size and generation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// 700 individuals for 300 generations.
    #[default]
    Paper,
    /// 100 individuals for 50 generations.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::Config(format!("unknown profile {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub budget: usize,
    pub seed: u64,
    pub variant: Variant,
}

impl SearchParams {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            ..Self::for_profile(Profile::Paper, budget)
        }
    }

    pub fn for_profile(profile: Profile, budget: usize) -> Self {
        let (population_size, generations) = match profile {
            Profile::Paper => (700, 300),
            Profile::Desk => (100, 50),
        };
        Self {
            population_size,
            generations,
            crossover_rate: 0.75,
            mutation_rate: 0.70,
            tournament_size: 2,
            budget,
            seed: 0,
            variant: Variant::Full,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} {rate} is outside [0, 1]")));
            }
        }
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.tournament_size < 1 {
            return Err(Error::Config("tournament_size must be at least 1".into()));
        }
        if self.budget < 2 || self.budget > n {
            return Err(Error::Budget {
                budget: self.budget,
                n,
            });
        }
        Ok(())
    }
}

/// Summary of the population after one generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_gini: f64,
    pub best_log_gd: f64,
    pub first_front: usize,
    pub archive_size: usize,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub archive: ParetoArchive,
    pub history: Vec<GenerationStats>,
}

/// Scores gene vectors in parallel; output order follows input order.
pub fn evaluate_all(problem: &SelectionProblem, genes: Vec<Vec<usize>>) -> Vec<Individual> {
    genes
        .into_par_iter()
        .map(|g| Individual::new(g, problem))
        .collect()
}

/// `population_size` uniform random subsets of size `budget`.
pub fn init_population<R: Rng + ?Sized>(
    problem: &SelectionProblem,
    params: &SearchParams,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    let n = problem.n_inputs();
    if params.budget > n {
        return Err(Error::Budget {
            budget: params.budget,
            n,
        });
    }
    let genes: Vec<Vec<usize>> = (0..params.population_size)
        .map(|_| index::sample(rng, n, params.budget).into_vec())
        .collect();
    Ok(evaluate_all(problem, genes))
}

pub fn evolve(problem: &SelectionProblem, params: &SearchParams) -> Result<Evolution> {
    evolve_observed(problem, params, |_, _| {})
}

/// [`evolve`], calling `observe(generation, population)` after initialization
/// (generation 0) and after each generation's survival step.
pub fn evolve_observed<F>(
    problem: &SelectionProblem,
    params: &SearchParams,
    mut observe: F,
) -> Result<Evolution>
where
    F: FnMut(usize, &[Individual]),
{
    params.validate(problem.n_inputs())?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut population = init_population(problem, params, &mut rng)?;
    let mut archive = ParetoArchive::default();
    archive.update(&population);
    observe(0, &population);
    let mut history = vec![stats(0, &population, &archive)];

    for generation in 1..=params.generations {
        let ranking = Ranking::of(&population);
        let mut offspring: Vec<Vec<usize>> = Vec::with_capacity(params.population_size + 1);
        while offspring.len() < params.population_size {
            let a = tournament_select(&population, &ranking, params.tournament_size, &mut rng);
            let b = tournament_select(&population, &ranking, params.tournament_size, &mut rng);
            let (p1, p2) = (population[a].genes(), population[b].genes());
            let (mut c1, mut c2) = if rng.random_bool(params.crossover_rate) {
                crossover(problem, p1, p2, params.variant, &mut rng)
            } else {
                (p1.to_vec(), p2.to_vec())
            };
            for child in [&mut c1, &mut c2] {
                if rng.random_bool(params.mutation_rate) {
                    mutate(problem, child, params.variant, &mut rng);
                }
            }
            offspring.push(c1);
            offspring.push(c2);
        }
        offspring.truncate(params.population_size);

        let mut pool = population;
        pool.extend(evaluate_all(problem, offspring));
        population = survive(pool, params.population_size);
        archive.update(&population);
        observe(generation, &population);

        let s = stats(generation, &population, &archive);
        debug!(
            "generation {}: best gini {:.4}, best log GD {:.4}, first front {}, archive {}",
            s.generation, s.best_gini, s.best_log_gd, s.first_front, s.archive_size
        );
        history.push(s);
    }
    Ok(Evolution { archive, history })
}

fn stats(generation: usize, population: &[Individual], archive: &ParetoArchive) -> GenerationStats {
    let fitness: Vec<FitnessPair> = population.iter().map(|i| i.fitness).collect();
    GenerationStats {
        generation,
        best_gini: fitness.iter().map(|f| f.gini).fold(f64::NEG_INFINITY, f64::max),
        best_log_gd: fitness.iter().map(|f| f.log_gd).fold(f64::NEG_INFINITY, f64::max),
        first_front: non_dominated_sort(&fitness).first().map_or(0, Vec::len),
        archive_size: archive.len(),
    }
}

/// Method tag written into results: `deepgd`, or `deepgd:<variant>` for ablations.
pub fn method_tag(variant: Variant) -> String {
    match variant {
        Variant::Full => "deepgd".into(),
        v => format!("deepgd:{}", v.name()),
    }
}

/// Evolves, then returns the knee point of the archive with ids sorted ascending.
pub fn select(problem: &SelectionProblem, params: &SearchParams) -> Result<SelectionResult> {
    let evolution = evolve(problem, params)?;
    let knee = knee_point(evolution.archive.members())?;
    Ok(SelectionResult {
        method: method_tag(params.variant),
        budget: params.budget,
        subset: knee.key().to_vec(),
        fitness: Some(knee.fitness),
        seed: Some(params.seed),
        params: Some(params.clone()),
    })
}

/// Loads the manifest's inputs and runs the search with its parameters.
pub fn run_deepgd(manifest: &RunManifest) -> Result<SelectionResult> {
    let params = manifest.search_params();
    let data = RunData::load(manifest.clone())?;
    let problem = SelectionProblem::new(data.probabilities, &data.features)?;
    select(&problem, &params)
}
