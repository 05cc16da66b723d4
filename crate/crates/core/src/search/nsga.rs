//! Non-dominated sorting, crowding distance and the selection operators built
//! on them.

use std::cmp::Ordering;

use rand::Rng;

use super::Individual;
use crate::fitness::FitnessPair;

/// Fast non-dominated sort. Returns fronts of indices into `fitness`, best
/// front first; indices inside a front are ascending.
pub fn non_dominated_sort(fitness: &[FitnessPair]) -> Vec<Vec<usize>> {
    let n = fitness.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            if fitness[p].dominates(&fitness[q]) {
                dominated[p].push(q);
                count[q] += 1;
            } else if fitness[q].dominates(&fitness[p]) {
                dominated[q].push(p);
                count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of every member of one front, in the order given.
///
/// Degenerate diversity values (`-inf`) are placed at the finite minimum of
/// the front so they sit on the boundary instead of poisoning the spans.
pub fn crowding_distance(front: &[FitnessPair]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives: [Vec<f64>; 2] = [
        front.iter().map(|f| f.gini).collect(),
        floor_sentinels(front.iter().map(|f| f.log_gd).collect()),
    ];
    for values in &objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let lo = values[order[0]];
        let hi = values[order[n - 1]];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            distance[w[1]] += (values[w[2]] - values[w[0]]) / span;
        }
    }
    distance
}

/// Replaces `-inf` entries by the smallest finite entry (0 if there is none).
pub(crate) fn floor_sentinels(mut values: Vec<f64>) -> Vec<f64> {
    let floor = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 0.0 };
    for v in values.iter_mut() {
        if !v.is_finite() {
            *v = floor;
        }
    }
    values
}

/// Pareto rank (0 = first front) and crowding distance of each individual.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

impl Ranking {
    pub fn of(population: &[Individual]) -> Self {
        let fitness: Vec<FitnessPair> = population.iter().map(|i| i.fitness).collect();
        let mut rank = vec![0; population.len()];
        let mut crowding = vec![0.0; population.len()];
        for (r, front) in non_dominated_sort(&fitness).iter().enumerate() {
            let pairs: Vec<FitnessPair> = front.iter().map(|&i| fitness[i]).collect();
            for (&i, d) in front.iter().zip(crowding_distance(&pairs)) {
                rank[i] = r;
                crowding[i] = d;
            }
        }
        Self { rank, crowding }
    }

    /// `Less` when `a` is preferred: lower rank, then larger crowding
    /// distance, then the lexicographically smaller gene set.
    pub fn compare(&self, population: &[Individual], a: usize, b: usize) -> Ordering {
        self.rank[a]
            .cmp(&self.rank[b])
            .then_with(|| self.crowding[b].total_cmp(&self.crowding[a]))
            .then_with(|| population[a].key().cmp(population[b].key()))
    }
}

/// Draws `size` members uniformly (with replacement) and returns the index of
/// the best one.
pub fn tournament_select<R: Rng + ?Sized>(
    population: &[Individual],
    ranking: &Ranking,
    size: usize,
    rng: &mut R,
) -> usize {
    assert!(!population.is_empty(), "tournament over an empty population");
    let mut best = rng.random_range(0..population.len());
    for _ in 1..size.max(1) {
        let challenger = rng.random_range(0..population.len());
        if ranking.compare(population, challenger, best) == Ordering::Less {
            best = challenger;
        }
    }
    best
}

/// Elitist truncation of `pool` to `keep` members: whole fronts in rank order,
/// the last front cut by descending crowding distance.
pub fn survive(pool: Vec<Individual>, keep: usize) -> Vec<Individual> {
    if pool.len() <= keep {
        return pool;
    }
    let fitness: Vec<FitnessPair> = pool.iter().map(|i| i.fitness).collect();
    let mut chosen = Vec::with_capacity(keep);
    for front in non_dominated_sort(&fitness) {
        if chosen.len() + front.len() <= keep {
            chosen.extend(front);
            if chosen.len() == keep {
                break;
            }
            continue;
        }
        let pairs: Vec<FitnessPair> = front.iter().map(|&i| fitness[i]).collect();
        let distance = crowding_distance(&pairs);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            distance[b]
                .total_cmp(&distance[a])
                .then_with(|| pool[front[a]].key().cmp(pool[front[b]].key()))
        });
        let room = keep - chosen.len();
        chosen.extend(order.into_iter().take(room).map(|k| front[k]));
        break;
    }
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("index chosen twice"))
        .collect()
}
