//! Uncertainty-sorted crossover and diversity-aware mutation.
//!
//! Both operators work on raw gene vectors and leave fitness evaluation to the
//! caller, so offspring of a whole generation can be scored in one batch.
//!
//! Random draws happen in a fixed order: the crossover cut point, then
//! duplicate repairs of the first offspring in gene order, then those of the
//! second. Mutation draws its replacement ids in the order of the genes being
//! replaced.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::Variant;
use crate::fitness::{contributions_unchecked, SelectionProblem};

/// Genes ordered by descending Gini score, ties by ascending id.
pub fn sort_by_gini(problem: &SelectionProblem, genes: &[usize]) -> Vec<usize> {
    let mut sorted = genes.to_vec();
    sorted.sort_by(|&a, &b| {
        problem
            .gini(b)
            .total_cmp(&problem.gini(a))
            .then(a.cmp(&b))
    });
    sorted
}

/// Single-point crossover at a uniformly drawn cut `c` in `[1, beta - 1]`.
///
/// The first child takes the first `c` genes of `p1` and the first `beta - c`
/// of `p2`, the second child the rest. Under the full operator both parents
/// are first sorted by descending Gini, so the first child collects the most
/// uncertain inputs of both. Repeated ids are replaced by random ids absent
/// from the child.
pub fn crossover<R: Rng + ?Sized>(
    problem: &SelectionProblem,
    p1: &[usize],
    p2: &[usize],
    variant: Variant,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    let beta = p1.len();
    assert_eq!(beta, p2.len(), "parents of different size");
    assert!(beta >= 2, "crossover needs at least two genes");
    let (a, b) = if variant == Variant::SimpleCrossover {
        (p1.to_vec(), p2.to_vec())
    } else {
        (sort_by_gini(problem, p1), sort_by_gini(problem, p2))
    };
    let cut = rng.random_range(1..beta);
    crossover_at(problem.n_inputs(), &a, &b, cut, rng)
}

/// Slices already-ordered parents at `cut` and repairs duplicates.
pub fn crossover_at<R: Rng + ?Sized>(
    n: usize,
    a: &[usize],
    b: &[usize],
    cut: usize,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    let beta = a.len();
    let mut first: Vec<usize> = a[..cut].iter().chain(&b[..beta - cut]).copied().collect();
    let mut second: Vec<usize> = a[cut..].iter().chain(&b[beta - cut..]).copied().collect();
    repair_duplicates(&mut first, n, rng);
    repair_duplicates(&mut second, n, rng);
    (first, second)
}

/// Replaces every repeated id (after its first occurrence) with a uniformly
/// drawn id that is not yet in `genes`.
pub fn repair_duplicates<R: Rng + ?Sized>(genes: &mut [usize], n: usize, rng: &mut R) {
    let mut present: HashSet<usize> = HashSet::with_capacity(genes.len());
    let mut repeats = Vec::new();
    for (pos, &g) in genes.iter().enumerate() {
        if !present.insert(g) {
            repeats.push(pos);
        }
    }
    for pos in repeats {
        genes[pos] = draw_absent(&mut present, n, rng);
    }
}

fn draw_absent<R: Rng + ?Sized>(present: &mut HashSet<usize>, n: usize, rng: &mut R) -> usize {
    assert!(present.len() < n, "no input left to draw");
    loop {
        let id = rng.random_range(0..n);
        if present.insert(id) {
            return id;
        }
    }
}

/// `(k2, k1)`: how many low-Gini genes are examined and how many are replaced.
pub fn mutation_counts(beta: usize) -> (usize, usize) {
    let k2 = ((0.02 * beta as f64).round() as usize).max(1);
    let k1 = (k2 / 2).max(1);
    (k2, k1)
}

/// Replaces `k1` genes of the individual with random absent ids.
///
/// The full operator takes the `k2` genes with the lowest Gini score and, of
/// those, replaces the `k1` whose removal costs the least geometric diversity.
pub fn mutate<R: Rng + ?Sized>(
    problem: &SelectionProblem,
    genes: &mut [usize],
    variant: Variant,
    rng: &mut R,
) {
    let n = problem.n_inputs();
    let beta = genes.len();
    if beta >= n {
        return;
    }
    let (k2, k1) = mutation_counts(beta);
    let positions: Vec<usize> = match variant {
        Variant::SimpleMutation => index::sample(rng, beta, k1).into_vec(),
        Variant::GiniOnlyMutation => lowest_gini_positions(problem, genes, k1),
        Variant::GdOnlyMutation => {
            let all: Vec<usize> = (0..beta).collect();
            lowest_contribution_positions(problem, genes, &all, k1)
        }
        Variant::Full | Variant::SimpleCrossover => {
            let candidates = lowest_gini_positions(problem, genes, k2);
            lowest_contribution_positions(problem, genes, &candidates, k1)
        }
    };
    let mut present: HashSet<usize> = genes.iter().copied().collect();
    for pos in positions {
        genes[pos] = draw_absent(&mut present, n, rng);
    }
}

/// Positions of the `k` genes with the lowest Gini score, ties by ascending id.
fn lowest_gini_positions(problem: &SelectionProblem, genes: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..genes.len()).collect();
    order.sort_by(|&a, &b| {
        problem
            .gini(genes[a])
            .total_cmp(&problem.gini(genes[b]))
            .then(genes[a].cmp(&genes[b]))
    });
    order.truncate(k);
    order
}

/// Of the `candidates` positions, the `k` whose genes contribute least to the
/// diversity of the whole individual; ties by ascending id.
fn lowest_contribution_positions(
    problem: &SelectionProblem,
    genes: &[usize],
    candidates: &[usize],
    k: usize,
) -> Vec<usize> {
    if candidates.len() <= k {
        return candidates.to_vec();
    }
    let contribution = contributions_unchecked(problem.features(), genes);
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| {
        contribution[a]
            .total_cmp(&contribution[b])
            .then(genes[a].cmp(&genes[b]))
    });
    order.truncate(k);
    order
}
