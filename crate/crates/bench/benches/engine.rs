use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deepselect_core::fitness::{gd_contributions, normalize_features};
use deepselect_core::search::{evolve, non_dominated_sort};
use deepselect_core::synthetic::{generate, SyntheticConfig};
use deepselect_core::{log_geometric_diversity, FitnessPair, Profile, SearchParams, SelectionProblem};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn diversity(c: &mut Criterion) {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let f = normalize_features(&data.features);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut group = c.benchmark_group("log_gd");
    for beta in [16, 32, 100] {
        let subset = index::sample(&mut rng, f.n_inputs(), beta).into_vec();
        group.bench_with_input(BenchmarkId::from_parameter(beta), &subset, |b, s| {
            b.iter(|| log_geometric_diversity(&f, black_box(s)).unwrap())
        });
    }
    group.finish();
    let subset = index::sample(&mut rng, f.n_inputs(), 100).into_vec();
    c.bench_function("gd_contributions/100", |b| {
        b.iter(|| gd_contributions(&f, black_box(&subset)).unwrap())
    });
}

fn sorting(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("non_dominated_sort");
    for n in [200, 1400] {
        let pts: Vec<FitnessPair> = (0..n)
            .map(|_| FitnessPair::new(rng.random(), rng.random()))
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &pts, |b, p| {
            b.iter(|| non_dominated_sort(black_box(p)))
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let problem = SelectionProblem::new(data.probabilities, &data.features).unwrap();
    let mut params = SearchParams::for_profile(Profile::Desk, 100);
    params.generations = 5;
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    group.bench_function("desk_pop_5_generations", |b| {
        b.iter(|| evolve(&problem, black_box(&params)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, diversity, sorting, search);
criterion_main!(benches);
