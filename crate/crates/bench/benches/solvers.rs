use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use distmatch::lqg::{lqg_backward, random_lqg, LinearGaussianPolicy};
use distmatch::random::{random_cost, random_problem, RandomShape};
use distmatch::{
    backward_pass, fixtures, mm_iterate, pic_value_mc, CostModel, DiscreteProblem, MMConfig,
    MmMode, ProjectionKind, TabularPolicy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(states: usize, actions: usize, horizon: usize) -> (DiscreteProblem, CostModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = RandomShape {
        num_states: states,
        num_actions: actions,
        horizon,
        deterministic: false,
    };
    let problem = random_problem(&mut rng, shape);
    let cost = random_cost(&mut rng, &problem);
    (problem, cost)
}

fn projections(c: &mut Criterion) {
    let mut group = c.benchmark_group("backward_pass");
    for states in [10, 50, 200] {
        let (problem, cost) = instance(states, 4, 20);
        let prior = TabularPolicy::uniform_for(&problem);
        for (name, kind) in [
            ("i", ProjectionKind::I),
            ("m", ProjectionKind::M),
            ("renyi", ProjectionKind::Renyi(0.5)),
        ] {
            group.bench_with_input(BenchmarkId::new(name, states), &states, |b, _| {
                b.iter(|| backward_pass(&problem, &cost, &prior, black_box(kind)).unwrap())
            });
        }
    }
    group.finish();
}

fn mm(c: &mut Criterion) {
    let mut group = c.benchmark_group("mm_iterate");
    group.sample_size(20);
    let (problem, cost) = instance(5, 3, 4);
    let config = MMConfig {
        max_iters: 100,
        ..MMConfig::default()
    };
    for (name, mode) in [("soc", MmMode::Soc), ("rsoc", MmMode::Rsoc)] {
        group.bench_function(name, |b| {
            b.iter(|| mm_iterate(&problem, &cost, black_box(mode), &config).unwrap())
        });
    }
    group.finish();
}

fn lqg(c: &mut Criterion) {
    let mut group = c.benchmark_group("lqg_backward");
    for dim in [2, 8, 32] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (dynamics, cost) = random_lqg(&mut rng, dim, dim / 2 + 1, 50).unwrap();
        let prior = LinearGaussianPolicy::standard(&dynamics);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| lqg_backward(&dynamics, &cost, &prior, black_box(0.5)).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("pic_value_mc");
    group.sample_size(10);
    let (chain, chain_cost) = fixtures::stochastic_chain2();
    let (random, random_cost) = instance(20, 4, 10);
    for (name, problem, cost) in [
        ("stochastic_chain2", &chain, &chain_cost),
        ("random_20x4x10", &random, &random_cost),
    ] {
        let prior = TabularPolicy::uniform_for(problem);
        group.bench_function(name, |b| {
            b.iter(|| pic_value_mc(problem, &prior, cost, 0, 0, 100_000, black_box(3)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, projections, mm, lqg, sampling);
criterion_main!(benches);
