use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use r2l_core::oracle::default_max_sweeps;
use r2l_core::*;

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_sota");
    for (rows, dt) in [(3, 0.5), (5, 0.1)] {
        let net = generate_grid(&GridSpec::new(rows, rows, rows * rows - 1, 7)).unwrap();
        let sweeps = default_max_sweeps(&net);
        group.bench_function(format!("{rows}x{rows}_dt{dt}"), |b| {
            b.iter(|| solve_sota(black_box(&net), dt, 30.0, 1e-9, sweeps).unwrap())
        });
    }
    group.finish();
}

fn learning(c: &mut Criterion) {
    let net = generate_grid(&GridSpec::new(3, 3, 8, 7)).unwrap();
    let env = RoutingEnv::new(net, 20.0).unwrap().with_budget_grid(0.5).unwrap();
    let params = LearnerParams {
        alpha: 1.0,
        alpha_schedule: AlphaSchedule::VisitCount { power: 1.0 },
        episodes: 50_000,
        max_steps: 100,
        bin_width: 0.5,
        seed: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("3x3_50k_episodes", |b| b.iter(|| train(black_box(&env), &params, None).unwrap()));
    group.finish();
}

criterion_group!(benches, oracle, learning);
criterion_main!(benches);
