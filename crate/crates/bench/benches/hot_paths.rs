use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use perc_ldp::*;
use perc_ldp_bench::{small_graph_model, subcritical_chain};

fn bench_pi(c: &mut Criterion) {
    c.bench_function("pi_at t=1000", |b| {
        b.iter(|| pi_at(black_box(1000), black_box(1e-4), black_box(2)))
    });
}

fn bench_chain(c: &mut Criterion) {
    let params = subcritical_chain();
    c.bench_function("simulate_chain t_c=100", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            simulate_chain(black_box(&params), seed)
        })
    });
}

fn bench_dp(c: &mut Criterion) {
    let params = subcritical_chain();
    c.bench_function("exact_distribution t_c=100", |b| {
        b.iter(|| exact_distribution(black_box(&params)).unwrap())
    });
}

fn bench_graph(c: &mut Criterion) {
    let model = small_graph_model();
    c.bench_function("gnp+percolate n=200", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            let graph = sample_gnp_seeded(model.n() as usize, model.p(), seed).unwrap();
            percolate(&graph, &[0, 1, 2], model.r())
                .unwrap()
                .final_size()
        })
    });
}

fn bench_variational(c: &mut Criterion) {
    let problem = TrajectoryProblem::new(0.5, 1.0, 2, 64).unwrap();
    let resolution = problem.default_resolution();
    c.bench_function("maximize_trajectory m=64", |b| {
        b.iter(|| maximize_trajectory(black_box(&problem), resolution).unwrap())
    });
}

criterion_group!(
    benches,
    bench_pi,
    bench_chain,
    bench_dp,
    bench_graph,
    bench_variational
);
criterion_main!(benches);
