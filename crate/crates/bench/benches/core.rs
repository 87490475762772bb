use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use logagg::harness::{run_summary, EnvironmentSpec, MatrixChoice};
use logagg::spectral::min_singular_value;
use logagg::{AggregatorKind, OgdState, RunConfig};
use logagg_bench::{matrix, rng, structure};
use rand::Rng;

fn sigma_min(c: &mut Criterion) {
    let mut group = c.benchmark_group("sigma_min");
    for (n, m) in [(8, 5), (32, 16), (64, 32)] {
        let a = matrix(n, m);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &a, |b, a| {
            b.iter(|| min_singular_value(black_box(a.dense())))
        });
    }
    group.finish();
}

fn sample_round(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_round");
    for (n, m) in [(4, 4), (16, 8)] {
        let s = structure(n, m);
        let mut r = rng(1);
        group.bench_function(format!("{n}x{m}"), |b| b.iter(|| s.sample_round(&mut r)));
    }
    group.finish();
}

fn ogd_step(c: &mut Criterion) {
    let mut r = rng(2);
    let grads: Vec<Vec<f64>> = (0..1024)
        .map(|_| (0..16).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let state = OgdState::new(16, 4.0, 10.0, 100_000).unwrap();
    c.bench_function("ogd_step_n16", |b| {
        let mut s = state.clone();
        let mut k = 0;
        b.iter(|| {
            s = s.step(&grads[k & 1023]);
            k += 1;
        })
    });
}

fn full_run(c: &mut Criterion) {
    let spec = EnvironmentSpec::Random {
        matrix: MatrixChoice::Identity(4),
        outcomes: 3,
        priors: vec![0.4],
        posterior_floor: 0.05,
    };
    let mut group = c.benchmark_group("run_10k_rounds");
    group.sample_size(20);
    for kind in [AggregatorKind::Dynamic, AggregatorKind::Static] {
        let config = RunConfig::new(spec.clone(), kind, 10_000, 1);
        group.bench_function(kind.as_str(), |b| b.iter(|| run_summary(&config).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sigma_min, sample_round, ogd_step, full_run);
criterion_main!(benches);
