use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use soslift_bench::{regular_graph, sk_seed};
use soslift_core::glyph::{factorization_norm_bound, NormParams};
use soslift_core::lift::quad_entry;
use soslift_core::seeds::nonbacktracking_matrix;
use soslift_core::{lift, lift_m1, solution_params, Mode};

fn entries(c: &mut Criterion) {
    let x = [0.1, -0.2, 0.3, 0.05, -0.4, 0.25];
    c.bench_function("quad_entry", |b| b.iter(|| quad_entry(std::hint::black_box(&x))));
}

fn dense_lift(c: &mut Criterion) {
    let mut group = c.benchmark_group("lift_m1");
    group.sample_size(10);
    for n in [16, 32, 48] {
        let x = sk_seed(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| lift_m1(x).unwrap()));
    }
    group.finish();

    let mut group = c.benchmark_group("lift_tight");
    group.sample_size(10);
    let x = sk_seed(32, 2);
    group.bench_function("n=32", |b| b.iter(|| lift(&x, Mode::Tight).unwrap()));
    group.finish();
}

fn certificates(c: &mut Criterion) {
    let x = sk_seed(200, 3);
    let norms = NormParams::from_matrix(&x.x);
    c.bench_function("factorization_norm_bound E4", |b| b.iter(|| factorization_norm_bound(4, &norms).unwrap()));
    let mut group = c.benchmark_group("solution_params");
    group.sample_size(10);
    group.bench_function("certified n=200", |b| b.iter(|| solution_params(&x, Mode::Certified).unwrap()));
    group.finish();
}

fn nonbacktracking(c: &mut Criterion) {
    let g = regular_graph(400, 3, 4);
    c.bench_function("nonbacktracking_matrix t=6 n=400", |b| b.iter(|| nonbacktracking_matrix(6, &g)));
}

criterion_group!(benches, entries, dense_lift, certificates, nonbacktracking);
criterion_main!(benches);
