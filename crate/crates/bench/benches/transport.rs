use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use principal_curves::datagen::gen_dataset1;
use principal_curves::ot::exact::w2_exact;
use principal_curves::ot::sinkhorn::w2_sinkhorn;
use principal_curves::ppc::tsp::{held_karp, solve_path};
use principal_curves::seriation::distance::pairwise_w2_matrix;
use principal_curves::{Matrix, OtMethod, SinkhornConfig};

fn transport(c: &mut Criterion) {
    let data = gen_dataset1(50, 2000, 0.1, 1).unwrap();
    let (a, b) = (&data.batches()[0], &data.batches()[25]);
    c.bench_function("w2_exact 40x40", |bench| {
        bench.iter(|| w2_exact(black_box(a), black_box(b)).unwrap())
    });
    let cfg = SinkhornConfig {
        tol: 1e-4,
        ..SinkhornConfig::with_reg(1e-2)
    };
    c.bench_function("w2_sinkhorn 40x40 reg 1e-2", |bench| {
        bench.iter(|| w2_sinkhorn(black_box(a), black_box(b), &cfg).unwrap())
    });
    let mut group = c.benchmark_group("pairwise");
    group.sample_size(10);
    group.bench_function("w2_exact matrix N=50", |bench| {
        bench.iter(|| pairwise_w2_matrix(black_box(data.batches()), OtMethod::Exact, None).unwrap())
    });
    group.finish();
}

fn tour(c: &mut Criterion) {
    let pts: Vec<(f64, f64)> = (0..60)
        .map(|i| ((i as f64 * 0.37).sin(), (i as f64 * 0.71).cos()))
        .collect();
    let dist = |n: usize| {
        Matrix::from_fn(n, n, |i, j| {
            ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
        })
    };
    let small = dist(12);
    let large = dist(60);
    c.bench_function("held_karp 12", |bench| {
        bench.iter(|| held_karp(black_box(&small), None, None))
    });
    c.bench_function("path heuristic 60", |bench| {
        bench.iter(|| solve_path(black_box(&large), None, None))
    });
}

criterion_group!(benches, transport, tour);
criterion_main!(benches);
