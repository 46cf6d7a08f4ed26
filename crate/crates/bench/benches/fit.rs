use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use principal_curves::datagen::{gen_dataset1, gen_euclidean_line, CurveModel};
use principal_curves::experiment::{run_ppc, SolverSpec};
use principal_curves::{Euclidean, Wasserstein};

fn fits(c: &mut Criterion) {
    let line = gen_euclidean_line(200, 0.05, 1).unwrap();
    let mut spec = SolverSpec::for_model(CurveModel::EuclideanLine);
    spec.knots = Some(30);
    c.bench_function("fit line N=200 K=30", |bench| {
        bench.iter(|| run_ppc(&Euclidean, black_box(&line), &spec, 1).unwrap())
    });

    let measures = gen_dataset1(40, 1600, 0.1, 1).unwrap();
    let mut spec = SolverSpec::for_model(CurveModel::Dataset1);
    spec.knots = Some(10);
    let mut group = c.benchmark_group("wasserstein");
    group.sample_size(10);
    group.bench_function("fit dataset1 N=40 K=10 exact", |bench| {
        bench.iter(|| run_ppc(&Wasserstein::exact(), black_box(&measures), &spec, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, fits);
criterion_main!(benches);
