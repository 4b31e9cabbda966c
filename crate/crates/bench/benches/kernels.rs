use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use spectl_bench::{advection_jacobi, advection_rb, wave_jacobi};
use spectl_core::smoothers::{rs_cf_split, DEFAULT_THETA};
use spectl_core::{
    error_propagator, factor_pencil, optimal_complex_transfers, run_iterations, IterationProblem,
    IterationSettings, NormSpec, TwoLevelOperator,
};

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("factor_pencil");
    group.sample_size(10);
    for r in [1, 2, 3] {
        let p = advection_jacobi(r);
        group.bench_with_input(BenchmarkId::new("advection_jacobi", p.n()), &p, |b, p| {
            b.iter(|| factor_pencil(black_box(p)).unwrap())
        });
    }
    let p = wave_jacobi(0, 0.1);
    group.bench_with_input(BenchmarkId::new("wave_jacobi", p.n()), &p, |b, p| {
        b.iter(|| factor_pencil(black_box(p)).unwrap())
    });
    group.finish();
}

fn propagator(c: &mut Criterion) {
    let mut group = c.benchmark_group("error_propagator");
    for r in [2, 3] {
        let p = advection_rb(r);
        let ged = factor_pencil(&p).unwrap();
        let tl = TwoLevelOperator::new(p.clone(), optimal_complex_transfers(&ged, p.n() / 4).unwrap(), 1, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("advection_rb", p.n()), &tl, |b, tl| {
            b.iter(|| error_propagator(black_box(tl)).unwrap())
        });
    }
    group.finish();
}

fn iterations(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_iterations");
    group.sample_size(20);
    let p = advection_jacobi(2);
    let ged = factor_pencil(&p).unwrap();
    let tl = TwoLevelOperator::new(p.clone(), optimal_complex_transfers(&ged, p.n() / 4).unwrap(), 1, 1).unwrap();
    let spec = NormSpec::identity(p.n());
    let problem = IterationProblem::manufactured(&p, 0);
    let settings = IterationSettings::default();
    group.bench_function(BenchmarkId::new("advection_jacobi", p.n()), |b| {
        b.iter(|| run_iterations(&tl, &ged, &spec, &problem, black_box(&settings)).unwrap())
    });
    group.finish();
}

fn cf_split(c: &mut Criterion) {
    let p = advection_jacobi(3);
    c.bench_function("rs_cf_split/advection_256", |b| {
        b.iter(|| rs_cf_split(black_box(p.a()), DEFAULT_THETA))
    });
}

criterion_group!(benches, factorization, propagator, iterations, cf_split);
criterion_main!(benches);
