use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use specrank::kpm::chebyshev_moments;
use specrank::lanczos::{lanczos, tridiag_eigen};
use specrank::{Reorthogonalization, SymmetricOperator, Window};
use specrank_bench::{banded, dense, probes};

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for n in [256, 1024] {
        let op = dense(n);
        let x = probes(n, 1).remove(0);
        let mut y = vec![0.0; n];
        group
            .bench_with_input(BenchmarkId::new("dense", n), &n, |b, _| b.iter(|| op.apply_into(black_box(&x), &mut y)));
    }
    for n in [10_000, 100_000] {
        let op = banded(n, 4);
        let x = probes(n, 1).remove(0);
        let mut y = vec![0.0; n];
        group.bench_with_input(BenchmarkId::new("csr", n), &n, |b, _| b.iter(|| op.apply_into(black_box(&x), &mut y)));
    }
    group.finish();
}

fn moments(c: &mut Criterion) {
    let op = banded(20_000, 4);
    let window = Window::new(-1.0, 17.0).unwrap();
    let v = probes(20_000, 10);
    let mut group = c.benchmark_group("chebyshev_moments");
    for degree in [50, 100] {
        group.bench_with_input(BenchmarkId::from_parameter(degree), &degree, |b, &m| {
            b.iter(|| chebyshev_moments(&op, window, m, black_box(&v)).unwrap())
        });
    }
    group.finish();
}

fn lanczos_steps(c: &mut Criterion) {
    let op = banded(20_000, 4);
    let v = probes(20_000, 1).remove(0);
    let mut group = c.benchmark_group("lanczos");
    for reorth in [Reorthogonalization::None, Reorthogonalization::Full] {
        group.bench_function(format!("{reorth:?}/50"), |b| b.iter(|| lanczos(&op, black_box(&v), 50, reorth).unwrap()));
    }
    group.finish();
}

fn tridiagonal(c: &mut Criterion) {
    let op = dense(512);
    let v = probes(512, 1).remove(0);
    let mut group = c.benchmark_group("tridiag_eigen");
    for steps in [50, 200] {
        let t = lanczos(&op, &v, steps, Reorthogonalization::Full).unwrap().tridiagonal;
        group.bench_with_input(BenchmarkId::from_parameter(steps), &t, |b, t| {
            b.iter(|| tridiag_eigen(black_box(t)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, matvec, moments, lanczos_steps, tridiagonal);
criterion_main!(benches);
