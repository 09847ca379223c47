use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tanlab_core::lambda::{besq_step, simulate_lambda, HittingGrid, LambdaParams, LambdaStart};
use tanlab_core::stats::{kuiper_test, TorusSample};
use tanlab_core::tangential::simulate_tangential;
use tanlab_core::{make_grid, GridKind, Seed};

fn tangential(c: &mut Criterion) {
    let mut g = c.benchmark_group("tangential_path");
    for steps in [100usize, 1000] {
        let grid = make_grid(GridKind::Log, 1e-4, 10.0, steps + 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(steps), &grid, |b, grid| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                simulate_tangential(Seed::new(1, i), black_box(grid), None).unwrap()
            })
        });
    }
    g.finish();
}

fn besq(c: &mut Criterion) {
    let delta = LambdaParams::new(0.5).unwrap().delta();
    c.bench_function("besq_step", |b| {
        let mut i = 0;
        b.iter(|| {
            i += 1;
            besq_step(Seed::new(2, i), black_box(1.0), 0.01, delta).unwrap()
        })
    });
}

fn lambda_path(c: &mut Criterion) {
    let grid = HittingGrid::default().grid().unwrap();
    let p = LambdaParams::new(0.5).unwrap();
    c.bench_function("lambda_path_hitting_grid", |b| {
        let mut i = 0;
        b.iter(|| {
            i += 1;
            simulate_lambda(
                Seed::new(3, i),
                p,
                black_box(&grid),
                LambdaStart::Origin,
                None,
            )
            .unwrap()
        })
    });
}

fn kuiper(c: &mut Criterion) {
    let values: Vec<f64> = (0..10_000)
        .map(|i| (i as f64 * 0.618_033_988_749_895).fract() * std::f64::consts::TAU)
        .collect();
    let sample = TorusSample::new(values).unwrap();
    c.bench_function("kuiper_10k", |b| {
        b.iter(|| kuiper_test(black_box(&sample), 0.01).unwrap())
    });
}

criterion_group!(benches, tangential, besq, lambda_path, kuiper);
criterion_main!(benches);
