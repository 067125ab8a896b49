//! Throughput benchmarks for the three model engines at a few window
//! sizes, all on fixed seeds so runs are comparable.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use polygrowth::point::{sample_config, PointConfig};
use polygrowth::{hammersley, lpp, png, PlanarPoint};

fn config(side: f64) -> PointConfig {
    sample_config(1.0, 1.0, (side, side), 7).unwrap()
}

fn bench_last_passage(c: &mut Criterion) {
    let mut group = c.benchmark_group("last_passage");
    for side in [50.0, 100.0, 200.0] {
        let cfg = config(side);
        let origin = PlanarPoint::new(0.0, 0.0);
        let corner = PlanarPoint::new(side * 0.999, side * 0.999);
        group.bench_with_input(BenchmarkId::from_parameter(side), &cfg, |b, cfg| {
            b.iter(|| lpp::last_passage(cfg, origin, corner).unwrap())
        });
    }
    group.finish();
}

fn bench_hammersley(c: &mut Criterion) {
    let mut group = c.benchmark_group("hammersley_evolve");
    for side in [50.0, 100.0, 200.0] {
        let cfg = config(side);
        group.bench_with_input(BenchmarkId::from_parameter(side), &cfg, |b, cfg| {
            b.iter(|| hammersley::evolve(cfg))
        });
    }
    group.finish();
}

fn bench_png(c: &mut Criterion) {
    let mut group = c.benchmark_group("png_evolve");
    for side in [50.0, 100.0] {
        let cfg = config(side);
        let nucs = png::nucleations_from(&cfg);
        let horizon = (cfg.window.0 + cfg.window.1) / f64::sqrt(2.0);
        group.bench_with_input(BenchmarkId::from_parameter(side), &nucs, |b, nucs| {
            b.iter(|| png::evolve_png(nucs, horizon).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_last_passage, bench_hammersley, bench_png);
criterion_main!(benches);
