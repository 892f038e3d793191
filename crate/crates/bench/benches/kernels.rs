use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use furstenberg_bench::{lazy_walk, skewed_measure, weighted_function};
use furstenberg_core::boundary::{
    cylinder_entropy, harmonic_measure, minimality_scan, solve_q_tight, ScanConfig,
};
use furstenberg_core::divergence::ConvexGenerator;
use furstenberg_core::majorant::{rho_norm, Majorant, NormMode};
use furstenberg_core::walk::exact_distribution;

fn boundary(c: &mut Criterion) {
    let mu = skewed_measure(3);
    c.bench_function("solve_q_tight/d3", |b| {
        b.iter(|| solve_q_tight(black_box(&mu)).unwrap())
    });
    c.bench_function("harmonic_measure/d3_depth5", |b| {
        b.iter(|| harmonic_measure(black_box(&mu), 5).unwrap())
    });
    let nu = harmonic_measure(&mu, 5).unwrap();
    c.bench_function("cylinder_entropy/kl_d3_depth5", |b| {
        b.iter(|| cylinder_entropy(black_box(&mu), &nu, &ConvexGenerator::Kl).unwrap())
    });
    let lambda = skewed_measure(2);
    c.bench_function("minimality_scan/depth2_200", |b| {
        b.iter(|| {
            minimality_scan(
                black_box(&lambda),
                &ConvexGenerator::Kl,
                &ScanConfig::new(2, 200, 42),
            )
            .unwrap()
        })
    });
}

fn walk(c: &mut Criterion) {
    let s = lazy_walk();
    c.bench_function("exact_distribution/z_lazy_n200", |b| {
        b.iter(|| exact_distribution(black_box(&s), 200, 1_000_000).unwrap())
    });
}

fn majorant(c: &mut Criterion) {
    let f = weighted_function(16);
    let rho = Majorant::power(2.0).unwrap();
    c.bench_function("rho_norm/exact_16", |b| {
        b.iter(|| rho_norm(black_box(&f), &rho, NormMode::Exact).unwrap())
    });
    c.bench_function("rho_norm/prefix_16", |b| {
        b.iter(|| rho_norm(black_box(&f), &rho, NormMode::Prefix).unwrap())
    });
}

criterion_group!(kernels, boundary, walk, majorant);
criterion_main!(kernels);
