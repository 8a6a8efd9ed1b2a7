use criterion::{criterion_group, criterion_main, Criterion};
use nhyang::geometry::{chern_integrand, seed_reference, ConnectionOptions, Gauge, SphereField};
use nhyang::wilson::HolonomyOptions;
use nhyang::{
    build_hamiltonian, eigensystem, holonomy, second_chern, Band, ChernOptions, ConnectionKind, LoopSpec, ParameterPoint,
    QuadratureGrid, Spherical,
};
use std::hint::black_box;

fn point() -> ParameterPoint {
    let s = Spherical { r: 2.0, theta1: 0.7, theta2: 0.4, phi1: 1.1, phi2: -0.3 };
    ParameterPoint::spherical(s, 1.0).expect("valid point")
}

fn spectral(c: &mut Criterion) {
    let h = build_hamiltonian(&point());
    c.bench_function("eigensystem", |b| b.iter(|| eigensystem(black_box(&h), 1e-8).unwrap()));
}

fn geometry(c: &mut Criterion) {
    let field = SphereField { r: 2.0, kappa: 1.0, band: Band::Lower };
    let opts = ConnectionOptions::new(Gauge::Reference(seed_reference()), ConnectionKind::Biorthogonal);
    let x = [0.7, 0.4, 1.1, -0.3];
    c.bench_function("chern_integrand", |b| b.iter(|| chern_integrand(&field, black_box(&x), &opts).unwrap()));
    let grid = QuadratureGrid::uniform(8).unwrap();
    let mut group = c.benchmark_group("second_chern");
    group.sample_size(10);
    group.bench_function("8^4", |b| b.iter(|| second_chern(black_box(2.0), 1.0, &grid, &ChernOptions::default()).unwrap()));
    group.finish();
}

fn wilson(c: &mut Criterion) {
    let opts = HolonomyOptions::default();
    let mut group = c.benchmark_group("holonomy");
    group.sample_size(10);
    group.bench_function("slice", |b| b.iter(|| holonomy(&LoopSpec::slice(2.0, black_box(0.6)), 1.0, &opts).unwrap()));
    group.bench_function("moebius", |b| b.iter(|| holonomy(&LoopSpec::moebius(1.0, black_box(0.5)), 1.0, &opts).unwrap()));
    group.finish();
}

criterion_group!(kernels, spectral, geometry, wilson);
criterion_main!(kernels);
