use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use critblow::semigroup::{apply_semigroup, SemigroupOptions};
use critblow::solver::Integrator;
use critblow::spectral::project_modes;
use critblow::{GridField, Quadrature};
use critblow_bench::fixture;

fn solver(c: &mut Criterion) {
    let (m, cfg, v) = fixture();
    let ds = cfg.aligned_ds(v.half_width()).0;
    c.bench_function("heun_step_s15", |b| {
        let mut it = Integrator::new(v.clone(), 15.0, &m, &cfg).unwrap();
        b.iter(|| {
            it.step(black_box(ds), None).unwrap();
        })
    });
    c.bench_function("project_modes_s15", |b| {
        b.iter(|| project_modes(black_box(&v), 15.0, &m, cfg.cutoff).unwrap())
    });
}

fn spectral(c: &mut Criterion) {
    c.bench_function("gauss_hermite_256", |b| b.iter(|| Quadrature::gauss_hermite(black_box(256))));
    let r = GridField::covering(0.0, 40.0, 0.05).map(|y, _| (1.0 + y) * (-y * y).exp());
    c.bench_function("semigroup_theta1", |b| {
        b.iter(|| apply_semigroup(black_box(1.0), &r, SemigroupOptions::default()).unwrap())
    });
}

criterion_group!(benches, solver, spectral);
criterion_main!(benches);
