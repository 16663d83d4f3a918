//! Benchmarks for the hot paths: raster classification, slice sweeps, and
//! fundamental-set construction.

use criterion::{criterion_group, criterion_main, Criterion};
use paramode_bench::coarsened;
use paramode_core::config::{linspace, SolverConfig};
use paramode_core::domain::{classify, smooth_section};
use paramode_core::fundamental::build_fundamental;
use paramode_core::integrate::sweep;
use paramode_core::presets;

fn classification(c: &mut Criterion) {
    let fine = presets::punctured_plane();
    let coarse = coarsened(&fine, 4.0);
    c.bench_function("classify punctured plane", |b| {
        b.iter(|| classify(&fine).unwrap())
    });
    c.bench_function("classify punctured plane 4x coarser", |b| {
        b.iter(|| classify(&coarse).unwrap())
    });
}

fn slice_sweep(c: &mut Criterion) {
    let (region, op) = presets::damped_oscillator();
    let section = smooth_section(&region).unwrap();
    let ts = linspace(0.05, 0.95, 40);
    let cfg = SolverConfig::default();
    let sys = op.companion(None);
    let init = |_t: f64| vec![1.0, 0.0];
    c.bench_function("sweep damped oscillator, 40 slices", |b| {
        b.iter(|| sweep(&sys, &region, &section, &init, &ts, &cfg))
    });
}

fn fundamental_set(c: &mut Criterion) {
    let (region, op) = presets::damped_oscillator();
    let section = smooth_section(&region).unwrap();
    let ts = linspace(0.05, 0.95, 40);
    let cfg = SolverConfig::default();
    c.bench_function("fundamental set, 40 slices", |b| {
        b.iter(|| build_fundamental(&op, &region, &section, &ts, &cfg))
    });
}

criterion_group!(benches, classification, slice_sweep, fundamental_set);
criterion_main!(benches);
