use std::hint::black_box;

use balanced3body::balance::{trace_families, TraceGrid};
use balanced3body::closed_forms::{isosceles_embedding, IsoscelesParams};
use balanced3body::dynamics::{stability_probe, ProbeConfig};
use balanced3body::equilibrium::{lift_families, StencilConfig};
use balanced3body::shape::MassTriple;
use balanced3body::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn tracing(c: &mut Criterion) {
    let m = MassTriple::new(3.0, 2.0, 1.0).unwrap().normalized();
    let grid = TraceGrid::default();
    let mut group = c.benchmark_group("trace_families");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| trace_families(black_box(&m), &grid, exec).unwrap())
        });
    }
    group.finish();

    let set = trace_families(&m, &grid, Execution::Parallel).unwrap();
    let cfg = StencilConfig::default();
    let mut group = c.benchmark_group("lift_families");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| lift_families(black_box(&set), &cfg, exec))
        });
    }
    group.finish();
}

fn probing(c: &mut Criterion) {
    let (eq, _) = isosceles_embedding(&IsoscelesParams::new(0.8, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let cfg = ProbeConfig { periods: 10.0, trials: 8, ..ProbeConfig::default() };
    let mut group = c.benchmark_group("stability_probe");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| stability_probe(&eq.masses, black_box(&eq), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, tracing, probing);
criterion_main!(benches);
