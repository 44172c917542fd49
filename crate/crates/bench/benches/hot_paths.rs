use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use irsim_bench::{fixture, FC};
use irsim_core::linalg::{dominant_eigenpair, EigenOptions};
use irsim_core::rate_bounds::{achievable_rate, default_n0};
use irsim_core::solvers::{max_eig_phase, nb_config, ucqp_ascent, NbDelays};
use std::hint::black_box;

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_coupling");
    group.sample_size(10);
    for side in [8, 16, 32] {
        let fx = fixture(side, 10.0);
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &fx, |b, fx| {
            b.iter(|| black_box(fx.coupling()))
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    for side in [16, 32] {
        let fx = fixture(side, 30.0);
        let coupling = fx.coupling();
        let l = side * side;
        group.bench_with_input(BenchmarkId::new("dominant_eigenpair", l), &coupling, |b, c| {
            b.iter(|| black_box(dominant_eigenpair(c.t(), EigenOptions::default()).unwrap()))
        });
        let init = nb_config(&NbDelays::from_scenario(&fx.scenario).unwrap(), FC).unwrap();
        group.bench_with_input(BenchmarkId::new("ucqp_ascent_100", l), &coupling, |b, c| {
            b.iter(|| black_box(ucqp_ascent(c, &init, 100, 0.0).unwrap()))
        });
    }
    group.finish();
}

fn rate(c: &mut Criterion) {
    let fx = fixture(16, 30.0);
    let gamma = max_eig_phase(&fx.coupling()).unwrap();
    c.bench_function("achievable_rate/256", |b| {
        b.iter(|| black_box(achievable_rate(&fx.channel, &fx.psd, &gamma, default_n0()).unwrap()))
    });
}

criterion_group!(benches, assembly, solvers, rate);
criterion_main!(benches);
