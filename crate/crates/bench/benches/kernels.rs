use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use satburgers_core::exact_solutions::wave_profile;
use satburgers_core::initial_data::InitialDatum;
use satburgers_core::limit_analysis::{q_lim_profile, QLimOptions};
use satburgers_core::model::{builtin_model, BuiltinModel};
use satburgers_core::solver::{stable_dt, step, Grid, SolverConfig};

fn solver_step(c: &mut Criterion) {
    let m = builtin_model(BuiltinModel::BurgersArctan, 0.25).unwrap();
    let mut group = c.benchmark_group("step");
    for n in [1_000, 10_000] {
        let grid = Grid::new(-1.0, 1.0, n).unwrap();
        let u = InitialDatum::riemann(1.0, 0.0, 0.0).sample(grid).unwrap();
        let cfg = SolverConfig::new(grid.dx(), 1.0);
        let dt = stable_dt(&u, &m, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| step(black_box(u), &m, &cfg, dt).unwrap());
        });
    }
    group.finish();
}

fn profile(c: &mut Criterion) {
    let xi: Vec<f64> = (0..401).map(|i| -10.0 + 0.05 * i as f64).collect();
    let mut group = c.benchmark_group("wave_profile");
    for (name, q_bar) in [("continuous", 0.25), ("discontinuous", 1.0 / 16.0)] {
        let m = builtin_model(BuiltinModel::BurgersArctan, q_bar).unwrap();
        group.bench_function(name, |b| b.iter(|| wave_profile(&m, 1.0, 0.0, black_box(&xi)).unwrap()));
    }
    group.finish();
}

fn qlim(c: &mut Criterion) {
    let m = builtin_model(BuiltinModel::BurgersArctan, 0.25).unwrap();
    let opts = QLimOptions::for_model(&m);
    let grid = Grid::new(-1.0, 1.0, 4_001).unwrap();
    let u = InitialDatum::sawtooth(3, 0.8, 0.5, -0.75)
        .unwrap()
        .sample(grid)
        .unwrap();
    c.bench_function("q_lim_profile/4001", |b| {
        b.iter(|| q_lim_profile(black_box(&u), &m, &opts).unwrap())
    });
}

criterion_group!(benches, solver_step, profile, qlim);
criterion_main!(benches);
