//! Microbenchmarks for the numerical kernels on small grids.

use criterion::{criterion_group, criterion_main, Criterion};

use saddle_core::layer::solve_layer;
use saddle_core::model::{GridSpec2, GridSpec3, Nonlinearity, ScalarField3};
use saddle_core::{
    harmonic_fill, minimize_energy, monotone_iterate, odd_reflect, quadratic_form,
    BottomCondition, CylinderProblem, DescentParams, Region, TopCondition,
};

fn bench_layer_solve(c: &mut Criterion) {
    let nl = Nonlinearity::allen_cahn();
    let grid = GridSpec2::new(6.0, 6.0, 0.1, 0.1).unwrap();
    c.bench_function("layer_solve_6x6_h0.1", |b| {
        b.iter(|| solve_layer(&nl, grid, 1e-8).unwrap())
    });
}

fn bench_robin_fill(c: &mut Criterion) {
    let grid = GridSpec3::new(2, 4.0, 4.0, 3.0, 0.125, 0.125, 0.125).unwrap();
    let nb = grid.ns() * grid.nt();
    let problem = CylinderProblem::new(
        grid,
        Region::FullBox,
        |s, t, _| (s + t) / 8.0,
        BottomCondition::Robin { a: 1.0, rhs: vec![0.5; nb] },
        TopCondition::NeumannZero,
    )
    .unwrap();
    c.bench_function("robin_fill_33x33x25", |b| {
        b.iter(|| harmonic_fill(&problem, 1e-8).unwrap())
    });
}

fn bench_monotone_iterate(c: &mut Criterion) {
    let nl = Nonlinearity::allen_cahn();
    let layer = solve_layer(&nl, GridSpec2::new(8.0, 8.0, 0.1, 0.1).unwrap(), 1e-8).unwrap();
    let grid = GridSpec3::new(2, 4.0, 4.0, 3.0, 0.25, 0.25, 0.25).unwrap();
    let mut group = c.benchmark_group("iteration");
    group.sample_size(20);
    group.bench_function("monotone_iterate_17x17x13", |b| {
        b.iter(|| monotone_iterate(&nl, 2, 4.0, 3.0, &grid, &layer, 2.5, None, 1e-6).unwrap())
    });
    group.finish();
}

fn bench_minimize_energy(c: &mut Criterion) {
    let nl = Nonlinearity::allen_cahn();
    let grid = GridSpec3::new(1, 4.0, 4.0, 3.0, 0.25, 0.25, 0.25).unwrap();
    let params = DescentParams { energy_tol: 1e-10, residual_tol: 1e-6, max_sweeps: 20_000 };
    let mut group = c.benchmark_group("minimization");
    group.sample_size(10);
    group.bench_function("minimize_energy_17x17x13", |b| {
        b.iter(|| minimize_energy(&nl, 1, 4.0, 3.0, &grid, &params).unwrap())
    });
    group.finish();
}

fn bench_quadratic_form(c: &mut Criterion) {
    let nl = Nonlinearity::allen_cahn();
    let grid = GridSpec3::new(1, 8.0, 8.0, 6.0, 0.125, 0.125, 0.125).unwrap();
    let params = DescentParams { energy_tol: 1e-10, residual_tol: 1e-6, max_sweeps: 20_000 };
    let state = minimize_energy(&nl, 1, 8.0, 6.0, &grid, &params).unwrap();
    let full = odd_reflect(&state).unwrap();
    let xi = ScalarField3::from_fn(grid, |s, t, lam| {
        let taper = (8.0 - s).min(8.0 - t).min(6.0 - lam).clamp(0.0, 1.0);
        taper * (-((s - 3.0).powi(2) + (t - 2.0).powi(2) + lam * lam) / 4.0).exp()
    });
    c.bench_function("quadratic_form_65x65x49", |b| {
        b.iter(|| quadratic_form(&full, &xi, &nl, 1).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_layer_solve,
    bench_robin_fill,
    bench_monotone_iterate,
    bench_minimize_energy,
    bench_quadratic_form
);
criterion_main!(kernels);
