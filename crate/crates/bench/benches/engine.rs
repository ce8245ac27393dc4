use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use qtraj_core::{
    build_action, derive_initial_state, integrate_fiqnl, integrate_quadrature, solve_basis, solve_energy, Convention, Grid,
    Microstate, Potential, RootPolicy, StepControl, Units,
};

fn harmonic() -> (Potential, Grid) {
    (Potential::harmonic(1.0).unwrap(), Grid::new(-1.5, 1.5, 3001).unwrap())
}

fn engine(c: &mut Criterion) {
    let (pot, grid) = harmonic();
    let units = Units::default();
    let ms = Microstate::new(0.5, 2.0, 0.0).unwrap();

    c.bench_function("numerov_basis_3001", |b| {
        b.iter(|| solve_basis(black_box(&pot), 0.5, grid, units, Convention::SlopeOne).unwrap())
    });

    let pair = solve_basis(&pot, 0.5, grid, units, Convention::SlopeOne).unwrap();
    c.bench_function("build_action_3001", |b| b.iter(|| build_action(black_box(&pair), ms).unwrap()));

    let field = build_action(&pair, ms).unwrap();
    c.bench_function("quadrature_arc", |b| b.iter(|| integrate_quadrature(black_box(&field), -0.95, 0.95, 0.0, 1e-10).unwrap()));

    let t_end = integrate_quadrature(&field, -0.95, 0.95, 0.0, 1e-10).unwrap().end().t;
    let initial = derive_initial_state(&field, -0.95).unwrap();
    c.bench_function("fiqnl_arc", |b| {
        b.iter(|| integrate_fiqnl(black_box(initial), &pot, 0.5, units, t_end, StepControl::adaptive(1e-9), None).unwrap())
    });

    let states = integrate_quadrature(&field, -0.95, 0.95, 0.0, 1e-10).unwrap().states;
    c.bench_function("solve_energy_per_state", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % states.len();
            solve_energy(black_box(&states[i]), &pot, units, RootPolicy::ClosestToClassical).unwrap()
        })
    });
}

criterion_group!(benches, engine);
criterion_main!(benches);
