use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ssmc_core::estimator::{mixture_response, random_concentrations, solve_concentrations};
use ssmc_core::hubbard::{apply_hamiltonian, basis_for_spec, ground_state as lattice_ground, propagate_driven_step, HubbardSpec};
use ssmc_core::krylov::KrylovOptions;
use ssmc_core::morse::{ground_state, propagate_step, response, GridOperators, MorseSpec};
use nalgebra::DMatrix;
use ssmc_core::units::UnitSystem;

fn morse(c: &mut Criterion) {
    let spec = MorseSpec::diatomic(1800.0, &UnitSystem::default()).unwrap();
    let ops = GridOperators::new(&spec).unwrap();
    let (mut psi, _) = ground_state(&spec).unwrap();
    c.bench_function("morse_step_100", |b| b.iter(|| propagate_step(&ops, &mut psi, black_box(1e-5), 2.5)));
    c.bench_function("morse_response_100", |b| b.iter(|| response(&ops, &psi, black_box(1e-5))));
}

fn hubbard(c: &mut Criterion) {
    for sites in [6, 8] {
        let spec = HubbardSpec::half_filled(sites, 1.0).unwrap();
        let basis = basis_for_spec(&spec).unwrap();
        let (mut psi, _) = lattice_ground(&spec, &basis).unwrap();
        c.bench_function(&format!("hubbard_apply_L{sites}"), |b| {
            b.iter(|| apply_hamiltonian(&spec, &basis, black_box(0.3), &psi).unwrap())
        });
        let opts = KrylovOptions::default();
        c.bench_function(&format!("hubbard_step_L{sites}"), |b| {
            b.iter(|| propagate_driven_step(&spec, &basis, &mut psi, black_box(0.3), 0.006, &opts).unwrap())
        });
    }
}

fn estimator(c: &mut Criterion) {
    let a = DMatrix::from_fn(10_000, 10, |i, j| ((i * 31 + j * 7) as f64 * 0.013).sin() + if i % 10 == j { 1.0 } else { 0.0 });
    let y = random_concentrations(10, 3).unwrap();
    let r = mixture_response(&a, &y).unwrap();
    c.bench_function("svd_solve_10000x10", |b| b.iter(|| solve_concentrations(&a, black_box(&r)).unwrap()));
}

criterion_group!(benches, morse, hubbard, estimator);
criterion_main!(benches);
