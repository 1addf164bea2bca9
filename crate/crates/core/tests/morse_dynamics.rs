use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ssmc_core::morse::{
    analytic_response_terms, dipole, ground_state, morse_potential, propagate_step, response,
    response_terms, tracking_field, GridOperators, MorseSpec, RadialGrid,
};
use ssmc_core::units::UnitSystem;

fn paper_spec() -> MorseSpec {
    MorseSpec::diatomic(1800.0, &UnitSystem::default()).unwrap()
}

fn small_spec() -> MorseSpec {
    let mut s = paper_spec();
    s.grid = RadialGrid { n_points: 32, r_min: 0.75, r_max: 8.5 };
    s
}

/// Dense `H₀ − μE` built from the closed forms, independently of `GridOperators`.
fn dense_hamiltonian(spec: &MorseSpec, field: f64) -> DMatrix<Complex64> {
    let n = spec.grid.n_points;
    let h = spec.grid.spacing();
    let a = 0.5 / spec.mass;
    DMatrix::from_fn(n, n, |i, j| {
        let r = spec.grid.r_min + i as f64 * h;
        let v = if i == j {
            2.0 * a / (h * h) + morse_potential(r, spec) - dipole(r, spec) * field
        } else if i.abs_diff(j) == 1 {
            -a / (h * h)
        } else {
            0.0
        };
        Complex64::new(v, 0.0)
    })
}

fn expm_step(h: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
    (h * Complex64::new(0.0, -dt)).exp()
}

#[test]
fn propagation_matches_dense_matrix_exponential() {
    let spec = small_spec();
    let ops = GridOperators::new(&spec).unwrap();
    let (mut psi, _) = ground_state(&spec).unwrap();
    let mut reference = DVector::from_vec(psi.amplitudes.clone());
    let (e0, w, dt) = (1e-5, 0.0137, 2.5);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let e = e0 * (w * k as f64 * dt).cos();
        propagate_step(&ops, &mut psi, e, dt);
        reference = expm_step(&dense_hamiltonian(&spec, e), dt) * reference;
        let diff: f64 = psi
            .amplitudes
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff);
    }
    assert!(worst < 1e-8, "state error {worst:e}");
}

#[test]
fn ground_energy_within_one_percent_of_exact_spectrum() {
    let spec = paper_spec();
    let (_, e) = ground_state(&spec).unwrap();
    let exact = spec.exact_level(0);
    assert!(((e - exact) / exact).abs() <= 0.01, "{e} vs {exact}");
}

/// Max |R(t_k) − Δ²⟨μ⟩/dt²| over a fixed window, field sampled at step midpoints.
fn consistency_error(dt: f64) -> f64 {
    let spec = paper_spec();
    let ops = GridOperators::new(&spec).unwrap();
    let (mut psi, _) = ground_state(&spec).unwrap();
    let duration = 400.0;
    let field = |t: f64| 2e-2 * (std::f64::consts::PI * t / duration).sin().powi(2) * (0.0137 * t).cos();
    let n = (duration / dt).round() as usize;
    let mut mu = Vec::with_capacity(n + 1);
    let mut r = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        mu.push(psi.expect_diagonal(&ops.dipole[0]));
        r.push(response(&ops, &psi, field(t)));
        propagate_step(&ops, &mut psi, field(t + 0.5 * dt), dt);
    }
    (1..n)
        .map(|k| (r[k] - (mu[k + 1] - 2.0 * mu[k] + mu[k - 1]) / (dt * dt)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn response_is_second_derivative_of_dipole_at_second_order() {
    let errs: Vec<f64> = [2.5, 1.25, 0.625].iter().map(|&dt| consistency_error(dt)).collect();
    let order = (errs[0] / errs[2]).log2() / 2.0;
    assert!(order >= 1.9, "errors {errs:?}, order {order}");
}

#[test]
fn grid_response_matches_dense_double_commutator() {
    let spec = small_spec();
    let ops = GridOperators::new(&spec).unwrap();
    let (mut psi, _) = ground_state(&spec).unwrap();
    for k in 0..200 {
        propagate_step(&ops, &mut psi, 5e-3 * (0.0137 * k as f64 * 2.5).cos(), 2.5);
    }
    let n = spec.grid.n_points;
    let mu = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(dipole(spec.grid.point(i), &spec), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let v = DVector::from_vec(psi.amplitudes.clone());
    for &e in &[0.0, 3e-3] {
        let h = dense_hamiltonian(&spec, e);
        let inner = &h * &mu - &mu * &h;
        let outer = &h * &inner - &inner * &h;
        let expected = -v.dotc(&(&outer * &v)).re;
        let got = response(&ops, &psi, e);
        assert!((got - expected).abs() < 1e-10 * expected.abs().max(1e-12), "{got} vs {expected}");
    }
}

#[test]
fn ground_state_tracking_expectations_match_independent_quadrature() {
    let spec = paper_spec();
    let ops = GridOperators::new(&spec).unwrap();
    let (psi, _) = ground_state(&spec).unwrap();
    let h = spec.grid.spacing();
    let a = spec.kinetic_prefactor();
    // μ′ by a five-point difference of the closed form; ψ real for the ground state
    let d1 = |r: f64| {
        let s = 1e-3;
        (dipole(r - 2.0 * s, &spec) - 8.0 * dipole(r - s, &spec) + 8.0 * dipole(r + s, &spec)
            - dipole(r + 2.0 * s, &spec))
            / (12.0 * s)
    };
    let p: Vec<f64> = psi.amplitudes.iter().map(|c| c.re).collect();
    let grad_sq: f64 = (0..p.len()).map(|i| p[i] * p[i] * d1(spec.grid.point(i)).powi(2)).sum();
    let analytic = analytic_response_terms(&ops, &psi);
    assert!((analytic.coupling - 2.0 * a * grad_sq).abs() < 1e-8 * analytic.coupling);
    assert!(grad_sq > 0.0 && h > 0.0);

    // a stationary state has no field-free dipole acceleration
    let grid = response_terms(&ops, &psi);
    assert!(grid.drift.abs() < 1e-9 * analytic.drift.abs(), "{grid:?}");
    assert!(tracking_field(&ops, &psi).unwrap().abs() < 1e-12);
}

#[test]
fn grid_and_continuum_response_converge_together() {
    let rel_gap = |n_points: usize| {
        let mut spec = paper_spec();
        spec.grid.n_points = n_points;
        let ops = GridOperators::new(&spec).unwrap();
        let (mut psi, _) = ground_state(&spec).unwrap();
        for k in 0..200 {
            propagate_step(&ops, &mut psi, 5e-3 * (0.0137 * k as f64 * 2.5).cos(), 2.5);
        }
        let (g, c) = (response_terms(&ops, &psi), analytic_response_terms(&ops, &psi));
        ((g.coupling - c.coupling) / c.coupling).abs() + ((g.drift - c.drift) / c.drift).abs()
    };
    let coarse = rel_gap(100);
    let fine = rel_gap(400);
    assert!(coarse < 0.5, "{coarse}");
    assert!(fine < coarse / 10.0, "{coarse} -> {fine}");
}
