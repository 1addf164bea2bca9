//! Mixture synthesis, noise, least-squares concentration recovery and the
//! conditioning/error diagnostics.
//!
//! Random draws use ChaCha8 seeded from a `u64`, with independent streams for
//! concentrations and noise. Gaussians come from `rand_distr::StandardNormal`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssmc::Method;

const CONCENTRATION_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Relative concentrations `y_s`; generated vectors lie on the simplex,
/// estimates are unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConcentrationVector(pub Vec<f64>);

impl ConcentrationVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Unit vector `e_s` of length `n`.
    pub fn unit(n: usize, s: usize) -> Result<Self> {
        if s >= n {
            return Err(Error::invalid(format!("index {s} out of range for {n} species")));
        }
        let mut v = vec![0.0; n];
        v[s] = 1.0;
        Ok(Self(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub y_true: ConcentrationVector,
    pub y_est: ConcentrationVector,
    pub epsilon: f64,
    pub cond_a: f64,
    pub noise_sigma_relative: f64,
    pub seed: u64,
    pub method: Method,
}

/// `R_mix = A y`.
pub fn mixture_response(a: &DMatrix<f64>, y: &ConcentrationVector) -> Result<DVector<f64>> {
    if a.ncols() != y.len() {
        return Err(Error::invalid(format!(
            "matrix has {} columns but {} concentrations were given",
            a.ncols(),
            y.len()
        )));
    }
    Ok(a * DVector::from_column_slice(y.as_slice()))
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma_rel·‖R‖∞`.
pub fn add_noise(r: &DVector<f64>, sigma_rel: f64, seed: u64) -> Result<DVector<f64>> {
    if !(sigma_rel.is_finite() && sigma_rel >= 0.0) {
        return Err(Error::invalid(format!("noise level must be non-negative, got {sigma_rel}")));
    }
    if sigma_rel == 0.0 {
        return Ok(r.clone());
    }
    let std = sigma_rel * r.amax();
    let mut g = rng(seed, NOISE_STREAM);
    Ok(r.map(|x| x + std * g.sample::<f64, _>(StandardNormal)))
}

/// Singular-value cutoff `ε·max(m, n)·σ_max`.
fn cutoff(a: &DMatrix<f64>, sigma_max: f64) -> f64 {
    f64::EPSILON * a.nrows().max(a.ncols()) as f64 * sigma_max
}

/// Least-squares `ȳ = argmin ‖Aȳ − R‖₂` through the truncated SVD pseudoinverse.
pub fn solve_concentrations(a: &DMatrix<f64>, r: &DVector<f64>) -> Result<ConcentrationVector> {
    if a.nrows() < a.ncols() {
        return Err(Error::invalid(format!(
            "system is underdetermined: {} rows for {} unknowns",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != r.len() {
        return Err(Error::invalid(format!("matrix has {} rows, data has {}", a.nrows(), r.len())));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cut = cutoff(a, sigma_max);
    if !(sigma_max > cut) {
        return Err(Error::RankDeficient(cut));
    }
    let y = svd.solve(r, cut).map_err(|e| Error::Numeric(e.to_owned()))?;
    Ok(ConcentrationVector(y.iter().copied().collect()))
}

/// `σ_max / σ_min`; infinite when `σ_min` is exactly zero.
pub fn condition_number(a: &DMatrix<f64>) -> Result<f64> {
    if a.is_empty() || a.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("condition number of a zero matrix"));
    }
    let s = a.singular_values();
    let (max, min) = (s.max(), s.min());
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// `ε = ‖y − ȳ‖₂`.
pub fn error_norm(y: &ConcentrationVector, y_est: &ConcentrationVector) -> Result<f64> {
    if y.len() != y_est.len() {
        return Err(Error::invalid(format!("lengths differ: {} vs {}", y.len(), y_est.len())));
    }
    Ok(y.0.iter().zip(&y_est.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Uniform(0, 1) draws normalised to sum to one.
pub fn random_concentrations(n_s: usize, seed: u64) -> Result<ConcentrationVector> {
    if n_s == 0 {
        return Err(Error::invalid("need at least one species"));
    }
    let mut g = rng(seed, CONCENTRATION_STREAM);
    let draws: Vec<f64> = (0..n_s).map(|_| g.sample(Open01)).collect();
    let total: f64 = draws.iter().sum();
    Ok(ConcentrationVector(draws.into_iter().map(|x| x / total).collect()))
}

/// Euclidean projection onto `{y ≥ 0, Σy = 1}`.
pub fn project_to_simplex(y: &ConcentrationVector) -> ConcentrationVector {
    let mut sorted = y.0.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    ConcentrationVector(y.0.iter().map(|&v| (v - shift).max(0.0)).collect())
}

/// Full pipeline: synthesise `A y`, add noise, solve, and report.
pub fn characterize(
    a: &DMatrix<f64>,
    y_true: &ConcentrationVector,
    sigma_rel: f64,
    seed: u64,
    method: Method,
) -> Result<EstimationReport> {
    let clean = mixture_response(a, y_true)?;
    let data = add_noise(&clean, sigma_rel, seed)?;
    let y_est = solve_concentrations(a, &data)?;
    Ok(EstimationReport {
        epsilon: error_norm(y_true, &y_est)?,
        cond_a: condition_number(a)?,
        y_true: y_true.clone(),
        y_est,
        noise_sigma_relative: sigma_rel,
        seed,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut g = rng(seed, 7);
        DMatrix::from_fn(rows, cols, |_, _| g.sample::<f64, _>(StandardNormal))
    }

    /// Cyclic Jacobi eigenvalues of a symmetric matrix.
    fn jacobi_eigenvalues(mut m: DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (a, b) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * a - s * b;
                        m[(k, q)] = s * a + c * b;
                    }
                    for k in 0..n {
                        let (a, b) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * a - s * b;
                        m[(q, k)] = s * a + c * b;
                    }
                }
            }
        }
        (0..n).map(|i| m[(i, i)]).collect()
    }

    #[test]
    fn mixture_is_weighted_column_sum() {
        let a = random_matrix(5, 2, 1);
        let e1 = mixture_response(&a, &ConcentrationVector::unit(2, 1).unwrap()).unwrap();
        assert_eq!(e1, a.column(1).into_owned());
        let zero = mixture_response(&a, &ConcentrationVector(vec![0.0, 0.0])).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        let mix = mixture_response(&a, &ConcentrationVector(vec![0.3, 0.7])).unwrap();
        for i in 0..5 {
            assert_eq!(mix[i], 0.3 * a[(i, 0)] + 0.7 * a[(i, 1)]);
        }
        assert!(mixture_response(&a, &ConcentrationVector(vec![1.0])).is_err());
    }

    #[test]
    fn noise_is_seeded_and_scaled() {
        let r = DVector::from_fn(100_000, |i, _| (i as f64 * 0.001).sin() * 3.0);
        assert_eq!(add_noise(&r, 0.0, 9).unwrap(), r);
        let a = add_noise(&r, 1e-3, 42).unwrap();
        assert_eq!(a, add_noise(&r, 1e-3, 42).unwrap());
        assert_ne!(a, add_noise(&r, 1e-3, 43).unwrap());
        let d = &a - &r;
        let mean = d.mean();
        let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        let target = 1e-3 * r.amax();
        assert!(((std - target) / target).abs() < 0.02, "{std} vs {target}");
        assert!(add_noise(&r, -1.0, 0).is_err());
    }

    #[test]
    fn exact_recovery_on_consistent_systems() {
        let a = random_matrix(40, 4, 3);
        let y = ConcentrationVector(vec![0.1, 0.2, 0.3, 0.4]);
        let est = solve_concentrations(&a, &mixture_response(&a, &y).unwrap()).unwrap();
        assert!(error_norm(&y, &est).unwrap() < 1e-10);
    }

    #[test]
    fn orthonormal_columns_give_projection() {
        let q = random_matrix(12, 3, 5).qr().q();
        let r = DVector::from_fn(12, |i, _| (i as f64).cos());
        let est = solve_concentrations(&q, &r).unwrap();
        let proj = q.transpose() * &r;
        for i in 0..3 {
            assert!((est.0[i] - proj[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_matches_grid_search() {
        let a = random_matrix(30, 3, 11);
        let r = DVector::from_fn(30, |i, _| (0.7 * i as f64).sin());
        let est = solve_concentrations(&a, &r).unwrap();
        let step = 0.02;
        let axis: Vec<f64> = (-40..=40).map(|k| k as f64 * step).collect();
        let mut best = (f64::INFINITY, [0.0; 3]);
        for &x in &axis {
            for &y in &axis {
                for &z in &axis {
                    let res = (&a * DVector::from_vec(vec![x, y, z]) - &r).norm_squared();
                    if res < best.0 {
                        best = (res, [x, y, z]);
                    }
                }
            }
        }
        for i in 0..3 {
            assert!((est.0[i] - best.1[i]).abs() <= step, "{:?} vs {:?}", est.0, best.1);
        }
    }

    #[test]
    fn rank_deficiency_reported() {
        let a = DMatrix::<f64>::zeros(4, 2);
        assert!(matches!(solve_concentrations(&a, &DVector::zeros(4)), Err(Error::RankDeficient(_))));
        assert!(solve_concentrations(&DMatrix::<f64>::zeros(1, 2), &DVector::zeros(1)).is_err());
    }

    #[test]
    fn condition_number_examples() {
        assert_eq!(condition_number(&DMatrix::<f64>::identity(4, 4)).unwrap(), 1.0);
        let mut d = DMatrix::<f64>::zeros(4, 2);
        d[(0, 0)] = 3.0;
        d[(1, 1)] = 1.0;
        assert!((condition_number(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!(condition_number(&DMatrix::<f64>::zeros(3, 3)).is_err());
        let mut singular = DMatrix::<f64>::zeros(3, 2);
        singular[(0, 0)] = 1.0;
        assert_eq!(condition_number(&singular).unwrap(), f64::INFINITY);
    }

    #[test]
    fn condition_number_matches_jacobi_oracle() {
        let a = random_matrix(20, 4, 17);
        let eig = jacobi_eigenvalues(a.transpose() * &a);
        let (max, min) = eig.iter().fold((f64::MIN, f64::MAX), |(hi, lo), &v| (hi.max(v), lo.min(v)));
        let expected = (max / min).sqrt();
        assert!(((condition_number(&a).unwrap() - expected) / expected).abs() < 1e-10);
    }

    #[test]
    fn error_norm_examples() {
        let y = ConcentrationVector(vec![1.0, 0.0]);
        assert_eq!(error_norm(&y, &y).unwrap(), 0.0);
        let z = ConcentrationVector(vec![0.0, 1.0]);
        assert!((error_norm(&y, &z).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(error_norm(&y, &ConcentrationVector(vec![1.0])).is_err());
    }

    #[test]
    fn random_concentrations_on_simplex() {
        let y = random_concentrations(7, 5).unwrap();
        assert!((y.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(y.0.iter().all(|&v| v > 0.0));
        assert_eq!(y, random_concentrations(7, 5).unwrap());
        assert_eq!(random_concentrations(1, 3).unwrap().0, vec![1.0]);
        assert!(random_concentrations(0, 3).is_err());
    }

    #[test]
    fn median_error_grows_with_noise() {
        let a = random_matrix(60, 3, 23);
        let y = random_concentrations(3, 1).unwrap();
        let median = |sigma: f64| {
            let mut e: Vec<f64> = (0..100)
                .map(|seed| characterize(&a, &y, sigma, seed, Method::Ssmc).unwrap().epsilon)
                .collect();
            e.sort_by(f64::total_cmp);
            0.5 * (e[49] + e[50])
        };
        let m: Vec<f64> = [0.0, 1e-4, 1e-3, 1e-2].iter().map(|&s| median(s)).collect();
        assert!(m.windows(2).all(|w| w[0] <= w[1]), "{m:?}");
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&ConcentrationVector(vec![0.8, 0.6, -0.1]));
        assert!((p.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.0.iter().all(|&v| v >= 0.0));
        assert!((p.0[0] - 0.6).abs() < 1e-12 && (p.0[1] - 0.4).abs() < 1e-12);
        let inside = ConcentrationVector(vec![0.25, 0.75]);
        assert_eq!(project_to_simplex(&inside), inside);
    }

    proptest! {
        #[test]
        fn residual_is_orthogonal_to_columns(seed in 0u64..500) {
            let a = random_matrix(25, 3, seed);
            let r = DVector::from_fn(25, |i, _| ((i as u64 + seed) as f64).sin());
            let y = solve_concentrations(&a, &r).unwrap();
            let grad = a.transpose() * (&a * DVector::from_vec(y.0) - &r);
            prop_assert!(grad.norm() <= 1e-8 * a.norm() * r.norm());
        }

        #[test]
        fn condition_number_at_least_one_and_scale_free(seed in 0u64..500, scale in 1e-3f64..1e3) {
            let a = random_matrix(10, 3, seed);
            let c = condition_number(&a).unwrap();
            prop_assert!(c >= 1.0);
            prop_assert!(((condition_number(&(&a * scale)).unwrap() - c) / c).abs() < 1e-10);
        }

        #[test]
        fn noise_free_recovery(seed in 0u64..500) {
            let a = random_matrix(20, 4, seed);
            let y = random_concentrations(4, seed).unwrap();
            let report = characterize(&a, &y, 0.0, seed, Method::Naive).unwrap();
            prop_assert!(report.epsilon < 1e-8);
            prop_assert!((report.epsilon - error_norm(&report.y_true, &report.y_est).unwrap()).abs() < 1e-12);
        }
    }
}
