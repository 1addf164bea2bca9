//! Lanczos ground state and Krylov-subspace exponential for Hermitian
//! operators given only by their action on a vector.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C, x: &[C], y: &mut [C]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Orthonormal Lanczos basis with tridiagonal projection `T`.
struct Lanczos {
    basis: Vec<Vec<C>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual after the last vector; zero on invariant subspace.
    residual: f64,
}

impl Lanczos {
    /// Up to `m` steps from unit vector `v0`, full reorthogonalisation.
    fn run<F>(apply: &F, v0: Vec<C>, m: usize) -> Self
    where
        F: Fn(&[C], &mut [C]),
    {
        let n = v0.len();
        let mut basis = vec![v0];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut w = vec![C::new(0.0, 0.0); n];
        let mut residual = 0.0;
        for j in 0..m {
            apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                }
            }
            residual = norm(&w);
            let scale = alpha.iter().map(|a| a.abs()).fold(1e-300, f64::max);
            if j + 1 == m || residual <= 1e-13 * scale || j + 1 == n {
                if residual <= 1e-13 * scale || j + 1 == n {
                    residual = 0.0;
                }
                break;
            }
            beta.push(residual);
            let next: Vec<C> = w.iter().map(|x| x / residual).collect();
            basis.push(next);
        }
        Self { basis, alpha, beta, residual }
    }

    fn tridiagonal(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let k = self.alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                self.alpha[i]
            } else if i.abs_diff(j) == 1 {
                self.beta[i.min(j)]
            } else {
                0.0
            }
        });
        SymmetricEigen::new(t)
    }

    /// `Σ_j c_j v_j`.
    fn combine(&self, coeffs: impl Iterator<Item = C>) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.basis[0].len()];
        for (c, v) in coeffs.zip(&self.basis) {
            axpy(c, v, &mut out);
        }
        out
    }
}

/// Lowest eigenpair of a Hermitian operator by restarted Lanczos.
///
/// Converged when the residual `‖Hx − λx‖` drops below `tol·max(1, |λ|)`.
pub fn lowest_eigenpair<F>(apply: F, start: &[C], tol: f64, max_restarts: usize) -> Result<(f64, Vec<C>)>
where
    F: Fn(&[C], &mut [C]),
{
    let n = start.len();
    let s = norm(start);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("Lanczos start vector must be nonzero"));
    }
    let mut x: Vec<C> = start.iter().map(|c| c / s).collect();
    let mut hx = vec![C::new(0.0, 0.0); n];
    let mut last = f64::INFINITY;
    for _ in 0..max_restarts {
        let lz = Lanczos::run(&apply, x, n.min(60));
        let eig = lz.tridiagonal();
        let (k, lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, &l)| (k, l))
            .expect("nonempty tridiagonal");
        let col = eig.eigenvectors.column(k);
        x = lz.combine(col.iter().map(|&c| C::new(c, 0.0)));
        let nx = norm(&x);
        x.iter_mut().for_each(|c| *c /= nx);
        apply(&x, &mut hx);
        let res = hx.iter().zip(&x).map(|(h, v)| (h - v * lambda).norm_sqr()).sum::<f64>().sqrt();
        last = res;
        if res <= tol * lambda.abs().max(1.0) {
            return Ok((lambda, x));
        }
    }
    Err(Error::Numeric(format!("Lanczos did not converge, residual {last:e}")))
}

/// Options for [`expm_apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub max_dim: usize,
    pub tol: f64,
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { max_dim: 30, tol: 1e-10, max_substeps: 1024 }
    }
}

/// `ψ ← exp(−iH dt) ψ`, splitting `dt` into substeps when the Krylov error
/// estimate exceeds the tolerance at the maximum subspace dimension.
pub fn expm_apply<F>(apply: F, psi: &mut [C], dt: f64, opts: &KrylovOptions) -> Result<()>
where
    F: Fn(&[C], &mut [C]),
{
    let mut remaining = dt;
    let mut h = dt;
    let mut substeps = 0;
    while remaining.abs() > 1e-15 * dt.abs() {
        h = if h.abs() > remaining.abs() { remaining } else { h };
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return Ok(());
        }
        let v0: Vec<C> = psi.iter().map(|c| c / beta0).collect();
        let lz = Lanczos::run(&apply, v0, opts.max_dim);
        let eig = lz.tridiagonal();
        let k = lz.alpha.len();
        // y = Q exp(−iΛh) Qᵀ e₁
        let phases: Vec<C> = (0..k)
            .map(|j| C::from_polar(eig.eigenvectors[(0, j)], -eig.eigenvalues[j] * h))
            .collect();
        let y: Vec<C> = (0..k)
            .map(|i| (0..k).map(|j| phases[j] * eig.eigenvectors[(i, j)]).sum())
            .collect();
        let err = lz.residual * y[k - 1].norm();
        if err > opts.tol && lz.residual > 0.0 {
            substeps += 1;
            if substeps > opts.max_substeps {
                return Err(Error::Numeric(format!("Krylov exponential not converged, error {err:e}")));
            }
            h *= 0.5;
            continue;
        }
        let out = lz.combine(y.into_iter());
        psi.iter_mut().zip(out).for_each(|(p, o)| *p = o * beta0);
        remaining -= h;
    }
    Ok(())
}
