//! Grid simulator for a nonrotating Morse-oscillator diatomic driven through
//! its dipole.
//!
//! The field-free Hamiltonian `H₀ = −α ∂²/∂r² + V(r)` (α = 1/2m, ħ = 1) is
//! discretised with a central finite-difference stencil on a hard-wall grid.
//! Its eigensystem is computed once; a step under a frozen field `E` is the
//! symmetric split `e^{iμE dt/2} e^{−iH₀ dt} e^{iμE dt/2}`, which is unitary
//! and exact when `E = 0`.
//!
//! The optical response is the dipole acceleration `d²⟨μ⟩/dt² = −⟨[H,[H,μ]]⟩`.
//! It is affine in the field, `R = −b(ψ) + c(ψ)·E`, where on the grid
//!
//! ```text
//! b = α²⟨[L,[L,μ]]⟩ − α⟨[V,[L,μ]]⟩      (continuum: α⟨𝓑⟩)
//! c = −α⟨[μ,[L,μ]]⟩                     (continuum: 2α⟨μ′²⟩)
//! ```
//!
//! with `L` the same Laplacian stencil the propagator uses, so the response is
//! the exact second derivative of `⟨μ⟩` for the simulated dynamics. The
//! continuum expression with analytic dipole derivatives is available from
//! [`analytic_response_terms`] for comparison.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Basis, StateVector};
use crate::units::{convert, Unit, UnitSystem};

/// `μ(r) = M₀ (1+x)³ / (1 + Σ eᵢ xⁱ)`, `x = (r − r_e)/r_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadeDipole {
    /// Dipole at equilibrium, atomic units.
    pub m0: f64,
    pub coefficients: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n_points: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl RadialGrid {
    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.spacing()
    }
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self { n_points: 100, r_min: 0.25, r_max: 12.25 }
    }
}

/// Central-difference stencil for ∂²/∂r².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticStencil {
    #[default]
    SecondOrder,
    FourthOrder,
}

impl KineticStencil {
    /// Coefficients `[c₀, c₁, …]` of `Σ_d c_d ψ_{i±d} / h²`.
    fn coefficients(self) -> &'static [f64] {
        match self {
            KineticStencil::SecondOrder => &[-2.0, 1.0],
            KineticStencil::FourthOrder => &[-2.5, 4.0 / 3.0, -1.0 / 12.0],
        }
    }
}

/// Physical parameters of one molecular species, atomic units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseSpec {
    /// Reduced mass (electron masses).
    pub mass: f64,
    /// Well depth D (hartree).
    pub well_depth: f64,
    /// Width α (1/bohr).
    pub width: f64,
    /// Equilibrium bond length r_e (bohr).
    pub r_eq: f64,
    pub dipole: PadeDipole,
    pub grid: RadialGrid,
    #[serde(default)]
    pub stencil: KineticStencil,
}

impl MorseSpec {
    /// Fictional isotopologue family: r_e = 1.3 Å, D = 37 000 cm⁻¹,
    /// ω_e = 3000 cm⁻¹, B_e = 11 cm⁻¹, M₀ = 0.5 D, e = (2, 2, 2, 12).
    pub fn diatomic(mass: f64, units: &UnitSystem) -> Result<Self> {
        let r_eq = convert(1.3, Unit::Angstrom, Unit::Bohr, units)?;
        let well_depth = convert(37_000.0, Unit::Wavenumber, Unit::Hartree, units)?;
        let (we, be, d) = (3000.0, 11.0, 37_000.0);
        let width = we / (2.0 * r_eq * f64::sqrt(be * d));
        let m0 = convert(0.5, Unit::Debye, Unit::AuDipole, units)?;
        let spec = Self {
            mass,
            well_depth,
            width,
            r_eq,
            dipole: PadeDipole { m0, coefficients: [2.0, 2.0, 2.0, 12.0] },
            grid: RadialGrid::default(),
            stencil: KineticStencil::SecondOrder,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("well depth", self.well_depth),
            ("width", self.width),
            ("equilibrium length", self.r_eq),
            ("dipole M0", self.dipole.m0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid.n_points < 3 {
            return Err(Error::invalid("radial grid needs at least 3 points"));
        }
        if !(self.grid.r_min < self.r_eq && self.r_eq < self.grid.r_max) {
            return Err(Error::invalid(format!(
                "equilibrium length {} outside grid [{}, {}]",
                self.r_eq, self.grid.r_min, self.grid.r_max
            )));
        }
        Ok(())
    }

    /// Kinetic prefactor ħ²/2m.
    pub fn kinetic_prefactor(&self) -> f64 {
        0.5 / self.mass
    }

    /// Harmonic angular frequency α√(2D/m).
    pub fn harmonic_frequency(&self) -> f64 {
        self.width * (2.0 * self.well_depth / self.mass).sqrt()
    }

    /// Exact Morse level `−D + ω(n+½) − ω²(n+½)²/4D`.
    pub fn exact_level(&self, n: usize) -> f64 {
        let w = self.harmonic_frequency();
        let v = n as f64 + 0.5;
        -self.well_depth + w * v - (w * v).powi(2) / (4.0 * self.well_depth)
    }

    /// Floor on the dipole-gradient expectation below which tracking is singular.
    pub fn singularity_floor(&self) -> f64 {
        1e-14 * self.dipole.m0 * self.dipole.m0 / (self.r_eq * self.r_eq)
    }
}

pub fn morse_potential(r: f64, spec: &MorseSpec) -> f64 {
    let e = (-spec.width * (r - spec.r_eq)).exp();
    spec.well_depth * (1.0 - e) * (1.0 - e) - spec.well_depth
}

fn morse_gradient(r: f64, spec: &MorseSpec) -> f64 {
    let e = (-spec.width * (r - spec.r_eq)).exp();
    2.0 * spec.well_depth * spec.width * e * (1.0 - e)
}

/// Radius where the potential reaches `−3D/4` on the outer side.
pub fn three_quarter_depth_radius(spec: &MorseSpec) -> f64 {
    spec.r_eq + LN_2 / spec.width
}

pub fn dipole(r: f64, spec: &MorseSpec) -> f64 {
    dipole_derivatives(r, spec).map(|d| d[0]).unwrap_or(f64::NAN)
}

/// `[μ, μ′, μ″, μ‴, μ⁗]` at `r` by repeated quotient rule.
pub fn dipole_derivatives(r: f64, spec: &MorseSpec) -> Result<[f64; 5]> {
    let re = spec.r_eq;
    let x = (r - re) / re;
    let [e1, e2, e3, e4] = spec.dipole.coefficients;
    let u = 1.0 + x;
    let num = [u * u * u, 3.0 * u * u, 6.0 * u, 6.0, 0.0];
    let den = [
        1.0 + x * (e1 + x * (e2 + x * (e3 + x * e4))),
        e1 + x * (2.0 * e2 + x * (3.0 * e3 + x * 4.0 * e4)),
        2.0 * e2 + x * (6.0 * e3 + x * 12.0 * e4),
        6.0 * e3 + 24.0 * e4 * x,
        24.0 * e4,
    ];
    if !(den[0].is_finite() && den[0].abs() > 1e-12) {
        return Err(Error::ModelConstruction(format!(
            "dipole denominator vanishes at r = {r}"
        )));
    }
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut q = [0.0; 5];
    for n in 0..5 {
        let mut acc = num[n];
        for k in 1..=n {
            acc -= BINOM[n][k] * den[k] * q[n - k];
        }
        q[n] = acc / den[0];
    }
    let mut out = [0.0; 5];
    let mut scale = spec.dipole.m0;
    for n in 0..5 {
        out[n] = q[n] * scale;
        scale /= re;
    }
    Ok(out)
}

/// Field-free eigensystem of the grid Hamiltonian, ascending.
#[derive(Debug, Clone)]
struct Eigensystem {
    values: Vec<f64>,
    /// Row-major: `vectors[i * n + j]` is component `i` of eigenvector `j`.
    vectors: Vec<f64>,
}

/// Grid-sampled potential, dipole and derivatives, plus the discretised
/// field-free Hamiltonian of one species.
#[derive(Debug, Clone)]
pub struct GridOperators {
    pub r: Vec<f64>,
    pub spacing: f64,
    pub potential: Vec<f64>,
    pub potential_gradient: Vec<f64>,
    /// `dipole[n][i]` = dⁿμ/drⁿ at grid point i, n = 0..=4.
    pub dipole: [Vec<f64>; 5],
    /// ħ²/2m.
    pub kinetic_prefactor: f64,
    /// Laplacian stencil scaled by 1/h², index = offset.
    pub laplacian: Vec<f64>,
    singularity_floor: f64,
    eigen: Eigensystem,
}

impl GridOperators {
    pub fn new(spec: &MorseSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.grid.n_points;
        let h = spec.grid.spacing();
        let r: Vec<f64> = (0..n).map(|i| spec.grid.point(i)).collect();
        let potential: Vec<f64> = r.iter().map(|&x| morse_potential(x, spec)).collect();
        let potential_gradient = r.iter().map(|&x| morse_gradient(x, spec)).collect();
        let mut dipole: [Vec<f64>; 5] = Default::default();
        for &x in &r {
            let d = dipole_derivatives(x, spec)?;
            for (k, v) in d.into_iter().enumerate() {
                dipole[k].push(v);
            }
        }
        if potential.iter().chain(&dipole[0]).any(|v| !v.is_finite()) {
            return Err(Error::ModelConstruction("non-finite potential or dipole on grid".into()));
        }
        let laplacian: Vec<f64> = spec.stencil.coefficients().iter().map(|c| c / (h * h)).collect();
        let kinetic_prefactor = spec.kinetic_prefactor();

        let mut ops = Self {
            r,
            spacing: h,
            potential,
            potential_gradient,
            dipole,
            kinetic_prefactor,
            laplacian,
            singularity_floor: spec.singularity_floor(),
            eigen: Eigensystem { values: vec![], vectors: vec![] },
        };
        ops.eigen = ops.diagonalize()?;
        Ok(ops)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Dense `H₀ − μE`.
    pub fn hamiltonian(&self, field: f64) -> DMatrix<f64> {
        let n = self.len();
        let a = self.kinetic_prefactor;
        DMatrix::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j);
            let mut v = if d < self.laplacian.len() { -a * self.laplacian[d] } else { 0.0 };
            if i == j {
                v += self.potential[i] - self.dipole[0][i] * field;
            }
            v
        })
    }

    fn diagonalize(&self) -> Result<Eigensystem> {
        let n = self.len();
        let eig = SymmetricEigen::try_new(self.hamiltonian(0.0), f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("grid Hamiltonian eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = vec![0.0; n * n];
        for (j, &k) in order.iter().enumerate() {
            let col = eig.eigenvectors.column(k);
            // fix the arbitrary sign: positive total amplitude
            let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                vectors[i * n + j] = sign * col[i];
            }
        }
        Ok(Eigensystem { values, vectors })
    }

    /// Field-free grid eigenvalues, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Field-free eigenvector `j`.
    pub fn eigenstate(&self, j: usize) -> StateVector {
        let n = self.len();
        let v: Vec<f64> = (0..n).map(|i| self.eigen.vectors[i * n + j]).collect();
        StateVector::from_real(&v, Basis::PositionGrid)
    }

    /// `L ψ` with the Laplacian stencil, hard walls.
    fn apply_laplacian(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = psi.len();
        for i in 0..n {
            let mut acc = psi[i] * self.laplacian[0];
            for (d, &c) in self.laplacian.iter().enumerate().skip(1) {
                if i >= d {
                    acc += psi[i - d] * c;
                }
                if i + d < n {
                    acc += psi[i + d] * c;
                }
            }
            out[i] = acc;
        }
    }
}

/// Unit-norm field-free ground state and its energy.
pub fn ground_state(spec: &MorseSpec) -> Result<(StateVector, f64)> {
    let ops = GridOperators::new(spec)?;
    Ok((ops.eigenstate(0), ops.levels()[0]))
}

/// Advance `psi` by `dt` under `H₀ − μE` with `E` frozen over the step.
pub fn propagate_step(ops: &GridOperators, psi: &mut StateVector, field: f64, dt: f64) {
    let n = ops.len();
    debug_assert_eq!(psi.len(), n);
    let amps = &mut psi.amplitudes;
    let half_kick = |amps: &mut [Complex64]| {
        if field != 0.0 {
            for (c, &mu) in amps.iter_mut().zip(&ops.dipole[0]) {
                *c *= Complex64::from_polar(1.0, mu * field * dt * 0.5);
            }
        }
    };
    half_kick(amps);

    let w = &ops.eigen.vectors;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let p = amps[i];
        let row = &w[i * n..(i + 1) * n];
        for (c, &wij) in coeffs.iter_mut().zip(row) {
            *c += p * wij;
        }
    }
    for (c, &e) in coeffs.iter_mut().zip(&ops.eigen.values) {
        *c *= Complex64::from_polar(1.0, -e * dt);
    }
    for i in 0..n {
        let row = &w[i * n..(i + 1) * n];
        amps[i] = row.iter().zip(&coeffs).map(|(&wij, c)| c * wij).sum();
    }

    half_kick(amps);
}

/// Field-independent and field-linear parts of the response, `R = −b + c·E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseTerms {
    /// Field-free dipole acceleration with opposite sign (α⟨𝓑⟩).
    pub drift: f64,
    /// Coefficient of the field (2α⟨μ′²⟩).
    pub coupling: f64,
}

impl ResponseTerms {
    pub fn response(&self, field: f64) -> f64 {
        -self.drift + self.coupling * field
    }
}

/// Response terms from the grid commutators.
pub fn response_terms(ops: &GridOperators, psi: &StateVector) -> ResponseTerms {
    let psi = &psi.amplitudes;
    let n = psi.len();
    let mu = &ops.dipole[0];
    let v = &ops.potential;
    let a = ops.kinetic_prefactor;

    // Σ_{i≠j} ψᵢ*ψⱼ L_ij f(i,j) for symmetric f, folded onto i < j.
    let mut coupling = 0.0;
    let mut v_comm = 0.0;
    for (d, &l) in ops.laplacian.iter().enumerate().skip(1) {
        for i in 0..n.saturating_sub(d) {
            let j = i + d;
            let overlap = 2.0 * (psi[i].conj() * psi[j]).re * l;
            let dmu = mu[i] - mu[j];
            coupling += overlap * dmu * dmu;
            v_comm -= overlap * (v[i] - v[j]) * dmu;
        }
    }

    // ⟨[L,K]⟩ = 2 Re⟨Lψ|Kψ⟩ with K = [L,μ], (Kψ)ᵢ = Σⱼ L_ij (μⱼ − μᵢ) ψⱼ
    let mut lpsi = vec![Complex64::new(0.0, 0.0); n];
    ops.apply_laplacian(psi, &mut lpsi);
    let mut lk = 0.0;
    for i in 0..n {
        let mut kpsi = Complex64::new(0.0, 0.0);
        for (d, &l) in ops.laplacian.iter().enumerate().skip(1) {
            if i >= d {
                kpsi += psi[i - d] * (l * (mu[i - d] - mu[i]));
            }
            if i + d < n {
                kpsi += psi[i + d] * (l * (mu[i + d] - mu[i]));
            }
        }
        lk += (lpsi[i].conj() * kpsi).re;
    }
    lk *= 2.0;

    ResponseTerms {
        drift: a * a * lk - a * v_comm,
        coupling: a * coupling,
    }
}

/// Continuum response expression evaluated with analytic dipole derivatives
/// and central-difference ∂, ∂² on the grid.
pub fn analytic_response_terms(ops: &GridOperators, psi: &StateVector) -> ResponseTerms {
    let psi = &psi.amplitudes;
    let n = psi.len();
    let h = ops.spacing;
    let a = ops.kinetic_prefactor;
    let [_, d1, d2, d3, d4] = &ops.dipole;
    let mut lpsi = vec![Complex64::new(0.0, 0.0); n];
    ops.apply_laplacian(psi, &mut lpsi);
    let zero = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    let mut grad_sq = 0.0;
    for i in 0..n {
        let up = if i + 1 < n { psi[i + 1] } else { zero };
        let down = if i > 0 { psi[i - 1] } else { zero };
        let dpsi = (up - down) / (2.0 * h);
        let p2 = psi[i].norm_sqr();
        let op = psi[i] * (a * d4[i] + 2.0 * d1[i] * ops.potential_gradient[i])
            + dpsi * (4.0 * a * d3[i])
            + lpsi[i] * (4.0 * a * d2[i]);
        b += psi[i].conj() * op;
        grad_sq += p2 * d1[i] * d1[i];
    }
    ResponseTerms {
        drift: a * b.re,
        coupling: 2.0 * a * grad_sq,
    }
}

/// Optical response `d²⟨μ⟩/dt²` of `psi` under field `E`.
pub fn response(ops: &GridOperators, psi: &StateVector, field: f64) -> f64 {
    response_terms(ops, psi).response(field)
}

/// Field that makes the instantaneous response of `psi` vanish.
pub fn tracking_field(ops: &GridOperators, psi: &StateVector) -> Result<f64> {
    let terms = response_terms(ops, psi);
    let gradient = terms.coupling / (2.0 * ops.kinetic_prefactor);
    if !(gradient > ops.singularity_floor) {
        return Err(Error::Singularity { value: gradient, floor: ops.singularity_floor });
    }
    Ok(terms.drift / terms.coupling)
}
