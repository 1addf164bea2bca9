//! Exact-diagonalization simulator for the 1D Fermi-Hubbard ring with a
//! Peierls phase on the hopping,
//!
//! ```text
//! H(Φ) = −t₀ Σ_{jσ} (e^{−iΦ} c†_{jσ} c_{j+1,σ} + h.c.) + U Σ_j n_{j↑} n_{j↓}
//! ```
//!
//! in model units (energies in t₀, ħ = 1, lengths in ångström). States live in
//! the fixed-(N↑, N↓) Fock sector. The optical response is the current
//! `J = −i a t₀ ⟨e^{−iΦ} F − h.c.⟩` with `F = Σ_{jσ} c†_{jσ} c_{j+1,σ}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{expm_apply, lowest_eigenpair, KrylovOptions};
use crate::state::{Basis, StateVector};

type C = Complex64;

/// Below this neighbour magnitude the phase θ is treated as undefined.
pub const NEIGHBOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardSpec {
    pub sites: usize,
    pub n_up: usize,
    pub n_down: usize,
    /// Hopping energy t₀ in model units.
    pub hopping: f64,
    /// Onsite repulsion U in model units.
    pub interaction: f64,
    /// Lattice constant a (Å).
    pub lattice_constant: f64,
}

impl HubbardSpec {
    /// Half-filled ring with t₀ = 1 and a = 4 Å.
    pub fn half_filled(sites: usize, interaction: f64) -> Result<Self> {
        let spec = Self {
            sites,
            n_up: sites / 2,
            n_down: sites / 2,
            hopping: 1.0,
            interaction,
            lattice_constant: 4.0,
        };
        if !sites.is_multiple_of(2) {
            return Err(Error::invalid(format!("half filling needs an even site count, got {sites}")));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites > 16 {
            return Err(Error::invalid(format!("site count must be in 2..=16, got {}", self.sites)));
        }
        for (name, n) in [("up", self.n_up), ("down", self.n_down)] {
            if n < 1 || n > self.sites {
                return Err(Error::invalid(format!(
                    "{name} particle count {n} outside 1..={}",
                    self.sites
                )));
            }
        }
        if !(self.hopping.is_finite() && self.hopping > 0.0) {
            return Err(Error::invalid("hopping must be positive"));
        }
        if !(self.lattice_constant.is_finite() && self.lattice_constant > 0.0) {
            return Err(Error::invalid("lattice constant must be positive"));
        }
        if !self.interaction.is_finite() {
            return Err(Error::invalid("interaction must be finite"));
        }
        Ok(())
    }
}

/// Single-spin hop: target configuration index and fermionic sign.
type Hop = (u32, f64);

/// Configurations of one spin species with hop tables for `F_σ` and `F_σ†`.
#[derive(Debug, Clone)]
struct SpinSector {
    states: Vec<u32>,
    /// `into[x]`: sources `y` with `F_σ|y⟩ = s|x⟩`.
    into: Vec<Vec<Hop>>,
    /// `from[x]`: targets `y` with `F_σ|x⟩ = s|y⟩`.
    from: Vec<Vec<Hop>>,
}

impl SpinSector {
    fn new(sites: usize, count: usize) -> Self {
        let states: Vec<u32> =
            (0u32..1 << sites).filter(|s| s.count_ones() as usize == count).collect();
        let mut index = vec![u32::MAX; 1 << sites];
        for (i, &s) in states.iter().enumerate() {
            index[s as usize] = i as u32;
        }
        let mut into = vec![Vec::new(); states.len()];
        let mut from = vec![Vec::new(); states.len()];
        for (y, &s) in states.iter().enumerate() {
            for j in 0..sites {
                let k = (j + 1) % sites;
                // c†_j c_k needs k occupied and j empty
                if s >> k & 1 == 1 && s >> j & 1 == 0 {
                    let target = s ^ (1 << j) ^ (1 << k);
                    let (lo, hi) = (j.min(k), j.max(k));
                    let between = (s >> (lo + 1)) & ((1u32 << (hi - lo - 1)) - 1);
                    let sign = if between.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                    let x = index[target as usize];
                    into[x as usize].push((y as u32, sign));
                    from[y].push((x, sign));
                }
            }
        }
        Self { states, into, from }
    }
}

/// Fixed-(N↑, N↓) Fock basis in lexicographic (up, down) order:
/// index = i↑·dim↓ + i↓.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    up: SpinSector,
    down: SpinSector,
    double_occupancy: Vec<f64>,
}

impl FockBasis {
    pub fn dim(&self) -> usize {
        self.up.states.len() * self.down.states.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// `(up, down)` occupation bit patterns of basis state `i`.
    pub fn configuration(&self, i: usize) -> (u32, u32) {
        let nd = self.down.states.len();
        (self.up.states[i / nd], self.down.states[i % nd])
    }

    /// Number of doubly occupied sites in each basis state.
    pub fn double_occupancy(&self) -> &[f64] {
        &self.double_occupancy
    }
}

pub fn build_basis(sites: usize, n_up: usize, n_down: usize) -> Result<FockBasis> {
    if !(2..=16).contains(&sites) {
        return Err(Error::invalid(format!("site count must be in 2..=16, got {sites}")));
    }
    if n_up > sites || n_down > sites {
        return Err(Error::invalid(format!(
            "particle counts ({n_up}, {n_down}) exceed {sites} sites"
        )));
    }
    let up = SpinSector::new(sites, n_up);
    let down = SpinSector::new(sites, n_down);
    let double_occupancy = up
        .states
        .iter()
        .flat_map(|&u| down.states.iter().map(move |&d| (u & d).count_ones() as f64))
        .collect();
    Ok(FockBasis { sites, up, down, double_occupancy })
}

/// Runs `f(i↑, row)` over rows of fixed up-configuration, in parallel for large sectors.
fn for_rows<F>(out: &mut [C], nd: usize, f: F)
where
    F: Fn(usize, &mut [C]) + Sync + Send,
{
    if out.len() >= PARALLEL_DIM {
        out.par_chunks_mut(nd).enumerate().for_each(|(iu, row)| f(iu, row));
    } else {
        out.chunks_mut(nd).enumerate().for_each(|(iu, row)| f(iu, row));
    }
}

const PARALLEL_DIM: usize = 1 << 13;

impl FockBasis {
    /// `out = hop·F ψ + conj(hop)·F† ψ + U·D ψ`.
    fn apply_with_hop(&self, hop: C, interaction: f64, psi: &[C], out: &mut [C]) {
        let nd = self.down.states.len();
        let back = hop.conj();
        for_rows(out, nd, |iu, row| {
            for (id, o) in row.iter_mut().enumerate() {
                let x = iu * nd + id;
                let mut f = C::new(0.0, 0.0);
                let mut fd = C::new(0.0, 0.0);
                for &(y, s) in &self.up.into[iu] {
                    f += psi[y as usize * nd + id] * s;
                }
                for &(y, s) in &self.down.into[id] {
                    f += psi[iu * nd + y as usize] * s;
                }
                for &(y, s) in &self.up.from[iu] {
                    fd += psi[y as usize * nd + id] * s;
                }
                for &(y, s) in &self.down.from[id] {
                    fd += psi[iu * nd + y as usize] * s;
                }
                *o = hop * f + back * fd + psi[x] * (interaction * self.double_occupancy[x]);
            }
        });
    }

    /// `F ψ` for `F = Σ_{jσ} c†_{jσ} c_{j+1,σ}`.
    fn apply_forward(&self, psi: &[C], out: &mut [C]) {
        let nd = self.down.states.len();
        for_rows(out, nd, |iu, row| {
            for (id, o) in row.iter_mut().enumerate() {
                let mut f = C::new(0.0, 0.0);
                for &(y, s) in &self.up.into[iu] {
                    f += psi[y as usize * nd + id] * s;
                }
                for &(y, s) in &self.down.into[id] {
                    f += psi[iu * nd + y as usize] * s;
                }
                *o = f;
            }
        });
    }

    /// `F† ψ`.
    fn apply_backward(&self, psi: &[C], out: &mut [C]) {
        let nd = self.down.states.len();
        for_rows(out, nd, |iu, row| {
            for (id, o) in row.iter_mut().enumerate() {
                let mut f = C::new(0.0, 0.0);
                for &(y, s) in &self.up.from[iu] {
                    f += psi[y as usize * nd + id] * s;
                }
                for &(y, s) in &self.down.from[id] {
                    f += psi[iu * nd + y as usize] * s;
                }
                *o = f;
            }
        });
    }
}

/// `H(Φ)|ψ⟩`.
pub fn apply_hamiltonian(
    spec: &HubbardSpec,
    basis: &FockBasis,
    phi: f64,
    psi: &StateVector,
) -> Result<StateVector> {
    psi.check_dim(basis.dim(), Basis::Fock)?;
    let mut out = vec![C::new(0.0, 0.0); basis.dim()];
    let hop = C::from_polar(-spec.hopping, -phi);
    basis.apply_with_hop(hop, spec.interaction, &psi.amplitudes, &mut out);
    Ok(StateVector::new(out, Basis::Fock))
}

/// Field-free ground state by Lanczos, with its energy.
pub fn ground_state(spec: &HubbardSpec, basis: &FockBasis) -> Result<(StateVector, f64)> {
    let n = basis.dim();
    // deterministic, generic real start vector
    let start: Vec<C> = (0..n)
        .map(|i| C::new(1.0 + 0.5 * (0.7 * i as f64 + 0.3).sin(), 0.0))
        .collect();
    let hop = C::new(-spec.hopping, 0.0);
    let apply = |x: &[C], y: &mut [C]| basis.apply_with_hop(hop, spec.interaction, x, y);
    let (e, mut v) = lowest_eigenpair(apply, &start, 1e-9, 200)?;
    // real Hamiltonian: rotate away the arbitrary global phase
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|c| *c *= rot);
    let mut psi = StateVector::new(v, Basis::Fock);
    psi.normalize()?;
    Ok((psi, e))
}

/// `⟨F⟩ = K e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborExpectation {
    pub magnitude: f64,
    /// Phase in (−π, π].
    pub phase: f64,
}

impl NeighborExpectation {
    pub fn from_complex(z: C) -> Self {
        let mut phase = z.arg();
        if phase <= -PI {
            phase += 2.0 * PI;
        }
        Self { magnitude: z.norm(), phase }
    }

    pub fn value(&self) -> C {
        C::from_polar(self.magnitude, self.phase)
    }

    fn checked(self) -> Result<Self> {
        if self.magnitude < NEIGHBOR_FLOOR {
            Err(Error::DegenerateState(self.magnitude))
        } else {
            Ok(self)
        }
    }
}

fn forward_expectation(basis: &FockBasis, psi: &[C]) -> C {
    let mut f = vec![C::new(0.0, 0.0); psi.len()];
    basis.apply_forward(psi, &mut f);
    psi.iter().zip(&f).map(|(a, b)| a.conj() * b).sum()
}

/// Polar form of `⟨Σ_{jσ} c†_{jσ} c_{j+1,σ}⟩`; errors if the magnitude is below the floor.
pub fn neighbor_expectation(basis: &FockBasis, psi: &StateVector) -> Result<NeighborExpectation> {
    psi.check_dim(basis.dim(), Basis::Fock)?;
    NeighborExpectation::from_complex(forward_expectation(basis, &psi.amplitudes)).checked()
}

/// Current expectation from the operator `−i a t₀ (e^{−iΦ} F − e^{iΦ} F†)`.
pub fn current_response(spec: &HubbardSpec, basis: &FockBasis, psi: &StateVector, phi: f64) -> Result<f64> {
    psi.check_dim(basis.dim(), Basis::Fock)?;
    let n = basis.dim();
    let (mut f, mut fd) = (vec![C::new(0.0, 0.0); n], vec![C::new(0.0, 0.0); n]);
    basis.apply_forward(&psi.amplitudes, &mut f);
    basis.apply_backward(&psi.amplitudes, &mut fd);
    let e = C::from_polar(1.0, -phi);
    let j: C = psi
        .amplitudes
        .iter()
        .zip(f.iter().zip(&fd))
        .map(|(p, (a, b))| p.conj() * (e * a - e.conj() * b))
        .sum();
    Ok((C::new(0.0, -spec.lattice_constant * spec.hopping) * j).re)
}

/// `−2 a t₀ K sin(Φ − θ)`.
pub fn current_from_polar(spec: &HubbardSpec, neighbor: &NeighborExpectation, phi: f64) -> f64 {
    -2.0 * spec.lattice_constant * spec.hopping * neighbor.magnitude * (phi - neighbor.phase).sin()
}

fn tracking_ratio(neighbor: &NeighborExpectation, target: f64, a: f64, t0: f64) -> Result<f64> {
    neighbor.checked()?;
    let x = target / (2.0 * a * t0 * neighbor.magnitude);
    if !(x.abs() <= 1.0) {
        return Err(Error::Untrackable(x.abs()));
    }
    Ok(x)
}

/// `Φ_T = arcsin(−X) + θ`, `X = R_T / (2 a t₀ K)`, principal branch.
pub fn tracking_phase(neighbor: &NeighborExpectation, target: f64, a: f64, t0: f64) -> Result<f64> {
    let x = tracking_ratio(neighbor, target, a, t0)?;
    Ok((-x).asin() + neighbor.phase)
}

/// Advance under `H(Φ)` with `Φ` frozen over the step.
pub fn propagate_driven_step(
    spec: &HubbardSpec,
    basis: &FockBasis,
    psi: &mut StateVector,
    phi: f64,
    dt: f64,
    opts: &KrylovOptions,
) -> Result<()> {
    psi.check_dim(basis.dim(), Basis::Fock)?;
    let hop = C::from_polar(-spec.hopping, -phi);
    evolve(basis, hop, spec.interaction, psi, dt, opts)
}

/// Advance under the tracking Hamiltonian, whose hopping amplitude is
/// `P e^{−iθ}` with `P = −t₀(√(1−X²) + iX)`; returns the equivalent phase Φ_T.
pub fn propagate_tracking_step(
    spec: &HubbardSpec,
    basis: &FockBasis,
    psi: &mut StateVector,
    target: f64,
    dt: f64,
    opts: &KrylovOptions,
) -> Result<f64> {
    let neighbor = neighbor_expectation(basis, psi)?;
    let x = tracking_ratio(&neighbor, target, spec.lattice_constant, spec.hopping)?;
    let p = C::new((1.0 - x * x).sqrt(), x) * -spec.hopping;
    let hop = p * C::from_polar(1.0, -neighbor.phase);
    evolve(basis, hop, spec.interaction, psi, dt, opts)?;
    Ok((-x).asin() + neighbor.phase)
}

fn evolve(basis: &FockBasis, hop: C, u: f64, psi: &mut StateVector, dt: f64, opts: &KrylovOptions) -> Result<()> {
    let apply = |x: &[C], y: &mut [C]| basis.apply_with_hop(hop, u, x, y);
    expm_apply(apply, &mut psi.amplitudes, dt, opts)
}

/// Builds the basis for `spec`, validating it first.
pub fn basis_for_spec(spec: &HubbardSpec) -> Result<FockBasis> {
    spec.validate()?;
    build_basis(spec.sites, spec.n_up, spec.n_down)
}
