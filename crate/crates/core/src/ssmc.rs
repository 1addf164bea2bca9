//! The sequential-suppression protocol: a pump segment followed by one
//! tracking segment per species, with every species' response recorded under
//! the shared pulse, plus the transform-limited baseline and the assembly of
//! the response matrix `A`.
//!
//! Step `k` applies control `u_k` over `[t_k, t_k + dt)`. The response sample
//! for step `k` is `R(ψ(t_k), u_k)`, taken before the state advances.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hubbard::{self, FockBasis, HubbardSpec};
use crate::krylov::KrylovOptions;
use crate::morse::{self, GridOperators, MorseSpec};
use crate::pulsegrid::{concat_pulses, FieldKind, SampledField, TimeGrid};
use crate::state::StateVector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Morse,
    Hubbard,
}

impl ModelFamily {
    pub fn field_kind(self) -> FieldKind {
        match self {
            ModelFamily::Morse => FieldKind::ElectricField,
            ModelFamily::Hubbard => FieldKind::PeierlsPhase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ssmc,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SpeciesSpec {
    Morse(MorseSpec),
    Hubbard(HubbardSpec),
}

impl SpeciesSpec {
    pub fn family(&self) -> ModelFamily {
        match self {
            SpeciesSpec::Morse(_) => ModelFamily::Morse,
            SpeciesSpec::Hubbard(_) => ModelFamily::Hubbard,
        }
    }

    /// Mass for molecules, onsite repulsion for lattices.
    pub fn order_key(&self) -> f64 {
        match self {
            SpeciesSpec::Morse(s) => s.mass,
            SpeciesSpec::Hubbard(s) => s.interaction,
        }
    }
}

/// Precomputed operators of one species.
#[derive(Debug, Clone)]
pub enum SpeciesModel {
    Morse(Box<GridOperators>),
    Hubbard { spec: HubbardSpec, basis: Box<FockBasis>, krylov: KrylovOptions },
}

impl SpeciesModel {
    pub fn build(spec: &SpeciesSpec) -> Result<Self> {
        Ok(match spec {
            SpeciesSpec::Morse(s) => SpeciesModel::Morse(Box::new(GridOperators::new(s)?)),
            SpeciesSpec::Hubbard(s) => SpeciesModel::Hubbard {
                spec: *s,
                basis: Box::new(hubbard::basis_for_spec(s)?),
                krylov: KrylovOptions::default(),
            },
        })
    }

    /// Dimension of this species' state vector.
    pub fn dim(&self) -> usize {
        match self {
            SpeciesModel::Morse(ops) => ops.len(),
            SpeciesModel::Hubbard { basis, .. } => basis.dim(),
        }
    }

    pub fn ground_state(&self) -> Result<StateVector> {
        match self {
            SpeciesModel::Morse(ops) => Ok(ops.eigenstate(0)),
            SpeciesModel::Hubbard { spec, basis, .. } => Ok(hubbard::ground_state(spec, basis)?.0),
        }
    }

    pub fn response(&self, psi: &StateVector, control: f64) -> Result<f64> {
        match self {
            SpeciesModel::Morse(ops) => Ok(morse::response(ops, psi, control)),
            SpeciesModel::Hubbard { spec, basis, .. } => hubbard::current_response(spec, basis, psi, control),
        }
    }

    /// Control value that zeroes this species' response in state `psi`.
    pub fn tracking_control(&self, psi: &StateVector) -> Result<f64> {
        match self {
            SpeciesModel::Morse(ops) => morse::tracking_field(ops, psi),
            SpeciesModel::Hubbard { spec, basis, .. } => {
                let nb = hubbard::neighbor_expectation(basis, psi)?;
                hubbard::tracking_phase(&nb, 0.0, spec.lattice_constant, spec.hopping)
            }
        }
    }

    pub fn driven_step(&self, psi: &mut StateVector, control: f64, dt: f64) -> Result<()> {
        match self {
            SpeciesModel::Morse(ops) => {
                morse::propagate_step(ops, psi, control, dt);
                Ok(())
            }
            SpeciesModel::Hubbard { spec, basis, krylov } => {
                hubbard::propagate_driven_step(spec, basis, psi, control, dt, krylov)
            }
        }
    }

    /// Step of the tracked species; lattices evolve under the tracking Hamiltonian.
    pub fn tracking_step(&self, psi: &mut StateVector, control: f64, dt: f64) -> Result<()> {
        match self {
            SpeciesModel::Morse(_) => self.driven_step(psi, control, dt),
            SpeciesModel::Hubbard { spec, basis, krylov } => {
                hubbard::propagate_tracking_step(spec, basis, psi, 0.0, dt, krylov).map(|_| ())
            }
        }
    }
}

/// One species in a protocol run: parameters, operators, live state and trace.
#[derive(Debug, Clone)]
pub struct SpeciesHandle {
    pub label: String,
    pub spec: SpeciesSpec,
    pub model: SpeciesModel,
    pub state: StateVector,
    pub trace: Vec<f64>,
}

impl SpeciesHandle {
    /// Species in its field-free ground state with an empty trace.
    pub fn new(label: impl Into<String>, spec: SpeciesSpec) -> Result<Self> {
        let model = SpeciesModel::build(&spec)?;
        let state = model.ground_state()?;
        Ok(Self { label: label.into(), spec, model, state, trace: Vec::new() })
    }

    /// Species resuming from a saved state.
    pub fn with_state(label: impl Into<String>, spec: SpeciesSpec, state: StateVector) -> Result<Self> {
        let model = SpeciesModel::build(&spec)?;
        let expected = model.dim();
        if state.len() != expected {
            return Err(Error::invalid(format!(
                "saved state has dimension {}, model needs {expected}",
                state.len()
            )));
        }
        Ok(Self { label: label.into(), spec, model, state, trace: Vec::new() })
    }
}

/// Sampled response of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTrace {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesEntry {
    pub label: String,
    pub spec: SpeciesSpec,
}

/// Sample window `[start, end)` and the species tracked in it (none for the pump).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub suppressed: Option<usize>,
    pub start: usize,
    pub end: usize,
}

/// Pulse together with every species' response under it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseLibrary {
    pub format_version: u32,
    pub method: Method,
    pub family: ModelFamily,
    pub species: Vec<SpeciesEntry>,
    pub pulse: SampledField,
    pub traces: Vec<ResponseTrace>,
    /// Empty for naive libraries.
    pub segments: Vec<Segment>,
    /// Suppression order as species indices; empty for naive libraries.
    pub order: Vec<usize>,
    /// Samples per segment.
    pub n_t: usize,
    /// Species-steps spent building this library.
    pub propagation_steps: usize,
    /// States after the last sample, needed to extend the library.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_states: Option<Vec<StateVector>>,
}

impl ResponseLibrary {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }
}

/// Species indices sorted by ascending mass or onsite repulsion.
pub fn default_order(species: &[SpeciesHandle]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..species.len()).collect();
    order.sort_by(|&a, &b| species[a].spec.order_key().total_cmp(&species[b].spec.order_key()));
    order
}

fn check_family(species: &[SpeciesHandle], kind: FieldKind) -> Result<ModelFamily> {
    if species.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 species, got {}", species.len())));
    }
    let family = species[0].spec.family();
    if species.iter().any(|s| s.spec.family() != family) {
        return Err(Error::invalid("species belong to different model families"));
    }
    if family.field_kind() != kind {
        return Err(Error::invalid(format!("{kind:?} cannot drive {family:?} species")));
    }
    Ok(family)
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!("order {order:?} is not a permutation of 0..{n}")));
        }
    }
    if order.len() != n {
        return Err(Error::invalid(format!("order {order:?} is not a permutation of 0..{n}")));
    }
    Ok(())
}

/// Record every response under `control`, then advance every species one step.
/// `tracked` evolves with its tracking step.
fn advance_all(
    species: &mut [SpeciesHandle],
    control: f64,
    dt: f64,
    tracked: Option<usize>,
    step: usize,
) -> Result<()> {
    species.par_iter_mut().enumerate().try_for_each(|(j, s)| {
        let r = s.model.response(&s.state, control).map_err(|e| e.at_step(&s.label, step))?;
        s.trace.push(r);
        let res = if tracked == Some(j) {
            s.model.tracking_step(&mut s.state, control, dt)
        } else {
            s.model.driven_step(&mut s.state, control, dt)
        };
        res.map_err(|e| e.at_step(&s.label, step))
    })
}

/// Run `n_t` steps tracking `tracked`; returns the emitted control samples.
fn tracked_segment(
    species: &mut [SpeciesHandle],
    tracked: usize,
    n_t: usize,
    dt: f64,
    first_step: usize,
) -> Result<Vec<f64>> {
    let mut controls = Vec::with_capacity(n_t);
    for k in 0..n_t {
        let step = first_step + k;
        let s = &species[tracked];
        let u = s.model.tracking_control(&s.state).map_err(|e| e.at_step(&s.label, step))?;
        advance_all(species, u, dt, Some(tracked), step)?;
        controls.push(u);
    }
    Ok(controls)
}

fn replay(species: &mut [SpeciesHandle], controls: &[f64], dt: f64, first_step: usize) -> Result<()> {
    for (k, &u) in controls.iter().enumerate() {
        advance_all(species, u, dt, None, first_step + k)?;
    }
    Ok(())
}

fn take_traces(species: &mut [SpeciesHandle], grid: TimeGrid) -> Vec<ResponseTrace> {
    species
        .iter_mut()
        .map(|s| ResponseTrace { grid, values: std::mem::take(&mut s.trace) })
        .collect()
}

fn entries(species: &[SpeciesHandle]) -> Vec<SpeciesEntry> {
    species.iter().map(|s| SpeciesEntry { label: s.label.clone(), spec: s.spec }).collect()
}

/// Pump, then one tracking segment per species in `order`.
pub fn run_ssmc(
    mut species: Vec<SpeciesHandle>,
    pump: &SampledField,
    order: &[usize],
    save_states: bool,
) -> Result<ResponseLibrary> {
    let family = check_family(&species, pump.kind())?;
    check_order(order, species.len())?;
    let n_t = pump.len();
    let dt = pump.grid().dt();
    let n_s = species.len();
    species.iter_mut().for_each(|s| s.trace.clear());

    replay(&mut species, pump.values(), dt, 0)?;
    let mut pieces = vec![pump.clone()];
    let mut segments = vec![Segment { suppressed: None, start: 0, end: n_t }];
    for (i, &tracked) in order.iter().enumerate() {
        let start = (i + 1) * n_t;
        let controls = tracked_segment(&mut species, tracked, n_t, dt, start)?;
        let grid = pieces.last().expect("pump present").grid().following(n_t)?;
        pieces.push(SampledField::new(grid, controls, pump.kind())?);
        segments.push(Segment { suppressed: Some(tracked), start, end: start + n_t });
    }
    let pulse = concat_pulses(&pieces)?;
    log::debug!("ssmc library: {n_s} species, {} samples", pulse.len());
    Ok(ResponseLibrary {
        format_version: FORMAT_VERSION,
        method: Method::Ssmc,
        family,
        species: entries(&species),
        traces: take_traces(&mut species, *pulse.grid()),
        pulse,
        segments,
        order: order.to_vec(),
        n_t,
        propagation_steps: (n_s + 1) * n_t * n_s,
        final_states: save_states.then(|| species.into_iter().map(|s| s.state).collect()),
    })
}

/// Append one species: replay the stored pulse on it, then track it for one
/// new segment while the stored species resume from their saved states.
/// Returns the extended library and the species-steps spent.
pub fn extend_library(lib: &ResponseLibrary, new_species: SpeciesHandle) -> Result<(ResponseLibrary, usize)> {
    if lib.method != Method::Ssmc {
        return Err(Error::invalid("only protocol libraries can be extended"));
    }
    let saved = lib
        .final_states
        .as_ref()
        .ok_or_else(|| Error::invalid("library has no saved final states"))?;
    if new_species.spec.family() != lib.family {
        return Err(Error::invalid("new species belongs to a different model family"));
    }
    let n_t = lib.n_t;
    let dt = lib.pulse.grid().dt();
    let old_len = lib.pulse.len();

    let mut newcomer = vec![new_species];
    newcomer[0].trace.clear();
    replay(&mut newcomer, lib.pulse.values(), dt, 0)?;
    let mut steps = old_len;

    let mut all: Vec<SpeciesHandle> = lib
        .species
        .iter()
        .zip(saved)
        .map(|(e, st)| SpeciesHandle::with_state(e.label.clone(), e.spec, st.clone()))
        .collect::<Result<_>>()?;
    let new_index = all.len();
    all.extend(newcomer);
    let prefix_new = std::mem::take(&mut all[new_index].trace);

    let controls = tracked_segment(&mut all, new_index, n_t, dt, old_len)?;
    steps += n_t * all.len();

    let grid = lib.pulse.grid().following(n_t)?;
    let pulse = concat_pulses(&[lib.pulse.clone(), SampledField::new(grid, controls, lib.pulse.kind())?])?;
    let full_grid = *pulse.grid();
    let mut traces: Vec<ResponseTrace> = lib
        .traces
        .iter()
        .zip(&mut all)
        .map(|(t, s)| {
            let mut values = t.values.clone();
            values.append(&mut s.trace);
            ResponseTrace { grid: full_grid, values }
        })
        .collect();
    let mut values = prefix_new;
    values.append(&mut all[new_index].trace);
    traces.push(ResponseTrace { grid: full_grid, values });

    let mut segments = lib.segments.clone();
    segments.push(Segment { suppressed: Some(new_index), start: old_len, end: old_len + n_t });
    let mut order = lib.order.clone();
    order.push(new_index);
    let species = entries(&all);
    Ok((
        ResponseLibrary {
            format_version: FORMAT_VERSION,
            method: Method::Ssmc,
            family: lib.family,
            species,
            pulse,
            traces,
            segments,
            order,
            n_t,
            propagation_steps: lib.propagation_steps + steps,
            final_states: Some(all.into_iter().map(|s| s.state).collect()),
        },
        steps,
    ))
}

/// Drive every species with one fixed pulse; the whole trace is usable data.
pub fn run_naive(mut species: Vec<SpeciesHandle>, pulse: &SampledField) -> Result<ResponseLibrary> {
    let family = check_family(&species, pulse.kind())?;
    species.iter_mut().for_each(|s| s.trace.clear());
    replay(&mut species, pulse.values(), pulse.grid().dt(), 0)?;
    let n_s = species.len();
    Ok(ResponseLibrary {
        format_version: FORMAT_VERSION,
        method: Method::Naive,
        family,
        species: entries(&species),
        traces: take_traces(&mut species, *pulse.grid()),
        pulse: pulse.clone(),
        segments: Vec::new(),
        order: Vec::new(),
        n_t: pulse.len() / n_s,
        propagation_steps: pulse.len() * n_s,
        final_states: None,
    })
}

/// Response matrix: for protocol libraries, rows are the post-pump segments in
/// segment order; column `s` is species `s`. Naive libraries use full traces.
pub fn assemble_a(lib: &ResponseLibrary, hard_zero_blocks: bool) -> Result<DMatrix<f64>> {
    let n_s = lib.n_species();
    if lib.traces.len() != n_s || lib.traces.iter().any(|t| t.values.len() != lib.pulse.len()) {
        return Err(Error::invalid("library traces are incomplete"));
    }
    match lib.method {
        Method::Naive => Ok(DMatrix::from_fn(lib.pulse.len(), n_s, |i, s| lib.traces[s].values[i])),
        Method::Ssmc => {
            let blocks: Vec<&Segment> = lib.segments.iter().filter(|s| s.suppressed.is_some()).collect();
            let n_t = lib.n_t;
            if blocks.len() != n_s || blocks.iter().any(|b| b.end - b.start != n_t) {
                return Err(Error::invalid("library segments do not cover every species once"));
            }
            Ok(DMatrix::from_fn(n_s * n_t, n_s, |i, s| {
                let block = blocks[i / n_t];
                if hard_zero_blocks && block.suppressed == Some(s) {
                    0.0
                } else {
                    lib.traces[s].values[block.start + i % n_t]
                }
            }))
        }
    }
}

/// Envelope of the transform-limited baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaiveEnvelope {
    /// One sin² lobe over the whole `n_s·T` window.
    #[default]
    Single,
    /// The pump shape repeated in every window of length `T`.
    Repeated,
}

/// Baseline pulse with `n_s·n_t` samples from a pump shape `f(duration, t)`.
pub fn naive_pulse(
    shape: impl Fn(f64, f64) -> f64,
    dt: f64,
    n_t: usize,
    n_s: usize,
    envelope: NaiveEnvelope,
    kind: FieldKind,
) -> Result<SampledField> {
    let grid = TimeGrid::new(0.0, dt, n_s * n_t)?;
    let segment = dt * n_t as f64;
    let values = (0..grid.n_steps())
        .map(|k| match envelope {
            NaiveEnvelope::Single => shape(segment * n_s as f64, grid.time(k)),
            NaiveEnvelope::Repeated => shape(segment, (k % n_t) as f64 * dt),
        })
        .collect();
    SampledField::new(grid, values, kind)
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}
