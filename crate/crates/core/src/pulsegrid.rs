//! Uniform time grids, sampled control fields and the pump-pulse generators.
//!
//! Sample `k` of a field applies over `[t_k, t_k + dt)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{convert, Unit, UnitSystem};

/// Relative tolerance used when comparing grid times and steps.
const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !t_start.is_finite() {
            return Err(Error::invalid("grid start must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        Ok(Self { t_start, dt, n_steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// End of the last step, `t_start + n_steps·dt`.
    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(|k| self.time(k))
    }

    /// Grid of the same step that starts where this one ends.
    pub fn following(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.t_end(), self.dt, n_steps)
    }

    fn same_step(&self, other: &TimeGrid) -> bool {
        (self.dt - other.dt).abs() <= GRID_TOL * self.dt.max(other.dt)
    }
}

pub fn make_time_grid(t_start: f64, dt: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(t_start, dt, n_steps)
}

/// What a control signal means to the species it drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Electric field in atomic units (dipole coupling).
    ElectricField,
    /// Dimensionless Peierls phase on the hopping terms.
    PeierlsPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    grid: TimeGrid,
    values: Vec<f64>,
    kind: FieldKind,
}

impl SampledField {
    pub fn new(grid: TimeGrid, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.n_steps() {
            return Err(Error::invalid(format!(
                "field has {} samples but grid has {} steps",
                values.len(),
                grid.n_steps()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite field sample at index {k}")));
        }
        Ok(Self { grid, values, kind })
    }

    /// Sample `f(t_k)` on every grid time.
    pub fn from_fn(grid: TimeGrid, kind: FieldKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect(), kind)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_spans(grid: &TimeGrid, duration: f64) -> Result<()> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!("pulse duration must be positive, got {duration}")));
    }
    let tol = GRID_TOL * duration.max(grid.dt());
    if grid.t_start() < -tol || grid.t_end() > duration + tol {
        return Err(Error::invalid(format!(
            "grid [{}, {}) extends beyond the pulse window [0, {duration})",
            grid.t_start(),
            grid.t_end()
        )));
    }
    Ok(())
}

/// `E0 sin²(πt/T) cos(ω t)` at a single time.
pub fn molecular_pump_value(e0: f64, duration: f64, omega: f64, t: f64) -> f64 {
    let s = (PI * t / duration).sin();
    e0 * s * s * (omega * t).cos()
}

/// Transform-limited molecular pump sampled on `grid`, which must lie in `[0, T)`.
pub fn pump_pulse_molecular(e0: f64, duration: f64, omega: f64, grid: &TimeGrid) -> Result<SampledField> {
    check_spans(grid, duration)?;
    SampledField::from_fn(*grid, FieldKind::ElectricField, |t| {
        molecular_pump_value(e0, duration, omega, t)
    })
}

/// Peierls-phase drive `A sin²(πt/T) sin(ω t)` in lattice model units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDrive {
    /// Peak phase `a·E0/ω0` (dimensionless).
    pub amplitude: f64,
    /// Carrier angular frequency in t₀/ħ.
    pub omega: f64,
}

impl PhaseDrive {
    /// Convert a physical field amplitude, carrier frequency and lattice constant.
    pub fn from_physical(
        e0_mv_per_cm: f64,
        omega0_thz: f64,
        lattice_constant_angstrom: f64,
        units: &UnitSystem,
    ) -> Result<Self> {
        if !(omega0_thz.is_finite() && omega0_thz > 0.0) {
            return Err(Error::invalid(format!("carrier frequency must be positive, got {omega0_thz}")));
        }
        let field = convert(e0_mv_per_cm, Unit::MegaVoltPerCm, Unit::ModelField, units)?;
        let omega = convert(omega0_thz, Unit::TeraHertz, Unit::ModelAngularFrequency, units)?;
        Ok(Self {
            amplitude: lattice_constant_angstrom * field / omega,
            omega,
        })
    }

    /// Duration of `n` carrier periods.
    pub fn periods(&self, n: f64) -> f64 {
        n * 2.0 * PI / self.omega
    }

    pub fn value(&self, duration: f64, t: f64) -> f64 {
        let s = (PI * t / duration).sin();
        self.amplitude * s * s * (self.omega * t).sin()
    }

    pub fn sample(&self, duration: f64, grid: &TimeGrid) -> Result<SampledField> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        check_spans(grid, duration)?;
        SampledField::from_fn(*grid, FieldKind::PeierlsPhase, |t| self.value(duration, t))
    }
}

/// Lattice pump phase from physical parameters, sampled on `grid` within `[0, T)`.
pub fn pump_phase_hubbard(
    e0_mv_per_cm: f64,
    omega0_thz: f64,
    lattice_constant_angstrom: f64,
    duration: f64,
    grid: &TimeGrid,
    units: &UnitSystem,
) -> Result<SampledField> {
    PhaseDrive::from_physical(e0_mv_per_cm, omega0_thz, lattice_constant_angstrom, units)?
        .sample(duration, grid)
}

/// Join contiguous segments sharing step and kind; samples are copied verbatim.
pub fn concat_pulses(segments: &[SampledField]) -> Result<SampledField> {
    let first = segments
        .first()
        .ok_or_else(|| Error::invalid("no segments to concatenate"))?;
    let mut values = Vec::with_capacity(segments.iter().map(SampledField::len).sum());
    values.extend_from_slice(&first.values);
    for pair in segments.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.kind != first.kind {
            return Err(Error::invalid("segments mix field kinds"));
        }
        if !next.grid.same_step(&first.grid) {
            return Err(Error::invalid(format!(
                "segment steps differ: {} vs {}",
                first.grid.dt(),
                next.grid.dt()
            )));
        }
        let gap = (next.grid.t_start() - prev.grid.t_end()).abs();
        if gap > 1e-9 * first.grid.dt() {
            return Err(Error::invalid(format!(
                "segment starting at {} does not follow one ending at {}",
                next.grid.t_start(),
                prev.grid.t_end()
            )));
        }
        values.extend_from_slice(&next.values);
    }
    let grid = TimeGrid::new(first.grid.t_start(), first.grid.dt(), values.len())?;
    SampledField::new(grid, values, first.kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = make_time_grid(0.0, 2.5, 1000).unwrap();
        assert_eq!(g.t_end(), 2500.0);
        assert_eq!(g.time(999), 2497.5);
        let single = make_time_grid(0.0, 1.0, 1).unwrap();
        assert_eq!(single.times().collect::<Vec<_>>(), vec![0.0]);
        assert!(make_time_grid(5.0, 0.0, 10).is_err());
        assert!(make_time_grid(5.0, -1.0, 10).is_err());
        assert!(make_time_grid(0.0, 1.0, 0).is_err());
    }

    fn we_au() -> f64 {
        convert(3000.0, Unit::Wavenumber, Unit::Hartree, &UnitSystem::default()).unwrap()
    }

    #[test]
    fn molecular_pump_envelope() {
        let g = make_time_grid(0.0, 2.5, 1000).unwrap();
        let p = pump_pulse_molecular(1e-5, 2500.0, we_au(), &g).unwrap();
        assert_eq!(p.values()[0], 0.0);
        let half = p.values()[500];
        assert!((half - 1e-5 * (we_au() * 1250.0).cos()).abs() < 1e-20);
    }

    #[test]
    fn molecular_pump_matches_high_precision_values() {
        // 40-digit evaluations of the closed form at selected samples.
        let expected = [
            (0usize, 0.0),
            (97, -8.8677948929262914075e-7),
            (250, -3.179395255224751926e-6),
            (333, 2.8054594995627059077e-6),
            (500, -1.9131566488434676486e-6),
            (613, -4.4248082051220871785e-6),
            (750, 4.3959314895916735103e-6),
            (888, 5.695208617522495645e-7),
            (901, 7.5867273497503077777e-7),
            (999, -9.0151047890430601975e-11),
        ];
        let g = make_time_grid(0.0, 2.5, 1000).unwrap();
        let p = pump_pulse_molecular(1e-5, 2500.0, we_au(), &g).unwrap();
        for (k, v) in expected {
            assert!((p.values()[k] - v).abs() <= 1e-12 * 1e-5, "sample {k}: {} vs {v}", p.values()[k]);
        }
    }

    #[test]
    fn molecular_pump_rejects_grid_past_duration() {
        let g = make_time_grid(0.0, 2.5, 1001).unwrap();
        assert!(pump_pulse_molecular(1e-5, 2500.0, 0.01, &g).is_err());
    }

    #[test]
    fn hubbard_pump_amplitude_and_zeros() {
        let units = UnitSystem::default();
        let drive = PhaseDrive::from_physical(10.0, 32.9, 4.0, &units).unwrap();
        assert!((drive.amplitude - 2.94).abs() < 5e-3, "{}", drive.amplitude);
        let duration = drive.periods(2.0);
        assert_eq!(drive.value(duration, 0.0), 0.0);
        assert!(drive.value(duration, duration).abs() < 1e-12);
        let g = make_time_grid(0.0, duration / 4000.0, 4000).unwrap();
        let f = pump_phase_hubbard(10.0, 32.9, 4.0, duration, &g, &units).unwrap();
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.kind(), FieldKind::PeierlsPhase);
        assert!(pump_phase_hubbard(10.0, 0.0, 4.0, duration, &g, &units).is_err());
    }

    #[test]
    fn concatenation() {
        let g0 = make_time_grid(0.0, 2.5, 1000).unwrap();
        let g1 = g0.following(1000).unwrap();
        let g2 = g1.following(1000).unwrap();
        let segs: Vec<_> = [g0, g1, g2]
            .iter()
            .enumerate()
            .map(|(i, g)| SampledField::from_fn(*g, FieldKind::ElectricField, |t| (t * 0.01 + i as f64).sin()).unwrap())
            .collect();
        let joined = concat_pulses(&segs).unwrap();
        assert_eq!(joined.len(), 3000);
        for (j, seg) in segs.iter().enumerate() {
            for (k, v) in seg.values().iter().enumerate() {
                assert_eq!(joined.values()[j * 1000 + k].to_bits(), v.to_bits());
            }
        }
        assert_eq!(concat_pulses(&segs[..1]).unwrap(), segs[0]);

        let other = make_time_grid(2500.0, 2.0, 10).unwrap();
        let bad = SampledField::from_fn(other, FieldKind::ElectricField, |_| 0.0).unwrap();
        assert!(concat_pulses(&[segs[0].clone(), bad]).is_err());
        let phase = SampledField::from_fn(g1, FieldKind::PeierlsPhase, |_| 0.0).unwrap();
        assert!(concat_pulses(&[segs[0].clone(), phase]).is_err());
        assert!(concat_pulses(&[segs[0].clone(), segs[2].clone()]).is_err());
        assert!(concat_pulses(&[]).is_err());
    }

    #[test]
    fn field_rejects_bad_samples() {
        let g = make_time_grid(0.0, 1.0, 3).unwrap();
        assert!(SampledField::new(g, vec![0.0; 2], FieldKind::ElectricField).is_err());
        assert!(SampledField::new(g, vec![0.0, f64::NAN, 0.0], FieldKind::ElectricField).is_err());
    }
}
