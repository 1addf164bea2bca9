//! TOML experiment configuration.
//!
//! ```toml
//! model = "morse"            # or "hubbard"
//! n_species = 10
//! sigma_rel = 0.001
//! seeds = 50
//!
//! [morse]
//! reference_mass = 1800.0
//! mass_spread = 0.05
//! segment_duration = 2500.0  # a.u.
//! time_step = 2.5            # a.u.
//!
//! [scan]
//! axis = "T"
//! values = [1250.0, 2500.0, 5000.0]
//! ```
//!
//! Every field has a default, so an empty file describes the molecular
//! baseline. Durations are in atomic units for molecules and in pump periods
//! for lattices.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use ssmc_core::hubbard::HubbardSpec;
use ssmc_core::morse::{KineticStencil, MorseSpec, RadialGrid};
use ssmc_core::pulsegrid::{make_time_grid, molecular_pump_value, pump_pulse_molecular, FieldKind, PhaseDrive};
use ssmc_core::ssmc::{default_order, linspace, naive_pulse, NaiveEnvelope, SpeciesHandle, SpeciesSpec};
use ssmc_core::units::{convert, Unit, UnitSystem};
use ssmc_core::{ModelFamily, SampledField};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelFamily,
    pub n_species: usize,
    /// Suppression order as species indices; ascending mass or repulsion when absent.
    pub order: Option<Vec<usize>>,
    pub naive_envelope: NaiveEnvelope,
    /// Baseline pulse amplitude relative to the pump amplitude.
    pub naive_amplitude_scale: f64,
    pub hard_zero_blocks: bool,
    pub sigma_rel: f64,
    /// Number of random mixtures per scan point.
    pub seeds: u64,
    pub seed: u64,
    pub morse: MorseConfig,
    pub hubbard: HubbardConfig,
    pub scan: Option<ScanConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelFamily::Morse,
            n_species: 10,
            order: None,
            naive_envelope: NaiveEnvelope::Single,
            naive_amplitude_scale: 1.0,
            hard_zero_blocks: false,
            sigma_rel: 1e-3,
            seeds: 20,
            seed: 0,
            morse: MorseConfig::default(),
            hubbard: HubbardConfig::default(),
            scan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorseConfig {
    /// Heaviest reduced mass (electron masses).
    pub reference_mass: f64,
    /// Masses are evenly spaced over `[(1 − Δm) m_ref, m_ref]`.
    pub mass_spread: f64,
    /// Segment duration T (a.u.).
    pub segment_duration: f64,
    pub time_step: f64,
    /// Pump amplitude (a.u.).
    pub pump_amplitude: f64,
    /// Pump carrier (cm⁻¹).
    pub pump_carrier_wavenumber: f64,
    pub grid_points: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub stencil: KineticStencil,
}

impl Default for MorseConfig {
    fn default() -> Self {
        let grid = RadialGrid::default();
        Self {
            reference_mass: 1800.0,
            mass_spread: 0.05,
            segment_duration: 2500.0,
            time_step: 2.5,
            pump_amplitude: 1e-5,
            pump_carrier_wavenumber: 3000.0,
            grid_points: grid.n_points,
            r_min: grid.r_min,
            r_max: grid.r_max,
            stencil: KineticStencil::SecondOrder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HubbardConfig {
    pub sites: usize,
    /// Hopping energy t₀ (eV); sets the model units.
    pub hopping_ev: f64,
    /// Lattice constant (Å).
    pub lattice_constant: f64,
    /// Repulsion of the first species, in t₀.
    pub base_interaction: f64,
    /// Spacing Δ_U between consecutive species, in t₀.
    pub interaction_step: f64,
    /// When set, repulsions are evenly spaced over this closed range instead.
    pub interaction_range: Option<[f64; 2]>,
    /// Pump amplitude (MV/cm).
    pub pump_field: f64,
    /// Pump carrier (THz, cycle frequency).
    pub pump_frequency: f64,
    /// Segment duration in pump periods.
    pub periods: f64,
    pub steps_per_period: usize,
}

impl Default for HubbardConfig {
    fn default() -> Self {
        Self {
            sites: 6,
            hopping_ev: 0.52,
            lattice_constant: 4.0,
            base_interaction: 1.0,
            interaction_step: 0.1,
            interaction_range: None,
            pump_field: 10.0,
            pump_frequency: 32.9,
            periods: 2.0,
            steps_per_period: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScanAxis {
    #[serde(rename = "T")]
    SegmentDuration,
    #[serde(rename = "n_s")]
    Species,
    #[serde(rename = "dm")]
    MassSpread,
    #[serde(rename = "dU")]
    InteractionStep,
    #[serde(rename = "sigma")]
    Noise,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::SegmentDuration => "T",
            ScanAxis::Species => "n_s",
            ScanAxis::MassSpread => "dm",
            ScanAxis::InteractionStep => "dU",
            ScanAxis::Noise => "sigma",
        }
    }

    /// Whether moving along this axis changes the simulated libraries.
    pub fn changes_physics(self) -> bool {
        self != ScanAxis::Noise
    }
}

impl FromStr for ScanAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        [ScanAxis::SegmentDuration, ScanAxis::Species, ScanAxis::MassSpread, ScanAxis::InteractionStep, ScanAxis::Noise]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scan axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_species < 2 {
            return Err(CliError::Config(format!("n_species must be at least 2, got {}", self.n_species)));
        }
        positive("naive_amplitude_scale", self.naive_amplitude_scale)?;
        if !(self.sigma_rel.is_finite() && self.sigma_rel >= 0.0) {
            return Err(CliError::Config(format!("sigma_rel must be non-negative, got {}", self.sigma_rel)));
        }
        match self.model {
            ModelFamily::Morse => {
                let m = &self.morse;
                positive("reference_mass", m.reference_mass)?;
                positive("segment_duration", m.segment_duration)?;
                positive("time_step", m.time_step)?;
                positive("pump_amplitude", m.pump_amplitude)?;
                positive("pump_carrier_wavenumber", m.pump_carrier_wavenumber)?;
                if !(0.0..1.0).contains(&m.mass_spread) {
                    return Err(CliError::Config(format!("mass_spread must be in [0, 1), got {}", m.mass_spread)));
                }
                self.steps_per_segment()?;
            }
            ModelFamily::Hubbard => {
                let h = &self.hubbard;
                positive("hopping_ev", h.hopping_ev)?;
                positive("lattice_constant", h.lattice_constant)?;
                positive("pump_field", h.pump_field)?;
                positive("pump_frequency", h.pump_frequency)?;
                positive("periods", h.periods)?;
                if h.steps_per_period == 0 {
                    return Err(CliError::Config("steps_per_period must be positive".into()));
                }
            }
        }
        if let Some(scan) = &self.scan {
            if scan.values.is_empty() {
                return Err(CliError::Config("scan has no values".into()));
            }
            let fits = match scan.axis {
                ScanAxis::MassSpread => self.model == ModelFamily::Morse,
                ScanAxis::InteractionStep => self.model == ModelFamily::Hubbard,
                _ => true,
            };
            if !fits {
                return Err(CliError::Config(format!("scan axis {} does not apply to this model", scan.axis.name())));
            }
        }
        Ok(())
    }

    pub fn units(&self) -> Result<UnitSystem> {
        Ok(UnitSystem::default().with_model_energy_ev(self.hubbard.hopping_ev)?)
    }

    /// The configuration at one point of a scan.
    pub fn at(&self, axis: ScanAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            ScanAxis::SegmentDuration => match c.model {
                ModelFamily::Morse => c.morse.segment_duration = value,
                ModelFamily::Hubbard => c.hubbard.periods = value,
            },
            ScanAxis::Species => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(CliError::Config(format!("n_s must be a whole number, got {value}")));
                }
                c.n_species = value as usize;
                c.order = None;
            }
            ScanAxis::MassSpread => c.morse.mass_spread = value,
            ScanAxis::InteractionStep => {
                c.hubbard.interaction_step = value;
                c.hubbard.interaction_range = None;
            }
            ScanAxis::Noise => c.sigma_rel = value,
        }
        c.scan = None;
        c.validate()?;
        Ok(c)
    }

    fn morse_dt(&self) -> f64 {
        self.morse.time_step
    }

    fn hubbard_drive(&self) -> Result<PhaseDrive> {
        let h = &self.hubbard;
        Ok(PhaseDrive::from_physical(h.pump_field, h.pump_frequency, h.lattice_constant, &self.units()?)?)
    }

    /// Samples per segment.
    pub fn steps_per_segment(&self) -> Result<usize> {
        match self.model {
            ModelFamily::Morse => {
                let n = self.morse.segment_duration / self.morse_dt();
                let rounded = n.round();
                if (n - rounded).abs() > 1e-9 * n || rounded < 1.0 {
                    return Err(CliError::Config(format!(
                        "segment_duration {} is not a whole number of time steps {}",
                        self.morse.segment_duration, self.morse.time_step
                    )));
                }
                Ok(rounded as usize)
            }
            ModelFamily::Hubbard => {
                let n = self.hubbard.periods * self.hubbard.steps_per_period as f64;
                if n.fract() != 0.0 || n < 1.0 {
                    return Err(CliError::Config(format!("periods × steps_per_period = {n} is not a whole number")));
                }
                Ok(n as usize)
            }
        }
    }

    /// Segment duration and step in model time units.
    pub fn timing(&self) -> Result<(f64, f64)> {
        let n_t = self.steps_per_segment()?;
        Ok(match self.model {
            ModelFamily::Morse => (self.morse.segment_duration, self.morse_dt()),
            ModelFamily::Hubbard => {
                let duration = self.hubbard_drive()?.periods(self.hubbard.periods);
                (duration, duration / n_t as f64)
            }
        })
    }

    pub fn species_specs(&self) -> Result<Vec<SpeciesSpec>> {
        let n = self.n_species;
        match self.model {
            ModelFamily::Morse => {
                let units = self.units()?;
                let m = &self.morse;
                linspace((1.0 - m.mass_spread) * m.reference_mass, m.reference_mass, n)
                    .into_iter()
                    .map(|mass| {
                        let mut spec = MorseSpec::diatomic(mass, &units)?;
                        spec.grid = RadialGrid { n_points: m.grid_points, r_min: m.r_min, r_max: m.r_max };
                        spec.stencil = m.stencil;
                        spec.validate()?;
                        Ok(SpeciesSpec::Morse(spec))
                    })
                    .collect()
            }
            ModelFamily::Hubbard => {
                let h = &self.hubbard;
                let us = match h.interaction_range {
                    Some([lo, hi]) => linspace(lo, hi, n),
                    None => (0..n).map(|s| h.base_interaction + s as f64 * h.interaction_step).collect(),
                };
                us.into_iter()
                    .map(|u| {
                        let mut spec = HubbardSpec::half_filled(h.sites, u)?;
                        spec.lattice_constant = h.lattice_constant;
                        Ok(SpeciesSpec::Hubbard(spec))
                    })
                    .collect()
            }
        }
    }

    pub fn species(&self) -> Result<Vec<SpeciesHandle>> {
        self.species_specs()?
            .into_iter()
            .enumerate()
            .map(|(i, spec)| Ok(SpeciesHandle::new(species_label(i, &spec), spec)?))
            .collect()
    }

    pub fn suppression_order(&self, species: &[SpeciesHandle]) -> Vec<usize> {
        self.order.clone().unwrap_or_else(|| default_order(species))
    }

    pub fn pump(&self) -> Result<SampledField> {
        let (duration, dt) = self.timing()?;
        let grid = make_time_grid(0.0, dt, self.steps_per_segment()?)?;
        Ok(match self.model {
            ModelFamily::Morse => {
                let w = self.morse_carrier()?;
                pump_pulse_molecular(self.morse.pump_amplitude, duration, w, &grid)?
            }
            ModelFamily::Hubbard => self.hubbard_drive()?.sample(duration, &grid)?,
        })
    }

    fn morse_carrier(&self) -> Result<f64> {
        Ok(convert(self.morse.pump_carrier_wavenumber, Unit::Wavenumber, Unit::Hartree, &self.units()?)?)
    }

    /// Transform-limited baseline over `n_s·T`.
    pub fn naive_pulse(&self) -> Result<SampledField> {
        let (_, dt) = self.timing()?;
        let n_t = self.steps_per_segment()?;
        let n_s = self.n_species;
        let scale = self.naive_amplitude_scale;
        Ok(match self.model {
            ModelFamily::Morse => {
                let (e0, w) = (scale * self.morse.pump_amplitude, self.morse_carrier()?);
                naive_pulse(|d, t| molecular_pump_value(e0, d, w, t), dt, n_t, n_s, self.naive_envelope, FieldKind::ElectricField)?
            }
            ModelFamily::Hubbard => {
                let drive = self.hubbard_drive()?;
                naive_pulse(|d, t| scale * drive.value(d, t), dt, n_t, n_s, self.naive_envelope, FieldKind::PeierlsPhase)?
            }
        })
    }
}

pub fn species_label(index: usize, spec: &SpeciesSpec) -> String {
    match spec {
        SpeciesSpec::Morse(s) => format!("s{index}-m{}", s.mass),
        SpeciesSpec::Hubbard(s) => format!("s{index}-U{}", s.interaction),
    }
}
