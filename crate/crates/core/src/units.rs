//! Physical-unit conversion.
//!
//! The molecular simulator works in Hartree atomic units (ħ = mₑ = e = 1).
//! The lattice simulator works in "model" units: energies in multiples of the
//! hopping energy t₀, ħ = e = 1, lengths in ångström, so that time is measured
//! in ħ/t₀ and a field E enters only through the product a·E (an energy in t₀).
//!
//! Every unit is mapped onto one base unit per dimension; conversions between
//! units of different dimensions are rejected.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conversion constants (CODATA 2018) plus the lattice energy scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Hartree per cm⁻¹.
    pub hartree_per_wavenumber: f64,
    /// Bohr per ångström.
    pub bohr_per_angstrom: f64,
    /// e·a₀ per debye.
    pub au_dipole_per_debye: f64,
    /// Hartree per eV.
    pub hartree_per_ev: f64,
    /// Atomic time unit in seconds.
    pub au_time_seconds: f64,
    /// Atomic field unit per MV/cm.
    pub au_field_per_mv_per_cm: f64,
    /// Lattice energy scale t₀ in eV.
    pub model_energy_ev: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            hartree_per_wavenumber: 4.556_335_252_911_937e-6,
            bohr_per_angstrom: 1.889_726_124_625_770_2,
            au_dipole_per_debye: 0.393_430_269_519_899_46,
            hartree_per_ev: 0.036_749_322_175_654_99,
            au_time_seconds: 2.418_884_326_585_7e-17,
            au_field_per_mv_per_cm: 1.944_690_381_149_866_6e-4,
            model_energy_ev: 0.52,
        }
    }
}

impl UnitSystem {
    /// Same constants with a different lattice energy scale.
    pub fn with_model_energy_ev(mut self, t0_ev: f64) -> Result<Self> {
        if !(t0_ev.is_finite() && t0_ev > 0.0) {
            return Err(Error::invalid(format!("model energy scale must be positive, got {t0_ev}")));
        }
        self.model_energy_ev = t0_ev;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let all = [
            self.hartree_per_wavenumber,
            self.bohr_per_angstrom,
            self.au_dipole_per_debye,
            self.hartree_per_ev,
            self.au_time_seconds,
            self.au_field_per_mv_per_cm,
            self.model_energy_ev,
        ];
        if all.iter().all(|c| c.is_finite() && *c > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid("unit system constants must be strictly positive"))
        }
    }

    /// Model energy unit (t₀) in hartree.
    fn model_energy_hartree(&self) -> f64 {
        self.model_energy_ev * self.hartree_per_ev
    }

    /// Dimension and factor to the base unit of that dimension.
    fn base_factor(&self, unit: Unit) -> (Dimension, f64) {
        use Dimension::*;
        match unit {
            Unit::Hartree => (Energy, 1.0),
            Unit::Wavenumber => (Energy, self.hartree_per_wavenumber),
            Unit::ElectronVolt => (Energy, self.hartree_per_ev),
            Unit::ModelEnergy => (Energy, self.model_energy_hartree()),
            Unit::Bohr => (Length, 1.0),
            Unit::Angstrom => (Length, self.bohr_per_angstrom),
            Unit::AuDipole => (Dipole, 1.0),
            Unit::Debye => (Dipole, self.au_dipole_per_debye),
            Unit::AuTime => (Time, 1.0),
            Unit::Femtosecond => (Time, 1e-15 / self.au_time_seconds),
            Unit::ModelTime => (Time, 1.0 / self.model_energy_hartree()),
            Unit::AuAngularFrequency => (AngularFrequency, 1.0),
            // cycle frequency f in THz ↦ angular frequency 2πf
            Unit::TeraHertz => (AngularFrequency, 2.0 * PI * 1e12 * self.au_time_seconds),
            Unit::ModelAngularFrequency => (AngularFrequency, self.model_energy_hartree()),
            Unit::AuField => (Field, 1.0),
            Unit::MegaVoltPerCm => (Field, self.au_field_per_mv_per_cm),
            // t₀ per (e·Å)
            Unit::ModelField => (Field, self.model_energy_hartree() / self.bohr_per_angstrom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Energy,
    Length,
    Dipole,
    Time,
    AngularFrequency,
    Field,
}

/// Units understood by [`convert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Hartree,
    Wavenumber,
    ElectronVolt,
    ModelEnergy,
    Bohr,
    Angstrom,
    AuDipole,
    Debye,
    AuTime,
    Femtosecond,
    ModelTime,
    AuAngularFrequency,
    TeraHertz,
    ModelAngularFrequency,
    AuField,
    MegaVoltPerCm,
    ModelField,
}

const UNIT_NAMES: &[(Unit, &str)] = &[
    (Unit::Hartree, "hartree"),
    (Unit::Wavenumber, "cm-1"),
    (Unit::ElectronVolt, "eV"),
    (Unit::ModelEnergy, "t0"),
    (Unit::Bohr, "bohr"),
    (Unit::Angstrom, "angstrom"),
    (Unit::AuDipole, "au-dipole"),
    (Unit::Debye, "debye"),
    (Unit::AuTime, "au-time"),
    (Unit::Femtosecond, "fs"),
    (Unit::ModelTime, "model-time"),
    (Unit::AuAngularFrequency, "au-angular-frequency"),
    (Unit::TeraHertz, "THz"),
    (Unit::ModelAngularFrequency, "model-angular-frequency"),
    (Unit::AuField, "au-field"),
    (Unit::MegaVoltPerCm, "MV/cm"),
    (Unit::ModelField, "model-field"),
];

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = UNIT_NAMES
            .iter()
            .find(|(u, _)| u == self)
            .map(|(_, n)| *n)
            .unwrap_or("?");
        f.write_str(name)
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UNIT_NAMES
            .iter()
            .find(|(_, n)| n.eq_ignore_ascii_case(s))
            .map(|(u, _)| *u)
            .ok_or_else(|| Error::invalid(format!("unknown unit `{s}`")))
    }
}

/// Convert `value` from one unit to another of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit, units: &UnitSystem) -> Result<f64> {
    units.check()?;
    let (dim_from, f_from) = units.base_factor(from);
    let (dim_to, f_to) = units.base_factor(to);
    if dim_from != dim_to {
        return Err(Error::invalid(format!("cannot convert {from} to {to}")));
    }
    Ok(value * f_from / f_to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn angstrom_to_bohr() {
        let u = UnitSystem::default();
        let r = convert(1.3, Unit::Angstrom, Unit::Bohr, &u).unwrap();
        assert!((r - 2.45664).abs() < 1e-5, "{r}");
    }

    #[test]
    fn well_depth_in_hartree() {
        let u = UnitSystem::default();
        let d = convert(37000.0, Unit::Wavenumber, Unit::Hartree, &u).unwrap();
        assert!((d - 0.168_584).abs() < 1e-5, "{d}");
    }

    #[test]
    fn morse_width_from_spectroscopic_constants() {
        let u = UnitSystem::default();
        let r_e = convert(1.3, Unit::Angstrom, Unit::Bohr, &u).unwrap();
        // wavenumber units cancel in we / sqrt(Be D)
        let alpha = 3000.0 / (2.0 * r_e * (11.0f64 * 37000.0).sqrt());
        assert!((alpha - 0.957).abs() < 1e-3, "{alpha}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let u = UnitSystem::default();
        assert!(matches!(
            convert(1.0, Unit::Angstrom, Unit::Hartree, &u),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unknown_unit_name_rejected() {
        assert!("furlong".parse::<Unit>().is_err());
        assert_eq!("MV/cm".parse::<Unit>().unwrap(), Unit::MegaVoltPerCm);
    }

    #[test]
    fn nonpositive_constants_rejected() {
        let mut u = UnitSystem::default();
        u.bohr_per_angstrom = 0.0;
        assert!(convert(1.0, Unit::Angstrom, Unit::Bohr, &u).is_err());
        assert!(UnitSystem::default().with_model_energy_ev(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(x in -1e6f64..1e6, i in 0usize..UNIT_NAMES.len(), j in 0usize..UNIT_NAMES.len()) {
            let u = UnitSystem::default();
            let (a, b) = (UNIT_NAMES[i].0, UNIT_NAMES[j].0);
            if let Ok(y) = convert(x, a, b, &u) {
                let back = convert(y, b, a, &u).unwrap();
                prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1e-300));
            }
        }
    }
}
