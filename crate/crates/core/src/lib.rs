//! Sequential single-pulse mixture characterization: tracking-control pulses
//! that silence each species of a quantum mixture in turn, the resulting
//! response library, and least-squares concentration recovery.
//!
//! Two species families are supported: vibrating Morse-oscillator diatomics
//! driven through their dipole ([`morse`]) and Fermi-Hubbard rings driven by a
//! Peierls phase ([`hubbard`]). [`ssmc`] runs the protocol over either family
//! and [`estimator`] turns a library into concentration estimates.

pub mod error;
pub mod estimator;
pub mod hubbard;
pub mod krylov;
pub mod morse;
pub mod pulsegrid;
pub mod ssmc;
pub mod state;
pub mod units;

pub use error::{Error, Result};
pub use estimator::{ConcentrationVector, EstimationReport};
pub use hubbard::{FockBasis, HubbardSpec, NeighborExpectation};
pub use morse::{GridOperators, MorseSpec};
pub use pulsegrid::{FieldKind, SampledField, TimeGrid};
pub use ssmc::{Method, ModelFamily, ResponseLibrary, ResponseTrace, SpeciesHandle, SpeciesSpec};
pub use state::{Basis, StateVector};
pub use units::{Unit, UnitSystem};
