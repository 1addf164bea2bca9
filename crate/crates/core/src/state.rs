use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    PositionGrid,
    Fock,
}

/// Complex amplitudes of one species, normalised with the plain sum Σ|ψᵢ|².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub basis: Basis,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>, basis: Basis) -> Self {
        Self { amplitudes, basis }
    }

    pub fn from_real(values: &[f64], basis: Basis) -> Self {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect(), basis)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Numeric(format!("cannot normalise state of norm {n}")));
        }
        let inv = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|c| *c *= inv);
        Ok(())
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// ‖self − other‖₂
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Σ fᵢ |ψᵢ|² for a diagonal observable.
    pub fn expect_diagonal(&self, f: &[f64]) -> f64 {
        self.amplitudes
            .iter()
            .zip(f)
            .map(|(c, v)| c.norm_sqr() * v)
            .sum()
    }

    pub(crate) fn check_dim(&self, dim: usize, basis: Basis) -> Result<()> {
        if self.len() != dim || self.basis != basis {
            return Err(Error::invalid(format!(
                "state has dimension {} in {:?} basis, expected {dim} in {basis:?}",
                self.len(),
                self.basis
            )));
        }
        Ok(())
    }
}
