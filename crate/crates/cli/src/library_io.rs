//! Versioned JSON library files.
//!
//! Numbers are written with the shortest decimal form that parses back to the
//! same `f64`, so `load(save(lib))` reproduces every array bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use ssmc_core::ssmc::{Method, ResponseLibrary, SpeciesEntry, FORMAT_VERSION};
use ssmc_core::ModelFamily;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryHeader {
    pub format_version: u32,
    pub model: ModelFamily,
    pub method: Method,
    pub species: Vec<SpeciesEntry>,
    pub segment_duration: f64,
    pub dt: f64,
    pub n_t: usize,
    pub n_s: usize,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFile {
    pub header: LibraryHeader,
    pub library: ResponseLibrary,
}

impl LibraryFile {
    pub fn new(library: ResponseLibrary) -> Self {
        let dt = library.pulse.grid().dt();
        let header = LibraryHeader {
            format_version: FORMAT_VERSION,
            model: library.family,
            method: library.method,
            species: library.species.clone(),
            segment_duration: dt * library.n_t as f64,
            dt,
            n_t: library.n_t,
            n_s: library.n_species(),
            order: library.order.clone(),
        };
        Self { header, library }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serialises") + "\n"
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let bad = |message: String| CliError::Library { path: path.to_owned(), message };
        let file: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        file.check().map_err(bad)?;
        Ok(file)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let (h, lib) = (&self.header, &self.library);
        if h.format_version != FORMAT_VERSION || lib.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format version {}", h.format_version));
        }
        if h.n_s != lib.n_species() || h.n_t != lib.n_t || h.order != lib.order || h.model != lib.family {
            return Err("header disagrees with library body".into());
        }
        let expected = match lib.method {
            Method::Ssmc => (h.n_s + 1) * h.n_t,
            Method::Naive => h.n_s * h.n_t,
        };
        if lib.pulse.len() != expected || lib.pulse.grid().n_steps() != expected {
            return Err(format!("pulse has {} samples, expected {expected}", lib.pulse.len()));
        }
        if lib.traces.len() != h.n_s || lib.traces.iter().any(|t| t.values.len() != expected) {
            return Err("trace count or length does not match the pulse".into());
        }
        if let Some(states) = &lib.final_states {
            if states.len() != h.n_s {
                return Err("saved state count does not match species count".into());
            }
        }
        let finite = lib.pulse.values().iter().chain(lib.traces.iter().flat_map(|t| &t.values));
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err("non-finite sample".into());
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }
}
