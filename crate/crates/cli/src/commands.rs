//! The four subcommands, callable without a process boundary.

use std::io::Write;
use std::path::Path;

use ssmc_core::estimator::{characterize, condition_number, random_concentrations};
use ssmc_core::ssmc::{assemble_a, extend_library, run_naive, run_ssmc};
use ssmc_core::{ConcentrationVector, EstimationReport, Method, SpeciesHandle, SpeciesSpec};

use crate::config::{species_label, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::library_io::LibraryFile;
use crate::scan::{format_rows, run_points, write_csv};

pub const REPORT_HEADER: &str = "method,cond_A,epsilon,sigma_rel,seed,y_true,y_est";

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    pub naive: bool,
    pub save_states: bool,
    pub hard_zero_blocks: bool,
}

/// Builds a library and returns it with cond(A).
pub fn build_library(cfg: &ExperimentConfig, opts: BuildOptions) -> Result<(LibraryFile, f64)> {
    let species = cfg.species()?;
    let library = if opts.naive {
        run_naive(species, &cfg.naive_pulse()?)?
    } else {
        let order = cfg.suppression_order(&species);
        run_ssmc(species, &cfg.pump()?, &order, opts.save_states)?
    };
    let cond = condition_number(&assemble_a(&library, opts.hard_zero_blocks)?)?;
    Ok((LibraryFile::new(library), cond))
}

pub fn cmd_build_library(cfg: &ExperimentConfig, out: &Path, opts: BuildOptions) -> Result<String> {
    let (file, cond) = build_library(cfg, opts)?;
    file.save(out)?;
    let h = &file.header;
    Ok(format!(
        "wrote {} ({:?}, n_s = {}, n_t = {}, {} pulse samples, {} species-steps)\ncond(A) = {cond:.6e}",
        out.display(),
        h.method,
        h.n_s,
        h.n_t,
        file.library.pulse.len(),
        file.library.propagation_steps
    ))
}

/// Parameters for a species appended to an existing library.
#[derive(Debug, Clone, Default)]
pub struct NewSpecies {
    pub mass: Option<f64>,
    pub interaction: Option<f64>,
    pub label: Option<String>,
}

/// The new species inherits every parameter except mass or repulsion from the
/// library's first species.
fn new_species_spec(file: &LibraryFile, new: &NewSpecies) -> Result<SpeciesSpec> {
    let template = file
        .library
        .species
        .first()
        .ok_or_else(|| CliError::Config("library has no species".into()))?;
    let spec = match (template.spec, new.mass, new.interaction) {
        (SpeciesSpec::Morse(mut s), Some(m), None) => {
            s.mass = m;
            s.validate()?;
            SpeciesSpec::Morse(s)
        }
        (SpeciesSpec::Hubbard(mut s), None, Some(u)) => {
            s.interaction = u;
            s.validate()?;
            SpeciesSpec::Hubbard(s)
        }
        (SpeciesSpec::Morse(_), ..) => return Err(CliError::Config("molecular libraries need exactly --mass".into())),
        (SpeciesSpec::Hubbard(_), ..) => {
            return Err(CliError::Config("lattice libraries need exactly --interaction".into()))
        }
    };
    Ok(spec)
}

/// Extended library and the species-steps the extension cost.
pub fn extend(file: &LibraryFile, new: &NewSpecies) -> Result<(LibraryFile, usize)> {
    let spec = new_species_spec(file, new)?;
    let label = new.label.clone().unwrap_or_else(|| species_label(file.header.n_s, &spec));
    let handle = SpeciesHandle::new(label, spec)?;
    let (library, steps) = extend_library(&file.library, handle)?;
    Ok((LibraryFile::new(library), steps))
}

pub fn cmd_extend_library(library: &Path, new: &NewSpecies, out: &Path) -> Result<String> {
    let file = LibraryFile::load(library)?;
    let (extended, steps) = extend(&file, new)?;
    extended.save(out)?;
    Ok(format!(
        "wrote {} (n_s = {})\nextension propagation steps = {steps}",
        out.display(),
        extended.header.n_s
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixtureSource {
    Given(Vec<f64>),
    Random(u64),
}

pub fn characterize_library(
    file: &LibraryFile,
    source: &MixtureSource,
    sigma_rel: f64,
    seed: u64,
    hard_zero_blocks: bool,
) -> Result<EstimationReport> {
    let lib = &file.library;
    let y = match source {
        MixtureSource::Given(v) => {
            if v.len() != lib.n_species() {
                return Err(CliError::Config(format!(
                    "--y has {} entries, library has {} species",
                    v.len(),
                    lib.n_species()
                )));
            }
            ConcentrationVector(v.clone())
        }
        MixtureSource::Random(s) => random_concentrations(lib.n_species(), *s)?,
    };
    let a = assemble_a(lib, hard_zero_blocks)?;
    Ok(characterize(&a, &y, sigma_rel, seed, lib.method)?)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

/// One CSV row under [`REPORT_HEADER`]; vectors are space-separated.
pub fn report_row(r: &EstimationReport) -> String {
    let method = match r.method {
        Method::Ssmc => "ssmc",
        Method::Naive => "naive",
    };
    format!(
        "{method},{:.16e},{:.16e},{:.16e},{},{},{}",
        r.cond_a,
        r.epsilon,
        r.noise_sigma_relative,
        r.seed,
        join(r.y_true.as_slice()),
        join(r.y_est.as_slice())
    )
}

pub fn cmd_characterize(
    library: &Path,
    source: &MixtureSource,
    sigma_rel: f64,
    seed: u64,
    hard_zero_blocks: bool,
    out: Option<&Path>,
) -> Result<String> {
    let file = LibraryFile::load(library)?;
    let report = characterize_library(&file, source, sigma_rel, seed, hard_zero_blocks)?;
    let csv = format!("{REPORT_HEADER}\n{}\n", report_row(&report));
    if let Some(path) = out {
        std::fs::write(path, &csv).map_err(|e| CliError::io(path, e))?;
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    Ok(format!(
        "y_true = [{}]\ny_est  = [{}]\nepsilon = {:.6e}\ncond(A) = {:.6e}\n{csv}",
        fmt(report.y_true.as_slice()),
        fmt(report.y_est.as_slice()),
        report.epsilon,
        report.cond_a
    )
    .trim_end()
    .to_owned())
}

/// Runs the configured scan and writes the CSV to `out`.
pub fn cmd_scan(cfg: &ExperimentConfig, out: &mut impl Write) -> Result<usize> {
    let axis = cfg.scan.as_ref().ok_or_else(|| CliError::Config("config has no [scan] section".into()))?.axis;
    let points = run_points(cfg)?;
    for (v, p) in &points {
        if let Err(e) = p {
            log::warn!("{} = {v}: {e}", axis.name());
        }
    }
    let rows = format_rows(axis, &points);
    write_csv(out, &rows).map_err(|e| CliError::io("<scan output>", e))?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse("n_species = 3\n[morse]\nsegment_duration = 100.0\n").unwrap()
    }

    #[test]
    fn clean_recovery_is_exact() {
        let (file, cond) = build_library(&small(), BuildOptions::default()).unwrap();
        assert!(cond.is_finite() && cond >= 1.0);
        let r = characterize_library(&file, &MixtureSource::Given(vec![1.0, 0.0, 0.0]), 0.0, 0, false).unwrap();
        assert!(r.epsilon < 1e-6, "{}", r.epsilon);
        let row = report_row(&r);
        assert_eq!(row.split(',').count(), REPORT_HEADER.split(',').count());
    }

    #[test]
    fn extension_requires_matching_parameters() {
        let opts = BuildOptions { save_states: true, ..Default::default() };
        let (file, _) = build_library(&small(), opts).unwrap();
        let hub = NewSpecies { interaction: Some(1.0), ..Default::default() };
        assert!(matches!(extend(&file, &hub), Err(CliError::Config(_))));
        let (ext, steps) = extend(&file, &NewSpecies { mass: Some(1900.0), ..Default::default() }).unwrap();
        assert_eq!(ext.header.n_s, 4);
        assert_eq!(steps, (2 * 3 + 2) * 40);
        assert_eq!(&ext.library.pulse.values()[..file.library.pulse.len()], file.library.pulse.values());
    }

    #[test]
    fn extension_without_states_fails() {
        let (file, _) = build_library(&small(), BuildOptions::default()).unwrap();
        let e = extend(&file, &NewSpecies { mass: Some(1900.0), ..Default::default() }).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
