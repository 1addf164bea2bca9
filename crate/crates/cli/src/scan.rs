//! Parameter scans: both methods at every point, one CSV row per
//! (value, method, seed).

use std::io::Write;

use rayon::prelude::*;
use ssmc_core::estimator::{characterize, condition_number, random_concentrations};
use ssmc_core::ssmc::{assemble_a, run_naive, run_ssmc, Method, ResponseLibrary};

use crate::config::{ExperimentConfig, ScanAxis};
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "scan_param,value,method,cond_A,eps_clean,eps_noisy,seed,error";

/// Recovery errors for one random mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedEstimate {
    pub seed: u64,
    pub eps_clean: f64,
    pub eps_noisy: f64,
}

/// One method at one scan point.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub library: ResponseLibrary,
    pub cond_a: f64,
    pub estimates: Vec<SeedEstimate>,
}

impl MethodOutcome {
    /// Median noisy error over seeds.
    pub fn median_eps_noisy(&self) -> f64 {
        let mut e: Vec<f64> = self.estimates.iter().map(|s| s.eps_noisy).collect();
        e.sort_by(f64::total_cmp);
        match e.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => e[n / 2],
            n => 0.5 * (e[n / 2 - 1] + e[n / 2]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub ssmc: MethodOutcome,
    pub naive: MethodOutcome,
}

/// Builds the protocol and baseline libraries for `cfg`.
pub fn build_libraries(cfg: &ExperimentConfig) -> Result<(ResponseLibrary, ResponseLibrary)> {
    let species = cfg.species()?;
    let order = cfg.suppression_order(&species);
    let pump = cfg.pump()?;
    let naive_pulse = cfg.naive_pulse()?;
    let (ssmc, naive) = rayon::join(
        || run_ssmc(species.clone(), &pump, &order, false),
        || run_naive(species.clone(), &naive_pulse),
    );
    Ok((ssmc?, naive?))
}

/// Conditioning and per-seed recovery errors for one library.
pub fn estimate(cfg: &ExperimentConfig, library: ResponseLibrary) -> Result<MethodOutcome> {
    let a = assemble_a(&library, cfg.hard_zero_blocks)?;
    let cond_a = condition_number(&a)?;
    let estimates = (cfg.seed..cfg.seed + cfg.seeds)
        .into_par_iter()
        .map(|seed| {
            let y = random_concentrations(library.n_species(), seed)?;
            let clean = characterize(&a, &y, 0.0, seed, library.method)?;
            let noisy = characterize(&a, &y, cfg.sigma_rel, seed, library.method)?;
            Ok(SeedEstimate { seed, eps_clean: clean.epsilon, eps_noisy: noisy.epsilon })
        })
        .collect::<ssmc_core::Result<Vec<_>>>()?;
    Ok(MethodOutcome { method: library.method, library, cond_a, estimates })
}

pub fn evaluate_point(cfg: &ExperimentConfig) -> Result<PointOutcome> {
    let (ssmc, naive) = build_libraries(cfg)?;
    Ok(PointOutcome { ssmc: estimate(cfg, ssmc)?, naive: estimate(cfg, naive)? })
}

/// Outcome of every value on the configured axis, in axis order.
pub fn run_points(cfg: &ExperimentConfig) -> Result<Vec<(f64, Result<PointOutcome>)>> {
    let scan = cfg.scan.as_ref().ok_or_else(|| CliError::Config("no [scan] section".into()))?;
    let axis = scan.axis;
    if axis.changes_physics() {
        return Ok(scan
            .values
            .par_iter()
            .map(|&v| (v, cfg.at(axis, v).and_then(|c| evaluate_point(&c))))
            .collect());
    }
    let base = cfg.at(axis, scan.values[0])?;
    let libraries = build_libraries(&base);
    Ok(scan
        .values
        .par_iter()
        .map(|&v| {
            let outcome = libraries.as_ref().map_err(clone_error).and_then(|(s, n)| {
                let c = cfg.at(axis, v)?;
                Ok(PointOutcome { ssmc: estimate(&c, s.clone())?, naive: estimate(&c, n.clone())? })
            });
            (v, outcome)
        })
        .collect())
}

fn clone_error(e: &CliError) -> CliError {
    match e {
        CliError::Core(c) => CliError::Core(c.clone()),
        other => CliError::Config(other.to_string()),
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Ssmc => "ssmc",
        Method::Naive => "naive",
    }
}

/// CSV rows for a scan; failed points become rows carrying the error text.
pub fn format_rows(axis: ScanAxis, points: &[(f64, Result<PointOutcome>)]) -> Vec<String> {
    let name = axis.name();
    let mut rows = Vec::new();
    for (value, outcome) in points {
        match outcome {
            Ok(p) => {
                for m in [&p.ssmc, &p.naive] {
                    for s in &m.estimates {
                        rows.push(format!(
                            "{name},{value:.16e},{},{:.16e},{:.16e},{:.16e},{},",
                            method_name(m.method),
                            m.cond_a,
                            s.eps_clean,
                            s.eps_noisy,
                            s.seed
                        ));
                    }
                }
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                for m in ["ssmc", "naive"] {
                    rows.push(format!("{name},{value:.16e},{m},,,,,{msg}"));
                }
            }
        }
    }
    rows
}

pub fn write_csv(out: &mut impl Write, rows: &[String]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(axis: &str, values: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "n_species = 2\nseeds = 3\n[morse]\nsegment_duration = 100.0\n[scan]\naxis = \"{axis}\"\nvalues = {values}\n"
        ))
        .unwrap()
    }

    #[test]
    fn rows_cover_every_method_and_seed() {
        let cfg = tiny("T", "[50.0, 100.0]");
        let points = run_points(&cfg).unwrap();
        let rows = format_rows(ScanAxis::SegmentDuration, &points);
        assert_eq!(rows.len(), 2 * 2 * 3);
        assert!(rows.iter().all(|r| r.split(',').count() == CSV_HEADER.split(',').count()));
        assert!(rows[0].starts_with("T,5.0000000000000000e1,ssmc,"));
        assert_eq!(rows, format_rows(ScanAxis::SegmentDuration, &run_points(&cfg).unwrap()));
    }

    #[test]
    fn failed_points_are_recorded_and_scan_continues() {
        // 7 a.u. is not a whole number of 2.5 a.u. steps
        let cfg = tiny("T", "[7.0, 50.0]");
        let points = run_points(&cfg).unwrap();
        let rows = format_rows(ScanAxis::SegmentDuration, &points);
        assert!(rows[0].contains("ssmc,,,,,"));
        assert!(rows.len() == 2 + 2 * 3);
    }

    #[test]
    fn noise_axis_reuses_libraries() {
        let cfg = tiny("sigma", "[0.0, 0.01]");
        let points = run_points(&cfg).unwrap();
        let (a, b) = (points[0].1.as_ref().unwrap(), points[1].1.as_ref().unwrap());
        assert_eq!(a.ssmc.cond_a, b.ssmc.cond_a);
        assert!(a.ssmc.estimates.iter().zip(&b.ssmc.estimates).all(|(x, y)| x.eps_clean == y.eps_clean));
        assert!(b.ssmc.median_eps_noisy() >= a.ssmc.median_eps_noisy());
    }
}
