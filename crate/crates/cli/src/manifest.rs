//! Run manifest: config echo, derived constants and timings.

use std::fs;
use std::io::Write;
use std::path::Path;

use kinflow_core::diagnostics::BoundCertificates;
use kinflow_core::flow::kernel_lipschitz;
use kinflow_core::{DiagnosticRecord, MeanFieldDynamics};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const MANIFEST_FORMAT: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub f_inf_bound: f64,
    pub grad_v_bound: f64,
    pub radial_slope_bound: f64,
    pub sup_g: f64,
    /// Energy forcing constant `A = (f_inf M0 + sup|g|) sqrt(2 M0)`.
    pub energy_forcing: f64,
    pub energy_cap: f64,
    /// `C_max = grad_v_bound M0 + 2`.
    pub growth_exponent: f64,
    pub initial_energy: f64,
    pub initial_second_moment: f64,
    pub analytic_energy: f64,
    pub analytic_second_moment: f64,
    pub r_cut: f64,
    pub dt_max: f64,
    /// Dobrushin kernel constant `L_K`.
    pub kernel_lipschitz: f64,
}

impl DerivedConstants {
    pub fn new(config: &RunConfig, dynamics: &MeanFieldDynamics, certs: &BoundCertificates) -> Self {
        let model = dynamics.force.model;
        DerivedConstants {
            f_inf_bound: certs.f_inf_bound,
            grad_v_bound: certs.grad_v_bound,
            radial_slope_bound: model.radial_slope_bound(),
            sup_g: certs.sup_g,
            energy_forcing: certs.energy_forcing,
            energy_cap: certs.energy_cap,
            growth_exponent: certs.growth_exponent,
            initial_energy: certs.initial_energy,
            initial_second_moment: certs.initial_second_moment,
            analytic_energy: config.density.energy(),
            analytic_second_moment: config.density.second_moment(),
            r_cut: dynamics.force.r_cut(),
            dt_max: dynamics.force.dt_max(),
            kernel_lipschitz: kernel_lipschitz(&dynamics.force, &dynamics.drive, config.density.mass),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub run_seconds: f64,
    pub output_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: u32,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub derived: Option<DerivedConstants>,
    pub timings: Option<Timings>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            derived: None,
            timings: None,
        }
    }

    pub fn with_derived(mut self, config: &RunConfig, dynamics: &MeanFieldDynamics, initial: &DiagnosticRecord) -> Self {
        let certs = certificates(config, dynamics, initial);
        self.derived = Some(DerivedConstants::new(config, dynamics, &certs));
        self
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_atomic(&dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }
}

/// Certificate constants for a run, honouring the debug `E_cap` override.
pub fn certificates(config: &RunConfig, dynamics: &MeanFieldDynamics, initial: &DiagnosticRecord) -> BoundCertificates {
    let certs = BoundCertificates::for_run(&dynamics.force, &dynamics.drive, initial);
    match config.e_cap_override {
        Some(cap) => certs.with_energy_cap(cap),
        None => certs,
    }
}

/// Writes `bytes` to a sibling temporary file, syncs it, and renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
