//! The four subcommands. Each writes into `<output dir>/<hash>-seed<seed>`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use kinflow_core::density::{
    covering_kde_estimate, histogram_density, sup_density, EstimatorKind, PhaseGrid4D,
};
use kinflow_core::diagnostics::{self, certify_all, BoundCertificates};
use kinflow_core::flow::{dobrushin_pair_run, StabilityReport};
use kinflow_core::transport::{convergence_study, ConvergenceStudy};
use kinflow_core::{CertificateOutcome, DensityEstimate, DiagnosticRecord, ParticleEnsemble, Snapshot};
use serde::{Deserialize, Serialize};

use crate::config::{GridSection, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{certificates, write_atomic, RunManifest, Timings, MANIFEST_FILE};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const CSV_HEADER: &str = "t,mass,kinetic,m2,sup_neg_logJ,sup_density";
pub const CERTIFICATES_FILE: &str = "certificates.json";
pub const STABILITY_FILE: &str = "stability.json";
pub const STUDY_CSV: &str = "study.csv";
pub const STUDY_JSON: &str = "study.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const FINAL_SNAPSHOT: &str = "final.bin";

/// Creates the run directory. An existing directory is an error unless
/// `force` is set, in which case it is removed first (only if it holds a
/// manifest, so arbitrary directories are never deleted).
pub fn prepare_run_dir(dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        if !force {
            return Err(CliError::Exists(dir.display().to_string()));
        }
        if !dir.join(MANIFEST_FILE).is_file() {
            return Err(CliError::Io(format!(
                "{} exists but is not a run directory; refusing to remove it",
                dir.display()
            )));
        }
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn csv_line(r: &DiagnosticRecord) -> String {
    let sup = r.sup_density.map(|s| s.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{}",
        r.t, r.mass, r.kinetic, r.second_moment, r.sup_log_growth, sup
    )
}

/// Density estimate on a grid covering the ensemble.
pub fn estimate(e: &ParticleEnsemble, grid: &GridSection) -> kinflow_core::Result<DensityEstimate> {
    match grid.estimator {
        EstimatorKind::Histogram => {
            let g = PhaseGrid4D::covering(e, grid.bins, grid.inflation)?;
            histogram_density(e, &g)
        }
        EstimatorKind::Kde => covering_kde_estimate(e, grid.bins, grid.inflation),
    }
}

fn snapshot_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(SNAPSHOT_DIR).join(format!("t_{t}.bin"))
}

fn write_snapshot(path: &Path, e: &ParticleEnsemble) -> CliResult<()> {
    let mut buf = Vec::new();
    Snapshot::from_ensemble(e).write_binary(&mut buf)?;
    write_atomic(path, &buf)
}

fn write_density(dir: &Path, est: &DensityEstimate) -> CliResult<()> {
    write_atomic(&dir.join("density.json"), est.header_json()?.as_bytes())?;
    let mut values = Vec::new();
    est.write_values(&mut values)?;
    write_atomic(&dir.join("density.bin"), &values)?;
    for (name, velocity) in [("marginal_x.csv", false), ("marginal_v.csv", true)] {
        let mut out = Vec::new();
        est.write_marginal_csv(&mut out, velocity)?;
        write_atomic(&dir.join(name), &out)?;
    }
    Ok(())
}

/// Outcome of a forward run.
pub struct Simulation {
    pub records: Vec<DiagnosticRecord>,
    pub certificates: BoundCertificates,
    pub ensemble: ParticleEnsemble,
    pub manifest: RunManifest,
}

/// Samples, integrates and streams diagnostics into `dir` (which must exist).
/// The manifest is written before the diagnostics file is opened and
/// rewritten with timings at the end. Snapshot times add a record.
pub fn run_simulation(config: &RunConfig, dir: &Path, command: &str) -> CliResult<Simulation> {
    let clock = Instant::now();
    let n = config.run.n_particles;
    let dynamics = config.dynamics(n)?;
    let mut ensemble = config.density.sample(n, config.run.seed)?;
    let track_sup = config.grid.track_sup;
    let mut initial = diagnostics::record(&ensemble);
    if track_sup {
        initial.sup_density = Some(sup_density(&estimate(&ensemble, &config.grid)?));
    }
    let certs = certificates(config, &dynamics, &initial);
    let mut manifest = RunManifest::new(command, config).with_derived(config, &dynamics, &initial);
    manifest.write(dir)?;
    let setup_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut csv = BufWriter::new(File::create(dir.join(DIAGNOSTICS_FILE))?);
    writeln!(csv, "{CSV_HEADER}")?;
    writeln!(csv, "{}", csv_line(&initial))?;
    let mut records = vec![initial];

    let snaps = &config.run.snapshot_times;
    if !snaps.is_empty() {
        fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    }
    let mut stops = snaps.clone();
    stops.push(config.run.t_final);
    stops.dedup();
    for stop in stops {
        if stop > ensemble.time() {
            // Each segment re-emits its starting state; that record is
            // already written.
            let mut first = true;
            let segment = dynamics.advance(&mut ensemble, stop, config.run.dt, config.run.record_stride, |e, rec| {
                if first {
                    first = false;
                    return Ok(());
                }
                if track_sup {
                    rec.sup_density = Some(sup_density(&estimate(e, &config.grid)?));
                }
                writeln!(csv, "{}", csv_line(rec))?;
                Ok(())
            })?;
            records.extend(segment.into_iter().skip(1));
        }
        if snaps.contains(&stop) {
            write_snapshot(&snapshot_path(dir, stop), &ensemble)?;
        }
    }
    csv.into_inner().map_err(|e| CliError::Io(e.to_string()))?.sync_all()?;
    let run_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    write_snapshot(&dir.join(FINAL_SNAPSHOT), &ensemble)?;
    if config.grid.export {
        write_density(dir, &estimate(&ensemble, &config.grid)?)?;
    }
    manifest.timings = Some(Timings {
        setup_seconds,
        run_seconds,
        output_seconds: clock.elapsed().as_secs_f64(),
    });
    manifest.write(dir)?;
    Ok(Simulation {
        records,
        certificates: certs,
        ensemble,
        manifest,
    })
}

/// `kinflow simulate`.
pub fn simulate(config: &RunConfig, force: bool) -> CliResult<PathBuf> {
    let dir = config.run_dir();
    prepare_run_dir(&dir, force)?;
    run_simulation(config, &dir, "simulate")?;
    Ok(dir)
}

/// Informational cross-check of the estimated density against
/// `||f0||_inf e^{C_max t}`; carries estimator noise, so it never fails a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub initial_sup: f64,
    pub worst_ratio: f64,
    pub worst_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub constants: BoundCertificates,
    pub outcomes: Vec<CertificateOutcome>,
    pub density_check: Option<DensityCheck>,
}

impl CertificateReport {
    pub fn table(&self) -> String {
        let mut s = format!("{:<20} {:<6} {:>14} {:>12}\n", "certificate", "result", "worst", "at t");
        for o in &self.outcomes {
            let result = if o.passed { "PASS" } else { "FAIL" };
            s += &format!("{:<20} {:<6} {:>14.6e} {:>12.6}\n", o.name, result, o.worst, o.worst_t);
        }
        if let Some(d) = &self.density_check {
            s += &format!(
                "{:<20} {:<6} {:>14.6e} {:>12.6}\n",
                "density (info)", "-", d.worst_ratio, d.worst_t
            );
        }
        s
    }
}

pub fn certificate_report(config: &RunConfig, sim: &Simulation) -> CertificateReport {
    let outcomes = certify_all(&sim.records, &sim.certificates);
    let f0 = config.density.sup();
    let density_check = config.grid.track_sup.then(|| {
        let mut worst_ratio = f64::NEG_INFINITY;
        let mut worst_t = f64::NAN;
        for r in &sim.records {
            if let Some(s) = r.sup_density {
                let ratio = s / (f0 * (sim.certificates.growth_exponent * r.t).exp());
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_t = r.t;
                }
            }
        }
        DensityCheck {
            initial_sup: f0,
            worst_ratio,
            worst_t,
        }
    });
    CertificateReport {
        passed: outcomes.iter().all(|o| o.passed),
        constants: sim.certificates,
        outcomes,
        density_check,
    }
}

/// `kinflow invariants`: a forward run followed by the certificate suite.
pub fn invariants(config: &RunConfig, force: bool) -> CliResult<(PathBuf, CertificateReport)> {
    let dir = config.run_dir();
    prepare_run_dir(&dir, force)?;
    let sim = run_simulation(config, &dir, "invariants")?;
    let report = certificate_report(config, &sim);
    write_atomic(&dir.join(CERTIFICATES_FILE), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok((dir, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityOutput {
    pub holds: bool,
    pub shift: Option<[f64; 4]>,
    pub config_b_hash: Option<String>,
    pub report: StabilityReport,
}

fn same_dynamics(a: &RunConfig, b: &RunConfig) -> CliResult<()> {
    let checks = [
        (a.force == b.force, "force.*"),
        (a.theta == b.theta, "cutoff.theta"),
        (a.drive == b.drive, "drive.*"),
        (a.run.n_particles == b.run.n_particles, "run.n_particles"),
        (a.run.t_final == b.run.t_final, "run.t_final"),
        (a.run.dt == b.run.dt, "run.dt"),
        (a.density.mass == b.density.mass, "density.mass"),
    ];
    for (same, key) in checks {
        if !same {
            return Err(CliError::Config(format!("{key}: second config must match the first")));
        }
    }
    Ok(())
}

/// `kinflow stability`: paired run from the config's density and either a
/// second config's density or the config's `stability.shift`.
pub fn stability(config: &RunConfig, config_b: Option<&RunConfig>, force: bool) -> CliResult<(PathBuf, StabilityOutput)> {
    let (density_b, dir, shift, config_b_hash) = match config_b {
        Some(b) => {
            same_dynamics(config, b)?;
            let dir = config
                .output_dir
                .join(format!("{}-{}-seed{}", config.hash(), b.hash(), config.run.seed));
            (b.density, dir, None, Some(b.hash()))
        }
        None => (
            config.density.shifted(config.stability_shift),
            config.run_dir(),
            Some(config.stability_shift),
            None,
        ),
    };
    let n = config.run.n_particles;
    let dynamics = config.dynamics(n)?;
    prepare_run_dir(&dir, force)?;
    let initial = diagnostics::record(&config.density.sample(n, config.run.seed)?);
    RunManifest::new("stability", config)
        .with_derived(config, &dynamics, &initial)
        .write(&dir)?;
    let clock = Instant::now();
    let report = dobrushin_pair_run(
        &config.density,
        &density_b,
        n,
        config.run.seed,
        &dynamics.force,
        &dynamics.drive,
        config.run.t_final,
        config.run.dt,
    )?;
    let out = StabilityOutput {
        holds: report.holds(),
        shift,
        config_b_hash,
        report,
    };
    write_atomic(&dir.join(STABILITY_FILE), serde_json::to_string_pretty(&out)?.as_bytes())?;
    finish_manifest(&dir, clock)?;
    Ok((dir, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutput {
    pub trend_holds: bool,
    pub non_increasing: usize,
    pub comparisons: usize,
    pub study: ConvergenceStudy,
}

/// `kinflow converge`. Replicate seeds are `run.seed + s` for each
/// configured `s`.
pub fn converge(config: &RunConfig, force: bool) -> CliResult<(PathBuf, StudyOutput)> {
    let dir = config.run_dir();
    let seeds: Vec<u64> = config
        .converge
        .seeds
        .iter()
        .map(|s| s.wrapping_add(config.run.seed))
        .collect();
    prepare_run_dir(&dir, force)?;
    RunManifest::new("converge", config).write(&dir)?;
    let clock = Instant::now();
    let study = convergence_study(
        &config.density,
        &config.converge.sizes,
        &seeds,
        |n| config.dynamics(n),
        config.run.t_final,
        config.run.dt,
        config.converge.subsamples,
    )?;
    let mut csv = String::from("n_low,n_high,seed,t,w1\n");
    for r in &study.rows {
        csv += &format!("{},{},{},{},{}\n", r.n_low, r.n_high, r.seed, r.t, r.w1);
    }
    write_atomic(&dir.join(STUDY_CSV), csv.as_bytes())?;
    let (non_increasing, comparisons) = study.non_increasing_count();
    let out = StudyOutput {
        trend_holds: study.trend_holds(),
        non_increasing,
        comparisons,
        study,
    };
    write_atomic(&dir.join(STUDY_JSON), serde_json::to_string_pretty(&out)?.as_bytes())?;
    finish_manifest(&dir, clock)?;
    Ok((dir, out))
}

fn finish_manifest(dir: &Path, clock: Instant) -> CliResult<()> {
    let mut m = RunManifest::read(dir)?;
    m.timings = Some(Timings {
        setup_seconds: 0.0,
        run_seconds: clock.elapsed().as_secs_f64(),
        output_seconds: 0.0,
    });
    m.write(dir)
}
