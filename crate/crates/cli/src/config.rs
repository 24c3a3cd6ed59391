//! Flat `section.key = value` run configuration (TOML syntax).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kinflow_core::density::EstimatorKind;
use kinflow_core::flow::{DensityKind, PhaseBox};
use kinflow_core::force::DEFAULT_QUADRATURE_ORDER;
use kinflow_core::{
    CutoffForce, DriveField, ForceModel, InitialDensity, MeanFieldDynamics, MollifiedDrive, ProfileKind, Vec2,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

use crate::error::{CliError, CliResult};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STRIDE: usize = 10;

/// Every accepted key path.
pub const KNOWN_KEYS: &[&str] = &[
    "force.profile_kind",
    "force.k_n",
    "force.gamma_n",
    "force.gamma_t",
    "force.r",
    "force.r_tilde",
    "cutoff.theta",
    "drive.kind",
    "drive.g",
    "drive.center",
    "drive.amplitude",
    "drive.sigma",
    "drive.speed",
    "drive.width",
    "drive.quadrature_order",
    "density.kind",
    "density.mass",
    "density.lo",
    "density.hi",
    "density.mean",
    "density.x_sigma",
    "density.v_sigma",
    "density.truncation",
    "density.first_lo",
    "density.first_hi",
    "density.second_lo",
    "density.second_hi",
    "density.fraction",
    "run.n_particles",
    "run.t_final",
    "run.dt",
    "run.record_stride",
    "run.seed",
    "run.snapshot_times",
    "grid.bins",
    "grid.inflation",
    "grid.estimator",
    "grid.track_sup",
    "grid.export",
    "output.dir",
    "stability.shift",
    "converge.sizes",
    "converge.seeds",
    "converge.subsamples",
    "debug.e_cap_override",
];

pub const REQUIRED_KEYS: &[&str] = &["density.kind", "run.n_particles", "run.t_final"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSection {
    pub profile_kind: ProfileKind,
    pub k_n: f64,
    pub gamma_n: f64,
    pub gamma_t: f64,
    pub r: f64,
    pub r_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSection {
    pub field: DriveField,
    pub quadrature_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub n_particles: usize,
    pub t_final: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub bins: usize,
    pub inflation: f64,
    pub estimator: EstimatorKind,
    /// Fill `sup_density` in every record (one estimate per record).
    pub track_sup: bool,
    /// Write the final-time density estimate.
    pub export: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeSection {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub subsamples: usize,
}

/// A validated run description with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub force: ForceSection,
    pub theta: f64,
    pub drive: DriveSection,
    pub density: InitialDensity,
    pub run: RunSection,
    pub grid: GridSection,
    pub output_dir: PathBuf,
    /// Phase-space shift `(dx1, dx2, dv1, dv2)` of the second datum in a
    /// stability run.
    pub stability_shift: [f64; 4],
    pub converge: ConvergeSection,
    pub e_cap_override: Option<f64>,
}

/// Flattened `key path -> value` view of the parsed document; entries are
/// removed as they are consumed.
struct Fields {
    values: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&path, t, out),
            other => {
                out.insert(path, other.clone());
            }
        }
    }
}

fn type_error(key: &str, expected: &str, got: &Value) -> CliError {
    CliError::Config(format!("{key}: expected {expected}, found {}", got.type_str()))
}

fn as_f64(key: &str, v: &Value) -> CliResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(type_error(key, "a number", other)),
    }
}

fn as_u64(key: &str, v: &Value) -> CliResult<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(_) => Err(CliError::Config(format!("{key}: must be nonnegative"))),
        other => Err(type_error(key, "an integer", other)),
    }
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.values.remove(key)
    }

    fn f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        self.take(key).map(|v| as_f64(key, &v)).transpose()
    }

    fn f64_or(&mut self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn require_f64(&mut self, key: &str) -> CliResult<f64> {
        self.f64(key)?.ok_or_else(|| missing(&[key]))
    }

    fn u64(&mut self, key: &str) -> CliResult<Option<u64>> {
        self.take(key).map(|v| as_u64(key, &v)).transpose()
    }

    fn usize_or(&mut self, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.u64(key)?.map_or(default, |v| v as usize))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> CliResult<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(b),
            Some(other) => Err(type_error(key, "true or false", &other)),
        }
    }

    fn string(&mut self, key: &str) -> CliResult<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(type_error(key, "a quoted string", &other)),
        }
    }

    fn f64_list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a.iter().map(|v| as_f64(key, v)).collect::<CliResult<_>>().map(Some),
            Some(other) => Err(type_error(key, "an array of numbers", &other)),
        }
    }

    fn u64_list(&mut self, key: &str) -> CliResult<Option<Vec<u64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a.iter().map(|v| as_u64(key, v)).collect::<CliResult<_>>().map(Some),
            Some(other) => Err(type_error(key, "an array of integers", &other)),
        }
    }

    fn array<const K: usize>(&mut self, key: &str) -> CliResult<Option<[f64; K]>> {
        match self.f64_list(key)? {
            None => Ok(None),
            Some(v) => <[f64; K]>::try_from(v.as_slice())
                .map(Some)
                .map_err(|_| CliError::Config(format!("{key}: expected {K} numbers, found {}", v.len()))),
        }
    }

    fn require_array<const K: usize>(&mut self, key: &str) -> CliResult<[f64; K]> {
        self.array(key)?.ok_or_else(|| missing(&[key]))
    }
}

fn missing(keys: &[&str]) -> CliError {
    CliError::Config(format!("missing required key(s): {}", keys.join(", ")))
}

fn check(ok: bool, key: &str, reason: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: {reason}")))
    }
}

fn positive(key: &str, v: f64) -> CliResult<f64> {
    check(v > 0.0 && v.is_finite(), key, "must be positive and finite")?;
    Ok(v)
}

fn nonnegative(key: &str, v: f64) -> CliResult<f64> {
    check(v >= 0.0 && v.is_finite(), key, "must be nonnegative and finite")?;
    Ok(v)
}

fn phase_box(lo_key: &str, hi_key: &str, lo: [f64; 4], hi: [f64; 4]) -> CliResult<PhaseBox> {
    PhaseBox::new(lo, hi).map_err(|e| CliError::Config(format!("{lo_key}/{hi_key}: {e}")))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates a configuration document.
    pub fn parse(text: &str) -> CliResult<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &table, &mut values);
        let unknown: Vec<&String> = values.keys().filter(|k| !KNOWN_KEYS.contains(&k.as_str())).collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Config(format!("unknown key(s): {}", list.join(", "))));
        }
        let absent: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !values.contains_key(*k)).collect();
        if !absent.is_empty() {
            return Err(missing(&absent));
        }
        let mut f = Fields { values };
        let config = Self::build(&mut f)?;
        if let Some(key) = f.values.keys().next() {
            return Err(CliError::Config(format!(
                "{key}: not applicable with the selected kinds (drive.kind = {}, density.kind = {})",
                drive_kind_name(&config.drive.field),
                density_kind_name(&config.density.kind)
            )));
        }
        Ok(config)
    }

    fn build(f: &mut Fields) -> CliResult<Self> {
        let profile_kind = match f.string("force.profile_kind")?.as_deref() {
            None | Some("spring") => ProfileKind::Spring,
            Some("morse") => ProfileKind::Morse,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "force.profile_kind: unknown profile `{other}` (expected \"spring\" or \"morse\")"
                )))
            }
        };
        let force = ForceSection {
            profile_kind,
            k_n: nonnegative("force.k_n", f.f64_or("force.k_n", 1.0)?)?,
            gamma_n: nonnegative("force.gamma_n", f.f64_or("force.gamma_n", 0.5)?)?,
            gamma_t: nonnegative("force.gamma_t", f.f64_or("force.gamma_t", 1.0)?)?,
            r: positive("force.r", f.f64_or("force.r", 0.5)?)?,
            r_tilde: positive("force.r_tilde", f.f64_or("force.r_tilde", 1.0)?)?,
        };
        let theta = positive("cutoff.theta", f.f64_or("cutoff.theta", kinflow_core::DEFAULT_THETA)?)?;

        let field = match f.string("drive.kind")?.as_deref() {
            None | Some("constant") => {
                let g = f.array::<2>("drive.g")?.unwrap_or([0.0, 0.0]);
                check(g.iter().all(|c| c.is_finite()), "drive.g", "must be finite")?;
                DriveField::Constant { g: Vec2::new(g[0], g[1]) }
            }
            Some("gaussian_well") => {
                let c = f.array::<2>("drive.center")?.unwrap_or([0.0, 0.0]);
                check(c.iter().all(|x| x.is_finite()), "drive.center", "must be finite")?;
                DriveField::GaussianWell {
                    center: Vec2::new(c[0], c[1]),
                    amplitude: nonnegative("drive.amplitude", f.require_f64("drive.amplitude")?)?,
                    sigma: positive("drive.sigma", f.require_f64("drive.sigma")?)?,
                }
            }
            Some("lane") => DriveField::Lane {
                speed: {
                    let s = f.require_f64("drive.speed")?;
                    check(s.is_finite(), "drive.speed", "must be finite")?;
                    s
                },
                amplitude: nonnegative("drive.amplitude", f.require_f64("drive.amplitude")?)?,
                width: positive("drive.width", f.require_f64("drive.width")?)?,
            },
            Some(other) => {
                return Err(CliError::Config(format!(
                    "drive.kind: unknown drive `{other}` (expected \"constant\", \"gaussian_well\" or \"lane\")"
                )))
            }
        };
        let quadrature_order = f.usize_or("drive.quadrature_order", DEFAULT_QUADRATURE_ORDER)?;
        check(quadrature_order >= 1, "drive.quadrature_order", "must be at least 1")?;
        let drive = DriveSection { field, quadrature_order };

        let mass = positive("density.mass", f.f64_or("density.mass", 1.0)?)?;
        let kind = match f.string("density.kind")?.as_deref() {
            Some("uniform") => {
                let lo = f.require_array::<4>("density.lo")?;
                let hi = f.require_array::<4>("density.hi")?;
                DensityKind::Uniform {
                    region: phase_box("density.lo", "density.hi", lo, hi)?,
                }
            }
            Some("truncated_gaussian") => {
                let mean = f.array::<4>("density.mean")?.unwrap_or([0.0; 4]);
                check(mean.iter().all(|m| m.is_finite()), "density.mean", "must be finite")?;
                DensityKind::TruncatedGaussian {
                    mean,
                    x_sigma: positive("density.x_sigma", f.require_f64("density.x_sigma")?)?,
                    v_sigma: positive("density.v_sigma", f.require_f64("density.v_sigma")?)?,
                    truncation: positive("density.truncation", f.f64_or("density.truncation", 3.0)?)?,
                }
            }
            Some("two_bump") => {
                let first = phase_box(
                    "density.first_lo",
                    "density.first_hi",
                    f.require_array::<4>("density.first_lo")?,
                    f.require_array::<4>("density.first_hi")?,
                )?;
                let second = phase_box(
                    "density.second_lo",
                    "density.second_hi",
                    f.require_array::<4>("density.second_lo")?,
                    f.require_array::<4>("density.second_hi")?,
                )?;
                let fraction = f.f64_or("density.fraction", 0.5)?;
                check(fraction > 0.0 && fraction < 1.0, "density.fraction", "must lie in (0, 1)")?;
                DensityKind::TwoBump {
                    first,
                    second,
                    fraction,
                }
            }
            Some(other) => {
                return Err(CliError::Config(format!(
                    "density.kind: unknown density `{other}` (expected \"uniform\", \"truncated_gaussian\" or \"two_bump\")"
                )))
            }
            None => return Err(missing(&["density.kind"])),
        };
        let density = InitialDensity::new(kind, mass).map_err(|e| CliError::Config(e.to_string()))?;

        let n_particles = f.u64("run.n_particles")?.ok_or_else(|| missing(&["run.n_particles"]))? as usize;
        check(n_particles >= 1, "run.n_particles", "must be at least 1")?;
        let t_final = nonnegative("run.t_final", f.require_f64("run.t_final")?)?;
        let dt = positive("run.dt", f.f64_or("run.dt", DEFAULT_DT)?)?;
        let record_stride = f.usize_or("run.record_stride", DEFAULT_STRIDE)?;
        check(record_stride >= 1, "run.record_stride", "must be at least 1")?;
        let seed = f.u64("run.seed")?.unwrap_or(0);
        let mut snapshot_times = f.f64_list("run.snapshot_times")?.unwrap_or_default();
        check(
            snapshot_times.iter().all(|&t| t >= 0.0 && t <= t_final),
            "run.snapshot_times",
            "every time must lie in [0, run.t_final]",
        )?;
        snapshot_times.sort_by(f64::total_cmp);
        snapshot_times.dedup();
        let run = RunSection {
            n_particles,
            t_final,
            dt,
            record_stride,
            seed,
            snapshot_times,
        };

        let bins = f.usize_or("grid.bins", kinflow_core::density::DEFAULT_BINS)?;
        check(bins >= 2, "grid.bins", "must be at least 2")?;
        let inflation = nonnegative(
            "grid.inflation",
            f.f64_or("grid.inflation", kinflow_core::density::DEFAULT_INFLATION)?,
        )?;
        let estimator = match f.string("grid.estimator")?.as_deref() {
            None | Some("histogram") => EstimatorKind::Histogram,
            Some("kde") => EstimatorKind::Kde,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "grid.estimator: unknown estimator `{other}` (expected \"histogram\" or \"kde\")"
                )))
            }
        };
        let grid = GridSection {
            bins,
            inflation,
            estimator,
            track_sup: f.bool_or("grid.track_sup", false)?,
            export: f.bool_or("grid.export", false)?,
        };

        let output_dir = PathBuf::from(f.string("output.dir")?.unwrap_or_else(|| "runs".into()));
        let stability_shift = f.array::<4>("stability.shift")?.unwrap_or([0.0; 4]);
        check(stability_shift.iter().all(|s| s.is_finite()), "stability.shift", "must be finite")?;

        let sizes: Vec<usize> = f
            .u64_list("converge.sizes")?
            .map(|v| v.into_iter().map(|n| n as usize).collect())
            .unwrap_or_else(|| vec![64, 128, 256, 512]);
        check(sizes.len() >= 2, "converge.sizes", "need at least two sizes")?;
        check(
            sizes.windows(2).all(|w| w[0] < w[1]),
            "converge.sizes",
            "sizes must be strictly increasing",
        )?;
        check(
            sizes.iter().all(|n| (1..=kinflow_core::transport::W1_SIZE_LIMIT).contains(n)),
            "converge.sizes",
            "sizes must lie in [1, 1024]",
        )?;
        let seeds = f.u64_list("converge.seeds")?.unwrap_or_else(|| (0..8).collect());
        check(!seeds.is_empty(), "converge.seeds", "need at least one seed")?;
        let subsamples = f.usize_or("converge.subsamples", 16)?;
        check(subsamples >= 1, "converge.subsamples", "must be at least 1")?;
        let converge = ConvergeSection {
            sizes,
            seeds,
            subsamples,
        };

        let e_cap_override = f.f64("debug.e_cap_override")?;
        if let Some(cap) = e_cap_override {
            nonnegative("debug.e_cap_override", cap)?;
        }

        Ok(RunConfig {
            force,
            theta,
            drive,
            density,
            run,
            grid,
            output_dir,
            stability_shift,
            converge,
            e_cap_override,
        })
    }

    pub fn force_model(&self) -> ForceModel {
        let s = &self.force;
        ForceModel::new(s.profile_kind, s.k_n, s.gamma_n, s.gamma_t, s.r, s.r_tilde)
            .expect("force parameters validated at parse time")
    }

    /// Kernels for an ensemble of `n` particles (`N^-theta` cut-off, `1/N` mollifier).
    pub fn dynamics(&self, n: usize) -> kinflow_core::Result<MeanFieldDynamics> {
        let cf = CutoffForce::new(self.force_model(), n, self.theta)?;
        let md = MollifiedDrive::new(self.drive.field, n, self.drive.quadrature_order)?;
        Ok(MeanFieldDynamics::new(cf, md))
    }

    /// SHA-256 of the configuration with the seed and output directory
    /// blanked, as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.seed = 0;
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `<output dir>/<hash>-seed<seed>`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(format!("{}-seed{}", self.hash(), self.run.seed))
    }
}

fn drive_kind_name(field: &DriveField) -> &'static str {
    match field {
        DriveField::Constant { .. } => "constant",
        DriveField::GaussianWell { .. } => "gaussian_well",
        DriveField::Lane { .. } => "lane",
    }
}

fn density_kind_name(kind: &DensityKind) -> &'static str {
    match kind {
        DensityKind::Uniform { .. } => "uniform",
        DensityKind::TruncatedGaussian { .. } => "truncated_gaussian",
        DensityKind::TwoBump { .. } => "two_bump",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
density.kind = "truncated_gaussian"
density.x_sigma = 1.0
density.v_sigma = 0.5
run.n_particles = 100
run.t_final = 1.0
"#;

    fn config_error(text: &str) -> String {
        match RunConfig::parse(text) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let msg = config_error("");
        for key in REQUIRED_KEYS {
            assert!(msg.contains(key), "{msg}");
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.theta, 0.25);
        assert_eq!(c.run.dt, 1e-3);
        assert_eq!(c.run.record_stride, 10);
        assert_eq!(c.run.seed, 0);
        assert_eq!(c.drive.field, DriveField::zero());
        assert_eq!(c.drive.quadrature_order, 24);
        assert_eq!(c.grid.bins, 20);
    }

    #[test]
    fn negative_theta_names_the_key() {
        let msg = config_error(&format!("{MINIMAL}\ncutoff.theta = -1"));
        assert!(msg.contains("cutoff.theta"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let msg = config_error(&format!("{MINIMAL}\nrun.n_particle = 5"));
        assert!(msg.contains("run.n_particle"), "{msg}");
        let msg = config_error(&format!("{MINIMAL}\n[force]\nkn = 1.0"));
        assert!(msg.contains("force.kn"), "{msg}");
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let msg = config_error(&MINIMAL.replace("run.t_final = 1.0", "run.t_final = \"long\""));
        assert!(msg.contains("run.t_final") && msg.contains("number"), "{msg}");
        let msg = config_error(&format!("{MINIMAL}\nforce.profile_kind = spring"));
        assert!(!msg.is_empty());
    }

    #[test]
    fn inapplicable_keys_are_rejected() {
        let msg = config_error(&format!("{MINIMAL}\ndensity.lo = [0, 0, 0, 0]"));
        assert!(msg.contains("density.lo"), "{msg}");
    }

    #[test]
    fn sections_and_dotted_keys_are_equivalent() {
        let sectioned = r#"
[density]
kind = "truncated_gaussian"
x_sigma = 1.0
v_sigma = 0.5
[run]
n_particles = 100
t_final = 1.0
"#;
        assert_eq!(RunConfig::parse(sectioned).unwrap(), RunConfig::parse(MINIMAL).unwrap());
    }

    #[test]
    fn hash_ignores_seed_and_output() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let b = RunConfig::parse(&format!("{MINIMAL}\nrun.seed = 7\noutput.dir = \"elsewhere\"")).unwrap();
        let c = RunConfig::parse(&format!("{MINIMAL}\nrun.dt = 0.01")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert!(b.run_dir().ends_with(format!("{}-seed7", a.hash())));
    }

    #[test]
    fn every_drive_and_density_kind_parses() {
        let text = r#"
force.profile_kind = "morse"
drive.kind = "lane"
drive.speed = 1.0
drive.amplitude = 0.5
drive.width = 0.2
density.kind = "two_bump"
density.first_lo = [0, 0, 0, 0]
density.first_hi = [1, 1, 1, 1]
density.second_lo = [2, 2, 0, 0]
density.second_hi = [3, 3, 1, 1]
density.fraction = 0.25
run.n_particles = 10
run.t_final = 0
run.snapshot_times = [0.0]
"#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.force.profile_kind, ProfileKind::Morse);
        assert!(matches!(c.drive.field, DriveField::Lane { .. }));
        assert!(matches!(c.density.kind, DensityKind::TwoBump { .. }));
        let well = MINIMAL.to_string() + "drive.kind = \"gaussian_well\"\ndrive.amplitude = 1\ndrive.sigma = 0.5\n";
        assert!(matches!(RunConfig::parse(&well).unwrap().drive.field, DriveField::GaussianWell { .. }));
    }

    #[test]
    fn snapshot_times_must_fit_the_run() {
        let msg = config_error(&format!("{MINIMAL}\nrun.snapshot_times = [2.0]"));
        assert!(msg.contains("run.snapshot_times"), "{msg}");
    }
}
