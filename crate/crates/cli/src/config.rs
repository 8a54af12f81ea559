//! Run configuration: one TOML document, dotted-key overrides, and a few
//! path overrides from the environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lsfwi::grid::Grid2D;
use lsfwi::helmholtz::PmlConfig;
use lsfwi::inversion::{Algorithm, InversionConfig};
use lsfwi::levelset::HeavisideKind;
use lsfwi::model::{BackgroundParam, Preset, Shape};
use lsfwi::optim::OptimizeConfig;
use lsfwi::rbf::RbfFamily;

use crate::CliError;

/// Environment variables that may replace path entries.
pub const PATH_ENV: [(&str, &str); 4] = [
    ("LSFWI_OUT_DIR", "out_dir"),
    ("LSFWI_TRUTH", "truth"),
    ("LSFWI_DATA", "data"),
    ("LSFWI_MASK", "mask"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub paths: PathsConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub pml: PmlConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub rbf: RbfConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub inversion: InversionConfig,
    #[serde(default)]
    pub shape_fit: ShapeFitConfig,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Pls
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
    /// Truth model written by `generate` and read by the other commands.
    pub truth: Option<PathBuf>,
    /// Cube to invert; defaults to the noisy cube when noise is configured.
    pub data: Option<PathBuf>,
    /// Raster mask (`.mod` with an `indicator` field) for the salt body.
    pub mask: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("out"), truth: None, data: None, mask: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    pub h: f64,
}

impl GridConfig {
    pub fn build(&self) -> lsfwi::Result<Grid2D> {
        Grid2D::new(self.nx, self.nz, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// One of the bundled stand-in geometries.
    pub preset: Option<Preset>,
    /// Explicit parametric geometry; takes precedence over `preset`.
    pub shape: Option<Shape>,
    pub salt_velocity: f64,
    pub background: BackgroundParam,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { preset: None, shape: None, salt_velocity: 4500.0, background: BackgroundParam::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub n_sources: usize,
    pub n_receivers: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self { n_sources: 50, n_receivers: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// When set, `generate` also writes a noisy cube at this SNR (dB).
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbfConfig {
    pub family: RbfFamily,
    pub gamma: f64,
    /// Node spacing as a multiple of the grid spacing.
    pub ratio: usize,
    /// Node rings outside the physical domain.
    pub padding: usize,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self { family: RbfFamily::Wendland4, gamma: 4.0, ratio: 5, padding: 2 }
    }
}

/// Initial level set: `inside` on nodes within `radius` of `center`,
/// `outside` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Defaults to the grid center.
    pub center: Option<[f64; 2]>,
    /// Defaults to two node spacings.
    pub radius: Option<f64>,
    pub inside: f64,
    pub outside: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { center: None, radius: None, inside: 1.0, outside: -1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeFitConfig {
    pub optimizer: OptimizeConfig,
    pub heaviside: HeavisideKind,
    /// Adapt ε to the level-set range after every iteration.
    pub adaptive: bool,
    /// Fixed ε when `adaptive` is false, otherwise the starting value.
    pub epsilon: f64,
    pub kappa: f64,
}

impl Default for ShapeFitConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizeConfig { max_iters: 50, grad_tol: 0.0, ..Default::default() },
            heaviside: HeavisideKind::CompactSine,
            adaptive: true,
            epsilon: 0.1,
            kappa: 0.1,
        }
    }
}

impl RunConfig {
    /// Parses a document, applies `key=value` overrides, then environment
    /// path overrides, and validates the result.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        for (var, key) in PATH_ENV {
            if let Ok(v) = std::env::var(var) {
                apply_override(&mut table, &format!("paths.{key}={}", toml::Value::String(v)))?;
            }
        }
        let cfg: RunConfig = match table.try_into::<RunConfig>() {
            Ok(cfg) => cfg,
            Err(e) => {
                // parsing the document itself reports line and column
                let located = toml::from_str::<RunConfig>(text).err().unwrap_or(e);
                return Err(CliError::Config(located.to_string()));
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_file(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::load(&text, overrides).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: lsfwi::Error| CliError::Config(e.to_string());
        self.grid.build().map_err(cfg)?;
        self.pml.validate().map_err(cfg)?;
        self.inversion.validate().map_err(cfg)?;
        self.shape_fit.optimizer.validate().map_err(cfg)?;
        if !(self.model.salt_velocity > 0.0) {
            return Err(CliError::Config("model.salt_velocity must be positive".into()));
        }
        if self.acquisition.n_sources == 0 || self.acquisition.n_receivers == 0 {
            return Err(CliError::Config("acquisition needs at least one source and one receiver".into()));
        }
        if self.rbf.ratio == 0 || !(self.rbf.gamma > 0.0) {
            return Err(CliError::Config("rbf.ratio and rbf.gamma must be positive".into()));
        }
        if let Some(snr) = self.noise.snr_db {
            if !snr.is_finite() {
                return Err(CliError::Config("noise.snr_db must be finite".into()));
            }
        }
        if !(self.shape_fit.epsilon > 0.0) || !(self.shape_fit.kappa > 0.0) {
            return Err(CliError::Config("shape_fit.epsilon and shape_fit.kappa must be positive".into()));
        }
        Ok(())
    }

    pub fn truth_path(&self) -> PathBuf {
        self.paths.truth.clone().unwrap_or_else(|| self.paths.out_dir.join("truth.mod"))
    }

    pub fn clean_data_path(&self) -> PathBuf {
        self.paths.out_dir.join("data.fwd")
    }

    pub fn noisy_data_path(&self) -> PathBuf {
        self.paths.out_dir.join("data_noisy.fwd")
    }

    /// Cube used by `invert` and `metrics`.
    pub fn data_path(&self) -> PathBuf {
        match (&self.paths.data, self.noise.snr_db) {
            (Some(p), _) => p.clone(),
            (None, Some(_)) => self.noisy_data_path(),
            (None, None) => self.clean_data_path(),
        }
    }
}

/// Sets `a.b.c = value`, creating intermediate tables. The value is parsed
/// as TOML and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("override `{spec}` has an empty key segment")));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
