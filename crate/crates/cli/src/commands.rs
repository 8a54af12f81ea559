//! The subcommands. Each one reads its inputs, runs, and writes its outputs
//! plus a manifest into the configured output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;

use lsfwi::grid::Grid2D;
use lsfwi::inversion::{achievable_erf, classic_fwi, erf, joint_invert, pls_fwi_multiscale, rre, Algorithm, InversionRun};
use lsfwi::io::{read_cube, read_model, write_cube, write_model, write_vector_csv, ModelFile};
use lsfwi::levelset::{
    adaptive_epsilon, compose_from_phi, fit_shape, gradient_magnitude, init_levelset, HeavisideConfig,
};
use lsfwi::model::{
    linear_background, make_salt_model, slowness_sq_to_velocity, velocity_to_slowness_sq, Shape,
};
use lsfwi::optim::History;
use lsfwi::rbf::{assemble_kernel, build_node_grid, KernelMatrix, RbfNodeGrid, RbfSpec};
use lsfwi::survey::{add_noise, forward_model, standard_acquisition, Survey};

use crate::config::RunConfig;
use crate::manifest::{BandEntry, Manifest};
use crate::CliError;

const SLOWNESS_UNIT: &str = "s2/m2";

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn velocity(m: &[f64]) -> Vec<f64> {
    m.iter().map(|&v| slowness_sq_to_velocity(v)).collect()
}

/// Salt geometry from the config: explicit shape, then mask file, then preset.
pub fn resolve_shape(cfg: &RunConfig, grid: &Grid2D) -> Result<Shape, CliError> {
    if let Some(shape) = &cfg.model.shape {
        return Ok(shape.clone());
    }
    if let Some(path) = &cfg.paths.mask {
        let file = read_model(path)?;
        if file.grid != *grid {
            return Err(CliError::Config(format!("mask {} was built for a different grid", path.display())));
        }
        let values = file
            .require("indicator")?
            .iter()
            .map(|&v| match v {
                0.0 => Ok(0u8),
                1.0 => Ok(1u8),
                other => Err(CliError::Io(format!("mask {} holds non-binary value {other}", path.display()))),
            })
            .collect::<Result<Vec<u8>, CliError>>()?;
        return Ok(Shape::Mask { values });
    }
    if let Some(preset) = cfg.model.preset {
        return Ok(preset.shape(grid));
    }
    Err(CliError::Config("model needs one of model.shape, model.preset, or paths.mask".into()))
}

fn rbf_setup(cfg: &RunConfig, grid: &Grid2D) -> Result<(RbfNodeGrid, KernelMatrix), CliError> {
    let nodes = build_node_grid(grid, cfg.rbf.ratio, cfg.rbf.padding)?;
    let spec = RbfSpec::for_nodes(cfg.rbf.family, cfg.rbf.gamma, &nodes)?;
    let kernel = assemble_kernel(grid, &nodes, &spec)?;
    Ok((nodes, kernel))
}

fn initial_alpha(cfg: &RunConfig, grid: &Grid2D, nodes: &RbfNodeGrid) -> Result<Vec<f64>, CliError> {
    let center = cfg.init.center.unwrap_or_else(|| grid.center());
    let radius = cfg.init.radius.unwrap_or(2.0 * nodes.spacing);
    Ok(init_levelset(nodes, center, radius, cfg.init.inside, cfg.init.outside)?)
}

fn write_history(history: &History, path: &Path) -> Result<(), CliError> {
    history.write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Truth model, noise-free cube, and (when an SNR is configured) a noisy cube.
pub fn generate(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let grid = cfg.grid.build()?;
    ensure_dir(&cfg.paths.out_dir)?;
    let mut manifest = Manifest::new("generate", cfg);
    if let Some(mask) = &cfg.paths.mask {
        manifest.input("mask", mask)?;
    }
    let background = linear_background(&grid, &cfg.model.background)?;
    let shape = resolve_shape(cfg, &grid)?;
    let truth = make_salt_model(&grid, &background, &shape, cfg.model.salt_velocity)?;
    let acquisition = standard_acquisition(&grid, cfg.acquisition.n_sources, cfg.acquisition.n_receivers)?;
    let survey = Survey::new(grid, acquisition, cfg.pml)?;
    info!("modeling {} frequencies for {} sources", survey.acquisition.n_frequencies(), survey.acquisition.n_sources());
    let clean = forward_model(&survey, &truth.m)?;

    let truth_path = cfg.truth_path();
    let file = ModelFile::new(grid)
        .with_field("m", SLOWNESS_UNIT, truth.m.clone())
        .with_field("m0", SLOWNESS_UNIT, truth.m0.clone())
        .with_field("indicator", "1", truth.indicator.clone())
        .with_field("velocity", "m/s", velocity(&truth.m))
        .with_attribute("m1", truth.m1)?
        .with_attribute("salt_velocity", cfg.model.salt_velocity)?
        .with_attribute("background", cfg.model.background)?;
    write_model(&truth_path, &file)?;
    manifest.output("truth", &truth_path)?;

    let clean_path = cfg.clean_data_path();
    write_cube(&clean_path, &clean)?;
    manifest.output("data", &clean_path)?;
    if let Some(snr) = cfg.noise.snr_db {
        let noisy = add_noise(&clean, snr, cfg.seed)?;
        let noisy_path = cfg.noisy_data_path();
        write_cube(&noisy_path, &noisy)?;
        manifest.output("data_noisy", &noisy_path)?;
    }
    manifest.write(&cfg.paths.out_dir.join("generate_manifest.json"))?;
    Ok(manifest)
}

/// Output file names for a run of `algorithm`.
pub fn run_prefix(algorithm: Algorithm) -> &'static str {
    match algorithm {
        Algorithm::Fwi => "fwi",
        Algorithm::Pls => "pls",
        Algorithm::PlsJoint => "pls-joint",
    }
}

pub fn manifest_path(cfg: &RunConfig) -> PathBuf {
    cfg.paths.out_dir.join(format!("{}_manifest.json", run_prefix(cfg.algorithm)))
}

/// Runs the configured algorithm on the configured data. A failure still
/// leaves a manifest recording the cause.
pub fn invert(cfg: &RunConfig) -> Result<Manifest, CliError> {
    ensure_dir(&cfg.paths.out_dir)?;
    let mut manifest = Manifest::new("invert", cfg);
    manifest.algorithm = Some(cfg.algorithm);
    let outcome = invert_inner(cfg, &mut manifest);
    if let Err(e) = &outcome {
        manifest.fail(e);
    }
    manifest.write(&manifest_path(cfg))?;
    outcome.map(|_| manifest)
}

fn invert_inner(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), CliError> {
    let grid = cfg.grid.build()?;
    let data_path = cfg.data_path();
    manifest.input("data", &data_path)?;
    let d_obs = read_cube(&data_path)?;
    let acquisition = d_obs.acquisition.clone();
    let survey = Survey::new(grid, acquisition, cfg.pml)?;
    let truth_path = cfg.truth_path();
    let truth = if truth_path.exists() {
        manifest.input("truth", &truth_path)?;
        let file = read_model(&truth_path)?;
        if file.grid != grid {
            return Err(CliError::Config("truth model grid differs from the configured grid".into()));
        }
        Some(file.require("m")?.to_vec())
    } else {
        None
    };

    let m1 = velocity_to_slowness_sq(cfg.model.salt_velocity);
    let background = linear_background(&grid, &cfg.model.background)?;
    let bands = &survey.acquisition.bands;
    let inv = &cfg.inversion;
    info!("running {:?} over {} bands", cfg.algorithm, bands.len());
    let (run, kernel): (InversionRun, Option<KernelMatrix>) = match cfg.algorithm {
        Algorithm::Fwi => (classic_fwi(&background, &survey, &d_obs, bands, inv)?, None),
        Algorithm::Pls | Algorithm::PlsJoint => {
            let (nodes, kernel) = rbf_setup(cfg, &grid)?;
            let alpha0 = initial_alpha(cfg, &grid, &nodes)?;
            let run = if cfg.algorithm == Algorithm::Pls {
                pls_fwi_multiscale(&alpha0, &background, m1, &kernel, &survey, &d_obs, bands, inv)?
            } else {
                joint_invert(&alpha0, &grid, m1, &kernel, &survey, &d_obs, bands, inv)?
            };
            (run, Some(kernel))
        }
    };

    let prefix = run_prefix(cfg.algorithm);
    let out = &cfg.paths.out_dir;
    for rec in &run.bands {
        let name = format!("{prefix}_band{}.csv", rec.band);
        let path = out.join(&name);
        write_history(&rec.history, &path)?;
        manifest.output(&format!("history_band{}", rec.band), &path)?;
        manifest.bands.push(BandEntry::from_record(rec, &survey.acquisition.frequencies, &name));
    }

    let mut file = ModelFile::new(grid)
        .with_field("m", SLOWNESS_UNIT, run.model.clone())
        .with_field("start", SLOWNESS_UNIT, run.start.clone())
        .with_field("m0", SLOWNESS_UNIT, run.background.clone())
        .with_field("velocity", "m/s", velocity(&run.model))
        .with_attribute("algorithm", cfg.algorithm)?
        .with_attribute("m1", m1)?;
    if let (Some(alpha), Some(kernel)) = (&run.alpha, &kernel) {
        let phi = kernel.apply(alpha)?;
        let kappa = run.bands.last().and_then(|b| b.kappa).unwrap_or(inv.kappa0);
        file = file
            .with_field("phi", "1", phi)
            .with_attribute("kappa_final", kappa)?
            .with_attribute("heaviside", inv.heaviside)?;
        let alpha_path = out.join(format!("{prefix}_alpha.csv"));
        write_vector_csv(&alpha_path, "alpha", alpha)?;
        manifest.output("alpha", &alpha_path)?;
    }
    let model_path = out.join(format!("{prefix}_model.mod"));
    write_model(&model_path, &file)?;
    manifest.output("model", &model_path)?;

    let union = survey.acquisition.band_union();
    manifest.metrics.insert("erf".into(), erf(&survey, &run.model, &run.start, &d_obs, &union)?);
    if let Some(m_true) = truth {
        manifest
            .metrics
            .insert("erf_achievable".into(), achievable_erf(&survey, &m_true, &run.start, &d_obs, &union)?);
        manifest.metrics.insert("rre".into(), rre(&run.model, &m_true, &run.start)?);
    }
    Ok(())
}

/// Fits the level set to the configured salt mask (no wave physics).
pub fn fit_shape_cmd(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let grid = cfg.grid.build()?;
    ensure_dir(&cfg.paths.out_dir)?;
    let mut manifest = Manifest::new("fit-shape", cfg);
    if let Some(mask) = &cfg.paths.mask {
        manifest.input("mask", mask)?;
    }
    let target = resolve_shape(cfg, &grid)?.rasterize(&grid)?;
    let (nodes, kernel) = rbf_setup(cfg, &grid)?;
    let alpha0 = initial_alpha(cfg, &grid, &nodes)?;
    let sf = &cfg.shape_fit;
    let heaviside = HeavisideConfig { kind: sf.heaviside, epsilon: sf.epsilon, kappa: sf.kappa };
    let fit = fit_shape(&target, &kernel, &heaviside, sf.adaptive, &alpha0, &sf.optimizer)?;
    info!("fit reached IoU {:.4} after {} iterations", fit.iou, fit.optim.iterations);

    let out = &cfg.paths.out_dir;
    let history_path = out.join("fit_history.csv");
    write_history(&fit.optim.history, &history_path)?;
    manifest.output("history", &history_path)?;
    let alpha_path = out.join("fit_alpha.csv");
    write_vector_csv(&alpha_path, "alpha", &fit.alpha)?;
    manifest.output("alpha", &alpha_path)?;
    let model_path = out.join("fit_shape.mod");
    let file = ModelFile::new(grid)
        .with_field("target", "1", target)
        .with_field("fitted", "1", fit.mask.clone())
        .with_field("phi", "1", kernel.apply(&fit.alpha)?)
        .with_attribute("epsilon", fit.epsilon)?;
    write_model(&model_path, &file)?;
    manifest.output("model", &model_path)?;
    manifest.metrics.insert("iou".into(), fit.iou);
    manifest.metrics.insert("epsilon".into(), fit.epsilon);
    manifest.write(&out.join("fit_manifest.json"))?;
    Ok(manifest)
}

/// One comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    pub erf_fwi: f64,
    pub erf_pls: f64,
    pub erf_achievable: f64,
    pub rre_fwi: f64,
    pub rre_pls: f64,
}

pub const METRICS_COLUMNS: [&str; 6] = ["model", "erf_fwi", "erf_pls", "erf_achievable", "rre_fwi", "rre_pls"];

/// Input files for a metrics row.
#[derive(Debug, Clone)]
pub struct MetricsInputs {
    pub truth: PathBuf,
    pub data: PathBuf,
    pub fwi: PathBuf,
    pub pls: PathBuf,
}

/// ERF and RRE of both runs against their own starting models. The
/// achievable ERF uses the level-set run's start.
pub fn metrics(label: &str, inputs: &MetricsInputs, cfg: &RunConfig) -> Result<MetricsRow, CliError> {
    let missing: Vec<String> = [&inputs.truth, &inputs.data, &inputs.fwi, &inputs.pls]
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Io(format!("missing inputs: {}", missing.join(", "))));
    }
    let truth = read_model(&inputs.truth)?;
    let d_obs = read_cube(&inputs.data)?;
    let fwi = read_model(&inputs.fwi)?;
    let pls = read_model(&inputs.pls)?;
    for f in [&fwi, &pls] {
        if f.grid != truth.grid {
            return Err(CliError::Config("run models and truth use different grids".into()));
        }
    }
    let survey = Survey::new(truth.grid, d_obs.acquisition.clone(), cfg.pml)?;
    let union = survey.acquisition.band_union();
    let m_true = truth.require("m")?;
    let row_erf = |f: &ModelFile| -> Result<f64, CliError> {
        Ok(erf(&survey, f.require("m")?, f.require("start")?, &d_obs, &union)?)
    };
    let row_rre = |f: &ModelFile| -> Result<f64, CliError> { Ok(rre(f.require("m")?, m_true, f.require("start")?)?) };
    Ok(MetricsRow {
        model: label.to_string(),
        erf_fwi: row_erf(&fwi)?,
        erf_pls: row_erf(&pls)?,
        erf_achievable: achievable_erf(&survey, m_true, pls.require("start")?, &d_obs, &union)?,
        rre_fwi: row_rre(&fwi)?,
        rre_pls: row_rre(&pls)?,
    })
}

/// Appends rows to a metrics table, writing the header for a new file.
pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), CliError> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    if fresh {
        w.write_record(METRICS_COLUMNS).map_err(csv_err)?;
    }
    for r in rows {
        w.write_record([
            r.model.clone(),
            format!("{:e}", r.erf_fwi),
            format!("{:e}", r.erf_pls),
            format!("{:e}", r.erf_achievable),
            format!("{:e}", r.rre_fwi),
            format!("{:e}", r.rre_pls),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot-ready fields of a finished run: model and velocity, plus the level
/// set, its Heaviside image, and `|∇φ|` for level-set runs.
pub fn export(run_model: &Path, out: &Path) -> Result<ModelFile, CliError> {
    let run = read_model(run_model)?;
    let grid = run.grid;
    let m = run.require("m")?.to_vec();
    let mut file = ModelFile::new(grid)
        .with_field("m", SLOWNESS_UNIT, m.clone())
        .with_field("velocity", "m/s", velocity(&m));
    if let Some(phi) = run.field("phi") {
        let kappa = run
            .attributes
            .get("kappa_final")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| CliError::Io("level-set run lacks the kappa_final attribute".into()))?;
        let kind = match run.attributes.get("heaviside") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Io(e.to_string()))?,
            None => Default::default(),
        };
        let eps = adaptive_epsilon(phi, kappa)?;
        let cfg = HeavisideConfig { kind, epsilon: eps, kappa };
        let zeros = vec![0.0; phi.len()];
        let (h, _) = compose_from_phi(&zeros, 1.0, phi, &cfg)?;
        file = file
            .with_field("phi", "1", phi.to_vec())
            .with_field("h", "1", h)
            .with_field("grad_phi", "1/m", gradient_magnitude(&grid, phi)?)
            .with_attribute("epsilon", eps)?;
    }
    write_model(out, &file)?;
    Ok(file)
}
