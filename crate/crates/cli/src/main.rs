use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lsfwi_cli::commands::{self, MetricsInputs};
use lsfwi_cli::config::RunConfig;
use lsfwi_cli::CliError;

#[derive(Parser)]
#[command(name = "lsfwi", version, about = "Level-set full-waveform inversion toolkit")]
struct Cli {
    /// Worker threads for the compute kernels (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set inversion.optimizer.max_iters=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load_file(&self.config, &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the truth model and synthetic data cubes.
    Generate(ConfigArgs),
    /// Run the configured inversion.
    Invert(ConfigArgs),
    /// Fit the level set to the configured salt mask.
    FitShape(ConfigArgs),
    /// Append an ERF/RRE comparison row to a CSV table.
    Metrics {
        #[command(flatten)]
        config: ConfigArgs,
        /// Row label.
        #[arg(long)]
        label: String,
        /// Classic FWI result (`.mod`).
        #[arg(long)]
        fwi: PathBuf,
        /// Level-set result (`.mod`).
        #[arg(long)]
        pls: PathBuf,
        /// Truth model; defaults to the configured one.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Observed data; defaults to the configured cube.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write plot-ready fields of a finished run.
    Export {
        /// Run result (`.mod`) written by `invert`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set thread count: {e}")))?;
    }
    match cli.command {
        Command::Generate(args) => {
            commands::generate(&args.load()?)?;
        }
        Command::Invert(args) => {
            let m = commands::invert(&args.load()?)?;
            for (k, v) in &m.metrics {
                println!("{k} = {v:.6e}");
            }
        }
        Command::FitShape(args) => {
            let m = commands::fit_shape_cmd(&args.load()?)?;
            println!("iou = {:.6}", m.metrics["iou"]);
        }
        Command::Metrics { config, label, fwi, pls, truth, data, out } => {
            let cfg = config.load()?;
            let inputs = MetricsInputs {
                truth: truth.unwrap_or_else(|| cfg.truth_path()),
                data: data.unwrap_or_else(|| cfg.data_path()),
                fwi,
                pls,
            };
            let row = commands::metrics(&label, &inputs, &cfg)?;
            commands::write_metrics(&out, &[row])?;
        }
        Command::Export { run, out } => {
            commands::export(&run, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
