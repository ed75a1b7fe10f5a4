use std::path::PathBuf;

use clap::Args;
use hisparse::bench::{self, Algorithm, Ensemble, ExperimentConfig, FieldKind};

use crate::CliError;

#[derive(Args)]
pub struct SweepArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving sweep.csv and config.json.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Override the config's RNG seed (applied after key=value overrides).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Inline key=value overrides (trials, seed, snr, recovery_eps,
    /// block_eps, max_iters, m_grid, algorithms, ensemble, field).
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn apply_override(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), CliError> {
    let bad =
        |field: &str, value: &str| CliError::invalid(format!("{field}: cannot parse {value:?}"));
    match key {
        "trials" => config.trials = value.parse().map_err(|_| bad("trials", value))?,
        "seed" => config.seed = value.parse().map_err(|_| bad("seed", value))?,
        "max_iters" => config.max_iters = value.parse().map_err(|_| bad("max_iters", value))?,
        "recovery_eps" => {
            config.recovery_eps = value.parse().map_err(|_| bad("recovery_eps", value))?
        }
        "block_eps" => config.block_eps = value.parse().map_err(|_| bad("block_eps", value))?,
        "snr" => {
            config.snr = if value == "none" {
                None
            } else {
                Some(value.parse().map_err(|_| bad("snr", value))?)
            }
        }
        "m_grid" => {
            config.m_grid = value
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("m_grid", value))?
        }
        "algorithms" => {
            config.algorithms = value
                .split(',')
                .map(|v| match v.trim() {
                    "htp" => Ok(Algorithm::Htp),
                    "hihtp" => Ok(Algorithm::Hihtp),
                    other => Err(bad("algorithms", other)),
                })
                .collect::<Result<_, _>>()?
        }
        "ensemble" => {
            config.ensemble = match value {
                "gaussian" => Ensemble::Gaussian,
                "fourier_uniform" => Ensemble::FourierUniform,
                "fourier_lowest" => Ensemble::FourierLowest,
                other => return Err(bad("ensemble", other)),
            }
        }
        "field" => {
            config.field = match value {
                "real" => FieldKind::Real,
                "complex" => FieldKind::Complex,
                other => return Err(bad("field", other)),
            }
        }
        other => return Err(CliError::invalid(format!("unknown override key {other:?}"))),
    }
    Ok(())
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::unreadable(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut config: ExperimentConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::invalid(format!("config {}: {e}", args.config.display())))?;
    for item in &args.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("override {item:?} is not KEY=VALUE")))?;
        apply_override(&mut config, key.trim(), value.trim())?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::invalid(e.to_string()))?;

    let records = bench::run_sweep(&config)?;
    std::fs::create_dir_all(&args.output)
        .map_err(|e| CliError::invalid(format!("cannot create {}: {e}", args.output.display())))?;
    let csv_path = args.output.join("sweep.csv");
    let mut csv = std::fs::File::create(&csv_path)
        .map_err(|e| CliError::invalid(format!("cannot create {}: {e}", csv_path.display())))?;
    bench::write_csv(&records, &mut csv)?;
    let sidecar_path = args.output.join("config.json");
    let mut sidecar = std::fs::File::create(&sidecar_path)
        .map_err(|e| CliError::invalid(format!("cannot create {}: {e}", sidecar_path.display())))?;
    bench::write_config_sidecar(&config, &mut sidecar)?;

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "wrote {} records to {} ({} failed trials), config sidecar {}",
        records.len(),
        csv_path.display(),
        failed,
        sidecar_path.display()
    );
    Ok(())
}
