use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use beamsim::array::{build_dft_codebook, pattern_samples};
use beamsim::experiment::{
    build_prior_database, format_experiment_summary, run_experiment, write_outputs,
    ExperimentConfig,
};
use beamsim::metrics::{format_summary, summarize, MetricTable, METRICS_SCHEMA_VERSION};

#[derive(Parser)]
#[command(
    name = "beamsim",
    version,
    about = "Position-aided mmWave V2I beam-alignment simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Config file path, or "default" for the built-in configuration.
    #[arg(long, default_value = "default")]
    config: String,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the snapshot count.
    #[arg(long)]
    snapshots: Option<usize>,
    /// Restrict the run to a single array size N (an N×N array).
    #[arg(long)]
    array: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = automatic).
    #[arg(long)]
    workers: Option<usize>,
}

impl CommonOpts {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading config {:?}", self.config))?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(snapshots) = self.snapshots {
            config.snapshot_count = snapshots;
        }
        if let Some(n) = self.array {
            config.array_sizes = vec![n];
        }
        if let Some(out) = &self.out {
            config.output_dir = out.to_string_lossy().into_owned();
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the per-cell prior databases and write prior_<N>.json files.
    BuildPrior {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the Monte Carlo experiment and write metric/CDF CSVs.
    Run {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Export per-beam gain patterns as CSV files.
    Patterns {
        #[command(flatten)]
        common: CommonOpts,
        /// Angular sampling step in degrees.
        #[arg(long, default_value_t = 2.0)]
        step: f64,
    },
    /// Print summary statistics from a metrics CSV.
    Report {
        /// metrics_<N>.csv produced by `run`.
        metrics: PathBuf,
    },
}

fn cmd_build_prior(common: &CommonOpts) -> anyhow::Result<()> {
    let config = common.load()?;
    let dir = PathBuf::from(&config.output_dir);
    fs::create_dir_all(&dir)?;
    for &n in &config.array_sizes {
        let db = build_prior_database(&config, n)?;
        let empty = db.cells.iter().filter(|c| c.aod.is_empty()).count();
        if empty > 0 {
            log::warn!("array {n}x{n}: {empty} cells have an empty prior");
        }
        let path = dir.join(format!("prior_{n}.json"));
        fs::write(&path, db.to_json()?)?;
        println!("wrote {} ({} cells)", path.display(), db.cells.len());
    }
    Ok(())
}

fn cmd_run(common: &CommonOpts) -> anyhow::Result<()> {
    let config = common.load()?;
    let outcome = run_experiment(&config)?;
    let dir = PathBuf::from(&config.output_dir);
    let written = write_outputs(&config, &outcome, &dir)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    print!("{}", format_experiment_summary(&config, &outcome));
    Ok(())
}

fn cmd_patterns(common: &CommonOpts, step: f64) -> anyhow::Result<()> {
    let config = common.load()?;
    let dir = PathBuf::from(&config.output_dir);
    fs::create_dir_all(&dir)?;
    for &n in &config.array_sizes {
        let geometry = beamsim::array::ArrayGeometry::square(n, config.channel.carrier_frequency_hz)?;
        let codebook = build_dft_codebook(&geometry);
        for index in 0..codebook.len() {
            let (p, q) = codebook.dft_indices(index);
            let samples = pattern_samples(codebook.beam(index), &geometry, step)?;
            let mut text = String::from("schema_version,azimuth_deg,elevation_deg,gain_db\n");
            for (az, el, db) in samples {
                text.push_str(&format!(
                    "{METRICS_SCHEMA_VERSION},{az:.2},{el:.2},{db:.4}\n"
                ));
            }
            let path = dir.join(format!("pattern_{n}x{n}_p{p}_q{q}.csv"));
            fs::write(&path, text)?;
        }
        println!("wrote {} beam patterns for {n}x{n} into {}", codebook.len(), dir.display());
    }
    Ok(())
}

fn cmd_report(metrics: &PathBuf) -> anyhow::Result<()> {
    let text = fs::read_to_string(metrics)
        .with_context(|| format!("reading {}", metrics.display()))?;
    // metrics_<N>.csv carries the array size in its name, not its rows
    let array_size = metrics
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.rsplit('_').next())
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let table = MetricTable::from_csv(&text, array_size)?;
    if table.rows.is_empty() {
        bail!("{} holds no rows", metrics.display());
    }
    let summary = summarize(&table);
    print!("{}", format_summary(&summary));
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BEAMSIM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match &cli.command {
        Command::BuildPrior { common } => cmd_build_prior(common),
        Command::Run { common } => cmd_run(common),
        Command::Patterns { common, step } => cmd_patterns(common, *step),
        Command::Report { metrics } => cmd_report(metrics),
    }
}
