//! Config ingestion, the seeded Monte Carlo driver, metric aggregation and
//! output emission.
//!
//! Every snapshot derives its own seeds from (master_seed, snapshot index,
//! resample attempt), so results are reproducible and independent of the
//! worker count; rows are ordered by snapshot id before emission.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::align::{
    exhaustive_search_with_noise, power_loss_db, restricted_search_with_noise, MeasurementNoise,
};
use crate::array::{
    beams_covering_sector, build_dft_codebook, AngularSector, ArrayGeometry, Codebook,
    Orientation,
};
use crate::channel::{assemble_channel, trace_paths, ChannelConfig};
use crate::error::Error;
use crate::metrics::{
    cdf_to_csv, compute_cdf, format_summary, summarize, LinkFlag, MetricRow, MetricTable,
    SizeSummary,
};
use crate::prior::{
    build_prior, candidate_pairs_for_cell, locate_cell, CandidatePairs, GridSpec, LinkGeometry,
    PairRule, PriorDatabase, PRIOR_SCHEMA_VERSION,
};
use crate::positive;
use crate::scene::{
    antenna_position, canyon_template, sample_snapshot, select_communicating_vehicle, Scene,
    SceneLayout, TrafficConfig,
};
use crate::Result;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn default_master_seed() -> u64 {
    1
}
fn default_snapshot_count() -> usize {
    100
}
fn default_array_sizes() -> Vec<usize> {
    vec![8, 16]
}
fn default_gps_sigma() -> f64 {
    2.5
}
fn default_cv_window() -> f64 {
    100.0
}
fn default_prior_k() -> usize {
    25
}
fn default_output_dir() -> String {
    "out".into()
}
fn default_tx_sector() -> AngularSector {
    AngularSector {
        azimuth_min_deg: -88.0,
        azimuth_max_deg: 88.0,
        elevation_min_deg: -18.0,
        elevation_max_deg: 0.0,
    }
}
fn default_rx_sector() -> AngularSector {
    AngularSector {
        azimuth_min_deg: -88.0,
        azimuth_max_deg: 88.0,
        elevation_min_deg: -8.0,
        elevation_max_deg: 18.0,
    }
}
fn default_tx_orientation() -> Orientation {
    // roadside unit boresight across the road (toward −y)
    Orientation { yaw_deg: -90.0, tilt_deg: 0.0 }
}
fn default_rx_orientation() -> Orientation {
    // vehicle rooftop boresight toward the roadside unit's side (+y)
    Orientation { yaw_deg: 90.0, tilt_deg: 0.0 }
}

/// Full experiment description; unknown keys in a config file are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default = "default_snapshot_count")]
    pub snapshot_count: usize,
    #[serde(default = "default_array_sizes")]
    pub array_sizes: Vec<usize>,
    /// Gaussian position-report noise per horizontal axis, meters.
    #[serde(default = "default_gps_sigma")]
    pub gps_sigma_m: f64,
    /// The communicating vehicle is drawn within ±cv_window_m of the unit.
    #[serde(default = "default_cv_window")]
    pub cv_window_m: f64,
    /// Angles kept per cell and link end in the prior.
    #[serde(default = "default_prior_k")]
    pub prior_k: usize,
    /// Angle-to-pair mapping knobs.
    #[serde(default)]
    pub pair_rule: PairRule,
    /// Std of complex noise added to each training measurement; 0 disables.
    #[serde(default)]
    pub measurement_noise_std: f64,
    /// Worker threads for the snapshot loop; 0 picks the rayon default.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Directory with prebuilt prior_<N>.json files; when unset the prior
    /// is rebuilt in-process.
    #[serde(default)]
    pub prior_dir: Option<String>,
    #[serde(default)]
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub scene: SceneLayout,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default = "default_tx_sector")]
    pub tx_sector: AngularSector,
    #[serde(default = "default_rx_sector")]
    pub rx_sector: AngularSector,
    #[serde(default = "default_tx_orientation")]
    pub tx_orientation: Orientation,
    #[serde(default = "default_rx_orientation")]
    pub rx_orientation: Orientation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str(&format!("schema_version = {CONFIG_SCHEMA_VERSION}"))
            .expect("defaults are complete")
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// `"default"` loads the built-in configuration, anything else a file.
    pub fn load(source: &str) -> Result<Self> {
        if source == "default" {
            Ok(Self::default())
        } else {
            Self::from_path(Path::new(source))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::ConfigParse(format!(
                "unsupported config schema version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.snapshot_count == 0 {
            return Err(Error::InvalidConfig("snapshot_count must be >= 1".into()));
        }
        if self.array_sizes.is_empty() {
            return Err(Error::InvalidConfig("array_sizes must not be empty".into()));
        }
        if self.array_sizes.contains(&0) {
            return Err(Error::InvalidConfig("array sizes must be >= 1".into()));
        }
        if self.gps_sigma_m < 0.0 || !self.gps_sigma_m.is_finite() {
            return Err(Error::InvalidConfig("gps_sigma_m must be >= 0".into()));
        }
        if !positive(self.cv_window_m) {
            return Err(Error::InvalidConfig("cv_window_m must be positive".into()));
        }
        if self.cv_window_m > self.grid.half_extent_m {
            return Err(Error::InvalidConfig(
                "grid half_extent_m must cover the CV selection window".into(),
            ));
        }
        if self.prior_k == 0 {
            return Err(Error::InvalidConfig("prior_k must be >= 1".into()));
        }
        self.pair_rule.validate()?;
        if self.measurement_noise_std < 0.0 {
            return Err(Error::InvalidConfig(
                "measurement_noise_std must be >= 0".into(),
            ));
        }
        self.traffic.validate()?;
        self.grid.validate()?;
        self.tx_sector.validate()?;
        self.rx_sector.validate()?;
        Ok(())
    }

    fn array_geometry(&self, n: usize) -> Result<ArrayGeometry> {
        ArrayGeometry::square(n, self.channel.carrier_frequency_hz)
    }

    fn link_geometry(&self, n: usize) -> Result<LinkGeometry> {
        let geom = self.array_geometry(n)?;
        Ok(LinkGeometry {
            tx_geometry: geom,
            rx_geometry: geom,
            tx_orientation: self.tx_orientation,
            rx_orientation: self.rx_orientation,
        })
    }
}

const TRAFFIC_STREAM: u64 = 1;
const CV_STREAM: u64 = 2;
const GPS_STREAM: u64 = 3;
const NOISE_STREAM: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed derivation: hash-chains the master seed with stream parts.
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    let mut acc = splitmix64(master);
    for &part in stream {
        acc = splitmix64(acc ^ splitmix64(part));
    }
    acc
}

/// Everything fixed per array size across snapshots.
struct SizeContext {
    array_size: usize,
    geometry: ArrayGeometry,
    codebook: Codebook,
    tx_roi: Vec<usize>,
    rx_roi: Vec<usize>,
    template: Scene,
    candidates: Vec<CandidatePairs>,
}

/// Builds the prior database (cells and derived candidate pairs) for one
/// array size of a configuration.
pub fn build_prior_database(config: &ExperimentConfig, n: usize) -> Result<PriorDatabase> {
    config.validate()?;
    let link = config.link_geometry(n)?;
    let template = canyon_template(&config.scene, &config.traffic)?;
    let cells = build_prior(&template, &config.grid, &link, &config.channel, config.prior_k)?;
    let codebook = build_dft_codebook(&link.tx_geometry);
    let tx_roi = beams_covering_sector(&codebook, &link.tx_geometry, &config.tx_sector)?;
    let rx_roi = beams_covering_sector(&codebook, &link.rx_geometry, &config.rx_sector)?;
    let candidates = cells
        .iter()
        .map(|prior| {
            candidate_pairs_for_cell(
                prior,
                &codebook,
                &codebook,
                &link.tx_geometry,
                &link.rx_geometry,
                &tx_roi,
                &rx_roi,
                &config.pair_rule,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriorDatabase {
        schema_version: PRIOR_SCHEMA_VERSION,
        array_size: n,
        k: config.prior_k,
        grid: config.grid,
        cells,
        candidates,
    })
}

fn size_context(config: &ExperimentConfig, n: usize) -> Result<SizeContext> {
    let link = config.link_geometry(n)?;
    let template = canyon_template(&config.scene, &config.traffic)?;
    let codebook = build_dft_codebook(&link.tx_geometry);
    let tx_roi = beams_covering_sector(&codebook, &link.tx_geometry, &config.tx_sector)?;
    let rx_roi = beams_covering_sector(&codebook, &link.rx_geometry, &config.rx_sector)?;

    // Cells come from a prebuilt database when one is configured; the
    // beam-pair mapping is always recomputed against the current ROI.
    let cells = match &config.prior_dir {
        Some(dir) => {
            let path = Path::new(dir).join(format!("prior_{n}.json"));
            let text = fs::read_to_string(&path).map_err(|e| {
                Error::PriorDatabase(format!("cannot read {}: {e}", path.display()))
            })?;
            let db = PriorDatabase::from_json(&text)?;
            if db.array_size != n {
                return Err(Error::PriorDatabase(format!(
                    "{} holds array size {}, expected {n}",
                    path.display(),
                    db.array_size
                )));
            }
            if db.grid != config.grid || db.k != config.prior_k {
                return Err(Error::PriorDatabase(format!(
                    "{} was built for a different grid or K",
                    path.display()
                )));
            }
            db.cells
        }
        None => build_prior(&template, &config.grid, &link, &config.channel, config.prior_k)?,
    };
    let candidates = cells
        .iter()
        .map(|prior| {
            candidate_pairs_for_cell(
                prior,
                &codebook,
                &codebook,
                &link.tx_geometry,
                &link.rx_geometry,
                &tx_roi,
                &rx_roi,
                &config.pair_rule,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SizeContext {
        array_size: n,
        geometry: link.tx_geometry,
        codebook,
        tx_roi,
        rx_roi,
        template,
        candidates,
    })
}

fn power_db(power: f64) -> f64 {
    if power > 0.0 {
        10.0 * power.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Snapshots that produce no eligible vehicle are redrawn with a fresh
/// sub-seed up to this many times before the run is declared infeasible.
const MAX_RESAMPLE_ATTEMPTS: u64 = 10_000;

fn run_snapshot(
    config: &ExperimentConfig,
    ctx: &SizeContext,
    snapshot: usize,
) -> Result<(MetricRow, usize)> {
    let idx = snapshot as u64;
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        let traffic_seed = derive_seed(config.master_seed, &[TRAFFIC_STREAM, idx, attempt]);
        let scene = sample_snapshot(&ctx.template, &config.traffic, traffic_seed)?;
        let cv_seed = derive_seed(config.master_seed, &[CV_STREAM, idx, attempt]);
        let cv = match select_communicating_vehicle(
            &scene,
            config.grid.lane,
            config.cv_window_m,
            cv_seed,
        ) {
            Ok(i) => i,
            Err(Error::NoEligibleVehicle) => continue,
            Err(e) => return Err(e),
        };
        log::trace!("snapshot {snapshot} attempt {attempt}:\n{}", scene.dump_text());
        let antenna = antenna_position(&scene.vehicles[cv].body);

        let mut reported = antenna;
        if config.gps_sigma_m > 0.0 {
            let gps_seed = derive_seed(config.master_seed, &[GPS_STREAM, idx, attempt]);
            let mut rng = ChaCha8Rng::seed_from_u64(gps_seed);
            let normal = Normal::new(0.0, config.gps_sigma_m).expect("positive sigma");
            reported[0] += normal.sample(&mut rng);
            reported[1] += normal.sample(&mut rng);
        }
        let location = locate_cell(reported, &config.grid);
        if location.clamped {
            log::debug!("snapshot {snapshot}: reported position clamped to cell {}", location.cell);
        }
        let candidates = &ctx.candidates[location.cell];

        let paths = trace_paths(
            &scene,
            scene.infrastructure_position,
            antenna,
            1,
            &config.channel,
        )?;
        log::debug!("snapshot {snapshot} paths:\n{}", paths.dump_text());
        let h = assemble_channel(
            &paths,
            &ctx.geometry,
            &ctx.geometry,
            &config.tx_orientation,
            &config.rx_orientation,
        );

        let mut noise_storage;
        let mut noise = None;
        if config.measurement_noise_std > 0.0 {
            let noise_seed = derive_seed(
                config.master_seed,
                &[NOISE_STREAM, idx, attempt, ctx.array_size as u64],
            );
            noise_storage = MeasurementNoise {
                amplitude_std: config.measurement_noise_std,
                rng: ChaCha8Rng::seed_from_u64(noise_seed),
            };
            noise = Some(&mut noise_storage);
        }
        let exhaustive = exhaustive_search_with_noise(
            &h,
            &ctx.codebook,
            &ctx.codebook,
            &ctx.tx_roi,
            &ctx.rx_roi,
            noise.as_deref_mut(),
        )?;
        let restricted = restricted_search_with_noise(
            &h,
            &ctx.codebook,
            &ctx.codebook,
            candidates,
            noise,
        )?;
        let loss = power_loss_db(&exhaustive, &restricted);
        let flag = if loss.no_link {
            LinkFlag::NoLink
        } else if loss.db.is_infinite() {
            LinkFlag::BlockageMiss
        } else {
            LinkFlag::Ok
        };
        let row = MetricRow {
            snapshot,
            cv_cell: location.cell,
            trained_pairs_exhaustive: exhaustive.trained_pairs,
            trained_pairs_restricted: restricted.trained_pairs,
            loss_db: loss.db,
            best_power_exhaustive_db: power_db(exhaustive.best_power),
            best_power_restricted_db: power_db(restricted.best_power),
            flag,
        };
        return Ok((row, attempt as usize));
    }
    Err(Error::InvalidConfig(format!(
        "snapshot {snapshot}: no eligible communicating vehicle after {MAX_RESAMPLE_ATTEMPTS} resamples"
    )))
}

/// Region-of-interest bookkeeping reported in the summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiInfo {
    pub array_size: usize,
    pub tx_beams: usize,
    pub rx_beams: usize,
}

impl RoiInfo {
    pub fn exhaustive_pairs(&self) -> usize {
        self.tx_beams * self.rx_beams
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub tables: Vec<MetricTable>,
    pub summaries: Vec<SizeSummary>,
    pub roi: Vec<RoiInfo>,
}

/// Runs the full Monte Carlo experiment for every configured array size.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut tables = Vec::new();
    let mut summaries = Vec::new();
    let mut roi = Vec::new();
    for &n in &config.array_sizes {
        let ctx = size_context(config, n)?;
        log::info!(
            "array {n}x{n}: {} tx × {} rx ROI beams, {} cells",
            ctx.tx_roi.len(),
            ctx.rx_roi.len(),
            ctx.candidates.len()
        );
        let results: Vec<(MetricRow, usize)> = pool.install(|| {
            (0..config.snapshot_count)
                .into_par_iter()
                .map(|snapshot| run_snapshot(config, &ctx, snapshot))
                .collect::<Result<Vec<_>>>()
        })?;
        let resample_events = results.iter().map(|(_, attempts)| attempts).sum();
        let mut rows: Vec<MetricRow> = results.into_iter().map(|(row, _)| row).collect();
        rows.sort_by_key(|r| r.snapshot);
        let table = MetricTable {
            array_size: n,
            rows,
            resample_events,
        };
        summaries.push(summarize(&table));
        roi.push(RoiInfo {
            array_size: n,
            tx_beams: ctx.tx_roi.len(),
            rx_beams: ctx.rx_roi.len(),
        });
        tables.push(table);
    }
    Ok(ExperimentOutcome { tables, summaries, roi })
}

fn sector_text(s: &AngularSector) -> String {
    format!(
        "az [{:.1}, {:.1}] el [{:.1}, {:.1}]",
        s.azimuth_min_deg, s.azimuth_max_deg, s.elevation_min_deg, s.elevation_max_deg
    )
}

/// Formats summary.txt: configuration echo, ROI counts, per-size stats.
pub fn format_experiment_summary(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "beamsim experiment summary");
    let _ = writeln!(out, "master_seed = {}", config.master_seed);
    let _ = writeln!(out, "snapshot_count = {}", config.snapshot_count);
    let _ = writeln!(out, "tx sector: {}", sector_text(&config.tx_sector));
    let _ = writeln!(out, "rx sector: {}", sector_text(&config.rx_sector));
    for info in &outcome.roi {
        let _ = writeln!(
            out,
            "array {0}x{0} region of interest: {1} tx beams × {2} rx beams = {3} exhaustive pairs",
            info.array_size,
            info.tx_beams,
            info.rx_beams,
            info.exhaustive_pairs()
        );
    }
    out.push('\n');
    for summary in &outcome.summaries {
        out.push_str(&format_summary(summary));
    }
    out
}

/// Writes metrics_<N>.csv, cdf_training_count_<N>.csv, cdf_loss_db_<N>.csv
/// and summary.txt; returns the created paths.
pub fn write_outputs(
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &outcome.tables {
        let n = table.array_size;
        let metrics_path = dir.join(format!("metrics_{n}.csv"));
        fs::write(&metrics_path, table.to_csv())?;
        written.push(metrics_path);

        let counts: Vec<f64> = table
            .rows
            .iter()
            .map(|r| r.trained_pairs_restricted as f64)
            .collect();
        let count_cdf = compute_cdf(&counts)?;
        let count_path = dir.join(format!("cdf_training_count_{n}.csv"));
        fs::write(&count_path, cdf_to_csv(&count_cdf, "trained_pairs"))?;
        written.push(count_path);

        let losses: Vec<f64> = table.rows.iter().map(|r| r.loss_db).collect();
        let loss_cdf = compute_cdf(&losses)?;
        let loss_path = dir.join(format!("cdf_loss_db_{n}.csv"));
        fs::write(&loss_path, cdf_to_csv(&loss_cdf, "loss_db"))?;
        written.push(loss_path);
    }
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, format_experiment_summary(config, outcome))?;
    written.push(summary_path);
    Ok(written)
}
