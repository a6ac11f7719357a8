//! The roadside unit's long-term angular knowledge: per-cell top-K
//! departure/arrival angle lists built from the vehicle-free scene, and
//! their mapping to predetermined training beam pairs.

use serde::{Deserialize, Serialize};

use crate::array::{dft_beam_gain, ArrayGeometry, Codebook, Orientation};
use crate::channel::{trace_paths, ChannelConfig};
use crate::error::Error;
use crate::geo::Point3;
use crate::positive;
use crate::scene::Scene;
use crate::Result;

pub const PRIOR_SCHEMA_VERSION: u32 = 1;

/// Discretization of one lane's centerline into cells along the road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub cell_length_m: f64,
    /// Cells cover anchor_x ± half_extent_m.
    pub half_extent_m: f64,
    /// Longitudinal position of the roadside unit.
    pub anchor_x: f64,
    /// Which lane's centerline the cells discretize.
    pub lane: usize,
    /// Height of the reference rooftop probe used to build the prior.
    pub probe_height_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cell_length_m: 5.0,
            half_extent_m: 100.0,
            anchor_x: 0.0,
            lane: 0,
            probe_height_m: 1.5,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !positive(self.cell_length_m) {
            return Err(Error::InvalidConfig("cell_length_m must be positive".into()));
        }
        if !positive(self.half_extent_m) {
            return Err(Error::InvalidConfig("half_extent_m must be positive".into()));
        }
        if !positive(self.probe_height_m) {
            return Err(Error::InvalidConfig("probe_height_m must be positive".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        (2.0 * self.half_extent_m / self.cell_length_m).ceil() as usize
    }

    /// Longitudinal center of a cell.
    pub fn cell_center_x(&self, cell: usize) -> f64 {
        self.anchor_x - self.half_extent_m + (cell as f64 + 0.5) * self.cell_length_m
    }
}

/// Result of mapping a reported position onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellLocation {
    pub cell: usize,
    /// Set when the position fell outside the extent and was clamped to an
    /// end cell.
    pub clamped: bool,
}

/// Cell containing the longitudinal coordinate of a reported position.
/// Positions exactly on a cell edge belong to the lower-indexed cell.
pub fn locate_cell(reported_position: Point3, grid: &GridSpec) -> CellLocation {
    let n = grid.cell_count();
    let x = reported_position[0];
    let lo = grid.anchor_x - grid.half_extent_m;
    let hi = grid.anchor_x + grid.half_extent_m;
    let raw = ((x - lo) / grid.cell_length_m).ceil() as i64 - 1;
    CellLocation {
        cell: raw.clamp(0, n as i64 - 1) as usize,
        clamped: x < lo || x > hi,
    }
}

/// One prior angle with the empty-scene path gain magnitude that backs it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorAngle {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub gain_mag: f64,
}

/// Top-K departure angles at the roadside unit and arrival angles at the
/// reference rooftop probe for one cell, both in the respective array's
/// local frame and sorted by descending empty-scene path gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPrior {
    pub cell: usize,
    pub aod: Vec<PriorAngle>,
    pub aoa: Vec<PriorAngle>,
}

/// Array geometry and mounting for the two link ends (tx = roadside unit,
/// rx = vehicle rooftop).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub tx_geometry: ArrayGeometry,
    pub rx_geometry: ArrayGeometry,
    pub tx_orientation: Orientation,
    pub rx_orientation: Orientation,
}

/// Angles within this max-norm distance count as duplicates in a prior list.
const ANGLE_DEDUP_DEG: f64 = 0.5;

fn push_deduped(list: &mut Vec<PriorAngle>, angle: PriorAngle, k: usize) {
    if list.len() >= k {
        return;
    }
    let dup = list.iter().any(|a| {
        (a.azimuth_deg - angle.azimuth_deg).abs() < ANGLE_DEDUP_DEG
            && (a.elevation_deg - angle.elevation_deg).abs() < ANGLE_DEDUP_DEG
    });
    if !dup {
        list.push(angle);
    }
}

/// Builds the per-cell prior by tracing the vehicle-free scene between the
/// roadside unit and a rooftop probe at each cell center. Cells with zero
/// paths are recorded empty (a warning is logged).
pub fn build_prior(
    empty_scene: &Scene,
    grid: &GridSpec,
    link: &LinkGeometry,
    channel: &ChannelConfig,
    k: usize,
) -> Result<Vec<CellPrior>> {
    grid.validate()?;
    if !empty_scene.vehicles.is_empty() {
        return Err(Error::InvalidScene(
            "prior must be built from a vehicle-free scene".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("prior K must be >= 1".into()));
    }
    let lane = empty_scene
        .lanes
        .get(grid.lane)
        .ok_or_else(|| Error::InvalidConfig(format!("grid lane {} not in scene", grid.lane)))?;
    let tx = empty_scene.infrastructure_position;
    let mut cells = Vec::with_capacity(grid.cell_count());
    for cell in 0..grid.cell_count() {
        let probe = [grid.cell_center_x(cell), lane.center_y, grid.probe_height_m];
        let paths = trace_paths(empty_scene, tx, probe, 1, channel)?;
        let mut aod = Vec::new();
        let mut aoa = Vec::new();
        for path in paths.paths() {
            let gain_mag = path.gain.norm();
            let (tx_az, tx_el) = link.tx_orientation.local_angles_deg(
                crate::geo::direction_from_angles(path.aod_deg.0, path.aod_deg.1),
            );
            let (rx_az, rx_el) = link.rx_orientation.local_angles_deg(
                crate::geo::direction_from_angles(path.aoa_deg.0, path.aoa_deg.1),
            );
            push_deduped(
                &mut aod,
                PriorAngle { azimuth_deg: tx_az, elevation_deg: tx_el, gain_mag },
                k,
            );
            push_deduped(
                &mut aoa,
                PriorAngle { azimuth_deg: rx_az, elevation_deg: rx_el, gain_mag },
                k,
            );
        }
        if aod.is_empty() {
            log::warn!("cell {cell}: no paths in the empty scene; prior left empty");
        }
        cells.push(CellPrior { cell, aod, aoa });
    }
    Ok(cells)
}

/// Predetermined training beam pairs for one cell, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePairs {
    pub cell: usize,
    /// (tx beam index, rx beam index), deduplicated.
    pub pairs: Vec<(usize, usize)>,
}

/// Knobs of the angle-to-pair mapping; the averages in the training-count
/// CDF are calibrated through these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairRule {
    /// Rank depth of the Cartesian block over the two angle lists.
    pub top_j: usize,
    /// Beams kept per angle (1 = strictly the nearest beam; 2 also covers
    /// the runner-up, guarding against within-cell position spread).
    pub beams_per_angle: usize,
}

impl Default for PairRule {
    fn default() -> Self {
        Self { top_j: 3, beams_per_angle: 2 }
    }
}

impl PairRule {
    pub fn validate(&self) -> Result<()> {
        if self.top_j == 0 || self.beams_per_angle == 0 {
            return Err(Error::InvalidConfig(
                "pair rule top_j and beams_per_angle must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Best `count` beams for an angle among the region-of-interest subset
/// (max gain at that angle; ties pick the lowest beam index).
fn best_beams(
    codebook: &Codebook,
    geometry: &ArrayGeometry,
    roi: &[usize],
    angle: &PriorAngle,
    count: usize,
) -> Vec<usize> {
    let mut gains: Vec<(usize, f64)> = roi
        .iter()
        .map(|&i| {
            let (p, q) = codebook.dft_indices(i);
            (i, dft_beam_gain(geometry, p, q, angle.azimuth_deg, angle.elevation_deg))
        })
        .collect();
    gains.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    gains.into_iter().take(count).map(|(i, _)| i).collect()
}

/// Maps a cell prior to training beam pairs: rank-matched angle entries are
/// zipped, the top-`top_j` of each list form a Cartesian block, each angle
/// contributing its `beams_per_angle` best beams; the union is deduplicated
/// and ordered by descending combined prior gain. Beams are chosen within
/// the region-of-interest subsets so the pairs stay inside the exhaustive
/// search space.
#[allow(clippy::too_many_arguments)]
pub fn candidate_pairs_for_cell(
    prior: &CellPrior,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    tx_geometry: &ArrayGeometry,
    rx_geometry: &ArrayGeometry,
    tx_roi: &[usize],
    rx_roi: &[usize],
    rule: &PairRule,
) -> Result<CandidatePairs> {
    rule.validate()?;
    if prior.aod.is_empty() || prior.aoa.is_empty() {
        return Err(Error::EmptyPrior(prior.cell));
    }
    if tx_roi.is_empty() || rx_roi.is_empty() {
        return Err(Error::EmptySubset);
    }
    let tx_beams: Vec<Vec<usize>> = prior
        .aod
        .iter()
        .map(|a| best_beams(tx_codebook, tx_geometry, tx_roi, a, rule.beams_per_angle))
        .collect();
    let rx_beams: Vec<Vec<usize>> = prior
        .aoa
        .iter()
        .map(|a| best_beams(rx_codebook, rx_geometry, rx_roi, a, rule.beams_per_angle))
        .collect();

    // pair -> best combined prior gain backing it
    let mut scored: Vec<((usize, usize), f64)> = Vec::new();
    let add_block = |scored: &mut Vec<((usize, usize), f64)>, i: usize, j: usize| {
        let score = prior.aod[i].gain_mag * prior.aoa[j].gain_mag;
        for &tb in &tx_beams[i] {
            for &rb in &rx_beams[j] {
                match scored.iter_mut().find(|(p, _)| *p == (tb, rb)) {
                    Some((_, s)) => *s = s.max(score),
                    None => scored.push(((tb, rb), score)),
                }
            }
        }
    };
    for i in 0..tx_beams.len().min(rx_beams.len()) {
        add_block(&mut scored, i, i);
    }
    for i in 0..tx_beams.len().min(rule.top_j) {
        for j in 0..rx_beams.len().min(rule.top_j) {
            add_block(&mut scored, i, j);
        }
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(CandidatePairs {
        cell: prior.cell,
        pairs: scored.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Serialized prior knowledge for one array size: cells, angles and the
/// derived training beam pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorDatabase {
    pub schema_version: u32,
    pub array_size: usize,
    pub k: usize,
    pub grid: GridSpec,
    pub cells: Vec<CellPrior>,
    pub candidates: Vec<CandidatePairs>,
}

impl PriorDatabase {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::PriorDatabase(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let db: PriorDatabase =
            serde_json::from_str(text).map_err(|e| Error::PriorDatabase(e.to_string()))?;
        if db.schema_version != PRIOR_SCHEMA_VERSION {
            return Err(Error::PriorDatabase(format!(
                "unsupported schema version {} (expected {PRIOR_SCHEMA_VERSION})",
                db.schema_version
            )));
        }
        Ok(db)
    }
}
