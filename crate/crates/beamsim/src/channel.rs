//! Deterministic geometric channel: line of sight plus first-order
//! image-method reflections (ground and vertical facades) with box
//! occlusion.
//!
//! Path gains follow free-space loss at the carrier wavelength times a
//! flat per-bounce reflection loss; the phase of each path is
//! −2π·length/λ. Delays only enter through that phase (narrowband model).

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{self, ArrayGeometry, ComplexVec, Orientation};
use crate::error::Error;
use crate::geo::{self, Point3};
use crate::scene::{Cuboid, Scene};
use crate::Result;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Occlusion counts only when a segment passes through a box for more than
/// this parameter fraction; endpoint grazes (e.g. a rooftop antenna on its
/// own vehicle) do not block.
const OCCLUSION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Los,
    Ground,
    Facade,
}

/// One propagation path between the link ends, angles in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Departure (azimuth, elevation) at the transmitter, degrees.
    pub aod_deg: (f64, f64),
    /// Arrival (azimuth, elevation) at the receiver, degrees; the direction
    /// the receiver looks toward to see the incoming wave.
    pub aoa_deg: (f64, f64),
    pub gain: Complex64,
    pub delay_s: f64,
    pub kind: PathKind,
    /// Specular reflection point for bounce paths.
    pub bounce_point: Option<Point3>,
}

/// Paths sorted by descending gain magnitude; empty under full blockage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    /// Builds a set from arbitrary paths, restoring the descending-gain
    /// sort order.
    pub fn from_paths(mut paths: Vec<Path>) -> Self {
        paths.sort_by(|a, b| {
            b.gain
                .norm()
                .partial_cmp(&a.gain.norm())
                .unwrap()
                .then(a.delay_s.partial_cmp(&b.delay_s).unwrap())
        });
        Self { paths }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Structured text listing for debugging.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for p in &self.paths {
            let _ = writeln!(
                out,
                "{:?}: aod ({:.2}, {:.2}) aoa ({:.2}, {:.2}) gain {:.2} dB delay {:.3} ns",
                p.kind,
                p.aod_deg.0,
                p.aod_deg.1,
                p.aoa_deg.0,
                p.aoa_deg.1,
                20.0 * p.gain.norm().log10(),
                p.delay_s * 1e9
            );
        }
        out
    }
}

/// Propagation model knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub carrier_frequency_hz: f64,
    pub ground_loss_db: f64,
    pub facade_loss_db: f64,
    /// Vehicles always occlude; when set they also act as facade reflectors.
    pub reflect_vehicles: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 60e9,
            ground_loss_db: 3.0,
            facade_loss_db: 6.0,
            reflect_vehicles: false,
        }
    }
}

impl ChannelConfig {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }
}

fn blocked(obstacles: &[&Cuboid], skip: Option<usize>, a: Point3, b: Point3) -> bool {
    obstacles.iter().enumerate().any(|(i, c)| {
        if skip == Some(i) {
            return false;
        }
        match c.segment_interval(a, b) {
            Some((t0, t1)) => {
                t1 - t0 > OCCLUSION_EPS && t1 > OCCLUSION_EPS && t0 < 1.0 - OCCLUSION_EPS
            }
            None => false,
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn free_space_path(
    tx: Point3,
    first_leg_target: Point3,
    rx: Point3,
    last_leg_source: Point3,
    length: f64,
    loss_db: f64,
    kind: PathKind,
    bounce: Option<Point3>,
    wavelength: f64,
) -> Path {
    let amp = wavelength / (4.0 * std::f64::consts::PI * length) * 10f64.powf(-loss_db / 20.0);
    let phase = -2.0 * std::f64::consts::PI * length / wavelength;
    Path {
        aod_deg: geo::angles_from_direction(geo::sub(first_leg_target, tx)),
        aoa_deg: geo::angles_from_direction(geo::sub(last_leg_source, rx)),
        gain: Complex64::from_polar(amp, phase),
        delay_s: length / SPEED_OF_LIGHT,
        kind,
        bounce_point: bounce,
    }
}

/// Traces LOS plus (for `max_order` = 1) single ground and facade bounces
/// between `tx` and `rx`. Full blockage yields an empty set, not an error.
pub fn trace_paths(
    scene: &Scene,
    tx: Point3,
    rx: Point3,
    max_order: u32,
    config: &ChannelConfig,
) -> Result<PathSet> {
    if max_order > 1 {
        return Err(Error::UnsupportedOrder(max_order));
    }
    if tx == rx {
        return Err(Error::InvalidScene(
            "transmitter and receiver coincide".into(),
        ));
    }
    let obstacles: Vec<&Cuboid> = scene
        .buildings
        .iter()
        .chain(scene.vehicles.iter().map(|v| &v.body))
        .collect();
    for (name, p) in [("tx", tx), ("rx", rx)] {
        if obstacles.iter().any(|c| c.contains_interior(p, 1e-9)) {
            return Err(Error::InvalidScene(format!("{name} lies inside a box")));
        }
    }
    let wavelength = config.wavelength_m();
    let mut paths = Vec::new();

    if !blocked(&obstacles, None, tx, rx) {
        let length = geo::distance(tx, rx);
        paths.push(free_space_path(
            tx,
            rx,
            rx,
            tx,
            length,
            0.0,
            PathKind::Los,
            None,
            wavelength,
        ));
    }

    if max_order >= 1 {
        if tx[2] > 0.0 && rx[2] > 0.0 {
            // ground bounce via the image of tx across z = 0
            let image = [tx[0], tx[1], -tx[2]];
            let t = tx[2] / (tx[2] + rx[2]);
            let bounce = geo::lerp(image, rx, t);
            if !blocked(&obstacles, None, tx, bounce) && !blocked(&obstacles, None, bounce, rx) {
                let length = geo::distance(tx, bounce) + geo::distance(bounce, rx);
                paths.push(free_space_path(
                    tx,
                    bounce,
                    rx,
                    bounce,
                    length,
                    config.ground_loss_db,
                    PathKind::Ground,
                    Some(bounce),
                    wavelength,
                ));
            }
        }

        let n_buildings = scene.buildings.len();
        let reflector_count = if config.reflect_vehicles {
            obstacles.len()
        } else {
            n_buildings
        };
        for idx in 0..reflector_count {
            let cuboid = obstacles[idx];
            for path in facade_reflections(cuboid, idx, &obstacles, tx, rx, config, wavelength) {
                paths.push(path);
            }
        }
    }

    Ok(PathSet::from_paths(paths))
}

/// Image-method reflections off the four vertical faces of a box. A face
/// only reflects when both endpoints sit strictly on its outer side and
/// the specular point lands within the face rectangle.
fn facade_reflections(
    cuboid: &Cuboid,
    cuboid_idx: usize,
    obstacles: &[&Cuboid],
    tx: Point3,
    rx: Point3,
    config: &ChannelConfig,
    wavelength: f64,
) -> Vec<Path> {
    let yaw = cuboid.yaw_deg.to_radians();
    let axes = [
        geo::rotate_z([1.0, 0.0, 0.0], yaw),
        geo::rotate_z([0.0, 1.0, 0.0], yaw),
    ];
    let mut out = Vec::new();
    for (axis_i, &axis) in axes.iter().enumerate() {
        let half_normal = cuboid.dimensions[axis_i] / 2.0;
        // extent of the face along its in-plane horizontal direction
        let half_along = cuboid.dimensions[1 - axis_i] / 2.0;
        let along = axes[1 - axis_i];
        for sign in [1.0, -1.0] {
            let normal = geo::scale(axis, sign);
            let face_center = geo::add(cuboid.center, geo::scale(normal, half_normal));
            let s_tx = geo::dot(geo::sub(tx, face_center), normal);
            let s_rx = geo::dot(geo::sub(rx, face_center), normal);
            if s_tx <= 1e-9 || s_rx <= 1e-9 {
                continue;
            }
            let image = geo::sub(tx, geo::scale(normal, 2.0 * s_tx));
            let t = s_tx / (s_tx + s_rx);
            let bounce = geo::lerp(image, rx, t);
            let local = geo::sub(bounce, cuboid.center);
            if geo::dot(local, along).abs() > half_along {
                continue;
            }
            if (bounce[2] - cuboid.center[2]).abs() > cuboid.dimensions[2] / 2.0 {
                continue;
            }
            if blocked(obstacles, Some(cuboid_idx), tx, bounce)
                || blocked(obstacles, Some(cuboid_idx), bounce, rx)
            {
                continue;
            }
            let length = geo::distance(tx, bounce) + geo::distance(bounce, rx);
            out.push(free_space_path(
                tx,
                bounce,
                rx,
                bounce,
                length,
                config.facade_loss_db,
                PathKind::Facade,
                Some(bounce),
                wavelength,
            ));
        }
    }
    out
}

/// Narrowband MIMO channel H = Σ_k gain_k · a_rx(aoa_k) · a_tx(aod_k)ᴴ,
/// stored row-major with `n_rx` rows and `n_tx` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_rx: usize,
    n_tx: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zero(n_rx: usize, n_tx: usize) -> Self {
        Self {
            n_rx,
            n_tx,
            entries: vec![Complex64::ZERO; n_rx * n_tx],
        }
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n_tx + col]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    /// H·f for a transmit beam.
    pub fn apply(&self, tx_beam: &ComplexVec) -> Result<Vec<Complex64>> {
        if tx_beam.len() != self.n_tx {
            return Err(Error::DimensionMismatch {
                expected: self.n_tx,
                got: tx_beam.len(),
            });
        }
        let f = tx_beam.entries();
        let mut out = vec![Complex64::ZERO; self.n_rx];
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.entries[r * self.n_tx..(r + 1) * self.n_tx];
            *slot = row.iter().zip(f).map(|(h, x)| h * x).sum();
        }
        Ok(out)
    }

    /// Hᴴ, for swapping the roles of the two link ends.
    pub fn hermitian_transpose(&self) -> ChannelMatrix {
        let mut out = ChannelMatrix::zero(self.n_tx, self.n_rx);
        for r in 0..self.n_rx {
            for t in 0..self.n_tx {
                out.entries[t * self.n_rx + r] = self.entry(r, t).conj();
            }
        }
        out
    }

    /// The channel scaled by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> ChannelMatrix {
        ChannelMatrix {
            n_rx: self.n_rx,
            n_tx: self.n_tx,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }
}

/// Assembles H from a path set, rotating each path's global angles into
/// the local frame of the respective array.
pub fn assemble_channel(
    paths: &PathSet,
    tx_geometry: &ArrayGeometry,
    rx_geometry: &ArrayGeometry,
    tx_orientation: &Orientation,
    rx_orientation: &Orientation,
) -> ChannelMatrix {
    let n_tx = tx_geometry.total_elements();
    let n_rx = rx_geometry.total_elements();
    let mut h = ChannelMatrix::zero(n_rx, n_tx);
    for path in paths.paths() {
        let aod_dir = geo::direction_from_angles(path.aod_deg.0, path.aod_deg.1);
        let aoa_dir = geo::direction_from_angles(path.aoa_deg.0, path.aoa_deg.1);
        let (tx_az, tx_el) = tx_orientation.local_angles_deg(aod_dir);
        let (rx_az, rx_el) = rx_orientation.local_angles_deg(aoa_dir);
        let a_tx = array::steering_vector(tx_geometry, tx_az, tx_el)
            .expect("angles from atan2/asin are finite");
        let a_rx = array::steering_vector(rx_geometry, rx_az, rx_el)
            .expect("angles from atan2/asin are finite");
        for (r, ar) in a_rx.entries().iter().enumerate() {
            let row = &mut h.entries[r * n_tx..(r + 1) * n_tx];
            let g = path.gain * ar;
            for (slot, at) in row.iter_mut().zip(a_tx.entries()) {
                *slot += g * at.conj();
            }
        }
    }
    h
}

/// Receive power |rx_beamᴴ·H·tx_beam|²·N_tx²·N_rx² (element-count gain
/// convention at both ends).
pub fn receive_power(h: &ChannelMatrix, tx_beam: &ComplexVec, rx_beam: &ComplexVec) -> Result<f64> {
    if rx_beam.len() != h.n_rx() {
        return Err(Error::DimensionMismatch {
            expected: h.n_rx(),
            got: rx_beam.len(),
        });
    }
    let v = h.apply(tx_beam)?;
    let amp = array::dot_conj(rx_beam.entries(), &v);
    Ok(amp.norm_sqr() * (h.n_tx() * h.n_rx()) as f64)
}
