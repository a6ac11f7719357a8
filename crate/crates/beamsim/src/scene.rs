//! Static road/building geometry and seeded traffic snapshots.
//!
//! The default template is a street canyon: a straight road along x with
//! two lanes per direction, building rows on both sides and a roadside
//! unit mounted above the road edge. Snapshots place vehicles per lane
//! with i.i.d. Erlang bumper-to-bumper gaps, each vehicle independently a
//! truck with the configured probability; everything is a pure function
//! of (template, config, seed).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::Error;
use crate::geo::{self, Point3};
use crate::positive;
use crate::Result;

/// Axis-aligned box rotated by `yaw_deg` about the vertical axis through
/// its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub center: Point3,
    /// (length, width, height) in meters.
    pub dimensions: [f64; 3],
    pub yaw_deg: f64,
}

impl Cuboid {
    pub fn new(center: Point3, dimensions: [f64; 3], yaw_deg: f64) -> Result<Self> {
        if !dimensions.iter().all(|&d| crate::positive(d)) {
            return Err(Error::InvalidScene(format!(
                "box dimensions must be positive, got {dimensions:?}"
            )));
        }
        Ok(Self {
            center,
            dimensions,
            yaw_deg,
        })
    }

    fn to_local(self, p: Point3) -> Point3 {
        geo::rotate_z(geo::sub(p, self.center), -self.yaw_deg.to_radians())
    }

    /// True when the point lies strictly inside (beyond `margin` from every
    /// face); points on the surface are outside.
    pub fn contains_interior(&self, p: Point3, margin: f64) -> bool {
        let l = self.to_local(p);
        (0..3).all(|i| l[i].abs() < self.dimensions[i] / 2.0 - margin)
    }

    /// Parameter interval of the segment a→b (clamped to [0, 1]) inside the
    /// box, or None when they do not meet.
    pub fn segment_interval(&self, a: Point3, b: Point3) -> Option<(f64, f64)> {
        let la = self.to_local(a);
        let lb = self.to_local(b);
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for i in 0..3 {
            let half = self.dimensions[i] / 2.0;
            let d = lb[i] - la[i];
            if d.abs() < 1e-15 {
                if la[i].abs() > half {
                    return None;
                }
                continue;
            }
            let mut lo = (-half - la[i]) / d;
            let mut hi = (half - la[i]) / d;
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Car,
    Truck,
}

impl VehicleKind {
    /// (length, width, height) in meters.
    pub fn dimensions(&self) -> [f64; 3] {
        match self {
            VehicleKind::Car => [5.0, 1.8, 1.5],
            VehicleKind::Truck => [12.0, 2.5, 3.8],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub body: Cuboid,
    pub kind: VehicleKind,
    pub lane: usize,
}

/// Straight lane parallel to the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub center_y: f64,
    pub width_m: f64,
    /// Travel heading: 0° = +x, 180° = −x.
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Longitudinal road span (x_min, x_max).
    pub road_extent: (f64, f64),
    pub lanes: Vec<Lane>,
    pub buildings: Vec<Cuboid>,
    pub infrastructure_position: Point3,
    pub vehicles: Vec<Vehicle>,
}

impl Scene {
    /// The same scene with all vehicles removed (the long-term environment).
    pub fn without_vehicles(&self) -> Scene {
        let mut s = self.clone();
        s.vehicles.clear();
        s
    }

    /// Human-readable snapshot listing for debugging.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scene: road x in [{:.1}, {:.1}], {} lanes, {} buildings, {} vehicles",
            self.road_extent.0,
            self.road_extent.1,
            self.lanes.len(),
            self.buildings.len(),
            self.vehicles.len()
        );
        let p = self.infrastructure_position;
        let _ = writeln!(out, "infrastructure: ({:.2}, {:.2}, {:.2})", p[0], p[1], p[2]);
        for (i, lane) in self.lanes.iter().enumerate() {
            let _ = writeln!(
                out,
                "lane {i}: y = {:.2}, width {:.2}, heading {:.0}",
                lane.center_y, lane.width_m, lane.heading_deg
            );
        }
        for (i, b) in self.buildings.iter().enumerate() {
            let _ = writeln!(
                out,
                "building {i}: center ({:.1}, {:.1}, {:.1}) dims {:?}",
                b.center[0], b.center[1], b.center[2], b.dimensions
            );
        }
        for v in &self.vehicles {
            let _ = writeln!(
                out,
                "vehicle lane={} kind={:?} x={:.2} y={:.2}",
                v.lane, v.kind, v.body.center[0], v.body.center[1]
            );
        }
        out
    }
}

/// Traffic sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    /// Erlang shape of the bumper-to-bumper gap distribution.
    pub erlang_shape: u32,
    /// Mean bumper-to-bumper gap in meters.
    pub mean_gap_m: f64,
    /// Probability that a placed vehicle is a truck.
    pub truck_fraction: f64,
    pub lane_count: usize,
    /// Longitudinal road length in meters.
    pub road_extent_m: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            erlang_shape: 3,
            mean_gap_m: 20.0,
            truck_fraction: 0.4,
            lane_count: 4,
            road_extent_m: 400.0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<()> {
        if self.erlang_shape == 0 {
            return Err(Error::InvalidConfig("erlang_shape must be >= 1".into()));
        }
        if !positive(self.mean_gap_m) {
            return Err(Error::InvalidConfig("mean_gap_m must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.truck_fraction) {
            return Err(Error::InvalidConfig(
                "truck_fraction must lie in [0, 1]".into(),
            ));
        }
        if self.lane_count == 0 {
            return Err(Error::InvalidConfig("lane_count must be >= 1".into()));
        }
        if !positive(self.road_extent_m) {
            return Err(Error::InvalidConfig("road_extent_m must be positive".into()));
        }
        let longest = if self.truck_fraction > 0.0 {
            VehicleKind::Truck.dimensions()[0]
        } else {
            VehicleKind::Car.dimensions()[0]
        };
        if self.mean_gap_m < longest {
            return Err(Error::InfeasibleTraffic(format!(
                "mean gap {:.1} m is smaller than the longest vehicle ({longest:.1} m)",
                self.mean_gap_m
            )));
        }
        Ok(())
    }
}

/// Static street-canyon layout parameters for the default template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneLayout {
    pub lane_width_m: f64,
    /// Distance from road center to each building facade.
    pub building_setback_m: f64,
    pub building_height_m: f64,
    pub building_depth_m: f64,
    /// Lateral offset of the roadside unit beyond the road edge.
    pub infra_lateral_offset_m: f64,
    pub infra_height_m: f64,
}

impl Default for SceneLayout {
    fn default() -> Self {
        Self {
            lane_width_m: 3.5,
            building_setback_m: 15.0,
            building_height_m: 10.0,
            building_depth_m: 10.0,
            infra_lateral_offset_m: 2.0,
            infra_height_m: 5.0,
        }
    }
}

/// Builds the vehicle-free street-canyon template. Lane 0 is the lane
/// nearest the roadside unit; lanes on the unit's side head +x, the
/// opposite lanes −x.
pub fn canyon_template(layout: &SceneLayout, traffic: &TrafficConfig) -> Result<Scene> {
    traffic.validate()?;
    let lengths_ok = positive(layout.lane_width_m)
        && positive(layout.building_setback_m)
        && positive(layout.building_height_m)
        && positive(layout.building_depth_m)
        && positive(layout.infra_height_m);
    if !lengths_ok {
        return Err(Error::InvalidScene(
            "layout lengths must be positive".into(),
        ));
    }
    let max_vehicle_height = if traffic.truck_fraction > 0.0 {
        VehicleKind::Truck.dimensions()[2]
    } else {
        VehicleKind::Car.dimensions()[2]
    };
    if layout.infra_height_m <= max_vehicle_height {
        return Err(Error::InvalidScene(format!(
            "infrastructure height {:.1} m must exceed the tallest vehicle ({max_vehicle_height:.1} m)",
            layout.infra_height_m
        )));
    }
    let half_extent = traffic.road_extent_m / 2.0;
    let road_half_width = traffic.lane_count as f64 / 2.0 * layout.lane_width_m;
    if layout.building_setback_m <= road_half_width {
        return Err(Error::InvalidScene(
            "building facades must sit beyond the road edge".into(),
        ));
    }
    let lanes = (0..traffic.lane_count)
        .map(|i| {
            let center_y =
                (traffic.lane_count as f64 / 2.0 - i as f64 - 0.5) * layout.lane_width_m;
            Lane {
                center_y,
                width_m: layout.lane_width_m,
                heading_deg: if center_y >= 0.0 { 0.0 } else { 180.0 },
            }
        })
        .collect();
    let facade_center = layout.building_setback_m + layout.building_depth_m / 2.0;
    let building = |y: f64| {
        Cuboid::new(
            [0.0, y, layout.building_height_m / 2.0],
            [
                traffic.road_extent_m,
                layout.building_depth_m,
                layout.building_height_m,
            ],
            0.0,
        )
    };
    Ok(Scene {
        road_extent: (-half_extent, half_extent),
        lanes,
        buildings: vec![building(facade_center)?, building(-facade_center)?],
        infrastructure_position: [
            0.0,
            road_half_width + layout.infra_lateral_offset_m,
            layout.infra_height_m,
        ],
        vehicles: Vec::new(),
    })
}

/// Places vehicles on every template lane with Erlang(shape, mean/shape)
/// bumper-to-bumper gaps; deterministic in the seed.
pub fn sample_snapshot(template: &Scene, config: &TrafficConfig, seed: u64) -> Result<Scene> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap_dist = Gamma::new(
        config.erlang_shape as f64,
        config.mean_gap_m / config.erlang_shape as f64,
    )
    .map_err(|e| Error::InvalidConfig(format!("gap distribution: {e}")))?;
    let mut scene = template.clone();
    scene.vehicles.clear();
    for (lane_idx, lane) in template.lanes.iter().enumerate() {
        let mut cursor = scene.road_extent.0;
        loop {
            let gap = gap_dist.sample(&mut rng);
            let kind = if rng.random_bool(config.truck_fraction) {
                VehicleKind::Truck
            } else {
                VehicleKind::Car
            };
            let dims = kind.dimensions();
            let rear = cursor + gap;
            if rear + dims[0] > scene.road_extent.1 {
                break;
            }
            let body = Cuboid::new(
                [rear + dims[0] / 2.0, lane.center_y, dims[2] / 2.0],
                dims,
                lane.heading_deg,
            )?;
            scene.vehicles.push(Vehicle {
                body,
                kind,
                lane: lane_idx,
            });
            cursor = rear + dims[0];
        }
    }
    Ok(scene)
}

/// Uniformly selects a car (never a truck) on the given lane within
/// ±`window_m` longitudinally of the roadside unit. Returns the vehicle
/// index into `scene.vehicles`.
pub fn select_communicating_vehicle(
    scene: &Scene,
    lane: usize,
    window_m: f64,
    seed: u64,
) -> Result<usize> {
    let infra_x = scene.infrastructure_position[0];
    let eligible: Vec<usize> = scene
        .vehicles
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            v.kind == VehicleKind::Car
                && v.lane == lane
                && (v.body.center[0] - infra_x).abs() <= window_m
        })
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleVehicle);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(eligible[rng.random_range(0..eligible.len())])
}

/// Rooftop antenna position: center of the top face.
pub fn antenna_position(body: &Cuboid) -> Point3 {
    [
        body.center[0],
        body.center[1],
        body.center[2] + body.dimensions[2] / 2.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (Scene, TrafficConfig) {
        let traffic = TrafficConfig::default();
        let scene = canyon_template(&SceneLayout::default(), &traffic).unwrap();
        (scene, traffic)
    }

    /// Bumper-to-bumper gaps between consecutive same-lane vehicles.
    fn lane_gaps(scene: &Scene) -> Vec<f64> {
        let mut gaps = Vec::new();
        for lane in 0..scene.lanes.len() {
            let mut xs: Vec<(f64, f64)> = scene
                .vehicles
                .iter()
                .filter(|v| v.lane == lane)
                .map(|v| (v.body.center[0], v.body.dimensions[0]))
                .collect();
            xs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in xs.windows(2) {
                let (x0, l0) = w[0];
                let (x1, l1) = w[1];
                gaps.push((x1 - l1 / 2.0) - (x0 + l0 / 2.0));
            }
        }
        gaps
    }

    #[test]
    fn template_matches_layout() {
        let (scene, _) = defaults();
        assert_eq!(scene.lanes.len(), 4);
        assert_eq!(scene.road_extent, (-200.0, 200.0));
        // lane 0 nearest the roadside unit at y = 9
        assert!((scene.lanes[0].center_y - 5.25).abs() < 1e-12);
        assert!((scene.lanes[3].center_y + 5.25).abs() < 1e-12);
        assert_eq!(scene.infrastructure_position, [0.0, 9.0, 5.0]);
        assert_eq!(scene.buildings.len(), 2);
        // facades at ±15 m from road center
        assert!((scene.buildings[0].center[1] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_gives_identical_snapshot() {
        let (template, traffic) = defaults();
        let a = sample_snapshot(&template, &traffic, 42).unwrap();
        let b = sample_snapshot(&template, &traffic, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_snapshot(&template, &traffic, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn truck_share_matches_configured_fraction() {
        let (template, traffic) = defaults();
        let mut cars = 0usize;
        let mut trucks = 0usize;
        let mut seed = 0;
        while cars + trucks < 10_000 {
            let scene = sample_snapshot(&template, &traffic, seed).unwrap();
            for v in &scene.vehicles {
                match v.kind {
                    VehicleKind::Car => cars += 1,
                    VehicleKind::Truck => trucks += 1,
                }
            }
            seed += 1;
        }
        let share = trucks as f64 / (cars + trucks) as f64;
        assert!((share - 0.40).abs() <= 0.02, "truck share {share}");
    }

    /// Long-road traffic: a short road over-samples dense realizations and
    /// biases harvested gap moments by about CV²/n per lane.
    fn long_road() -> (Scene, TrafficConfig) {
        let traffic = TrafficConfig {
            road_extent_m: 4000.0,
            ..TrafficConfig::default()
        };
        let scene = canyon_template(&SceneLayout::default(), &traffic).unwrap();
        (scene, traffic)
    }

    #[test]
    fn mean_gap_matches_erlang_mean() {
        let (template, traffic) = long_road();
        let mut gaps = Vec::new();
        let mut seed = 1000;
        while gaps.len() < 10_000 {
            let scene = sample_snapshot(&template, &traffic, seed).unwrap();
            gaps.extend(lane_gaps(&scene));
            seed += 1;
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(
            (mean - traffic.mean_gap_m).abs() <= 0.02 * traffic.mean_gap_m,
            "mean gap {mean}"
        );
    }

    #[test]
    fn gap_variance_matches_erlang_moments() {
        let (template, traffic) = long_road();
        let mut gaps = Vec::new();
        let mut seed = 5000;
        while gaps.len() < 100_000 {
            let scene = sample_snapshot(&template, &traffic, seed).unwrap();
            gaps.extend(lane_gaps(&scene));
            seed += 1;
        }
        let n = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expected = traffic.mean_gap_m.powi(2) / traffic.erlang_shape as f64;
        assert!(
            (var - expected).abs() <= 0.05 * expected,
            "gap variance {var} vs {expected}"
        );
    }

    #[test]
    fn consecutive_vehicles_never_overlap() {
        let (template, traffic) = defaults();
        let mut counts = std::collections::HashSet::new();
        for seed in 0..1000 {
            let scene = sample_snapshot(&template, &traffic, seed).unwrap();
            counts.insert(scene.vehicles.len());
            for g in lane_gaps(&scene) {
                assert!(g > 0.0, "seed {seed}: overlap, gap {g}");
            }
            for v in &scene.vehicles {
                assert!(v.body.center[0] - v.body.dimensions[0] / 2.0 >= scene.road_extent.0);
                assert!(v.body.center[0] + v.body.dimensions[0] / 2.0 <= scene.road_extent.1);
            }
        }
        assert!(counts.len() > 1, "vehicle counts should vary across seeds");
    }

    #[test]
    fn infeasible_mean_gap_is_rejected() {
        let mut traffic = TrafficConfig {
            mean_gap_m: 10.0,
            ..TrafficConfig::default()
        };
        assert!(matches!(
            traffic.validate(),
            Err(Error::InfeasibleTraffic(_))
        ));
        // without trucks a 10 m mean gap is fine (cars are 5 m long)
        traffic.truck_fraction = 0.0;
        assert!(traffic.validate().is_ok());
    }

    #[test]
    fn cv_selection_returns_the_only_eligible_car() {
        let (template, _) = defaults();
        let mut scene = template.clone();
        let car = Cuboid::new([30.0, 5.25, 0.75], VehicleKind::Car.dimensions(), 0.0).unwrap();
        let truck_dims = VehicleKind::Truck.dimensions();
        let truck = Cuboid::new([60.0, 5.25, truck_dims[2] / 2.0], truck_dims, 0.0).unwrap();
        scene.vehicles = vec![
            Vehicle { body: truck, kind: VehicleKind::Truck, lane: 0 },
            Vehicle { body: car, kind: VehicleKind::Car, lane: 0 },
            // eligible kind but wrong lane
            Vehicle { body: car, kind: VehicleKind::Car, lane: 1 },
        ];
        for seed in 0..16 {
            assert_eq!(select_communicating_vehicle(&scene, 0, 100.0, seed).unwrap(), 1);
        }
    }

    #[test]
    fn cv_selection_reports_truck_only_snapshots() {
        let (template, _) = defaults();
        let mut scene = template.clone();
        let dims = VehicleKind::Truck.dimensions();
        let body = Cuboid::new([10.0, 5.25, dims[2] / 2.0], dims, 0.0).unwrap();
        scene.vehicles = vec![Vehicle { body, kind: VehicleKind::Truck, lane: 0 }];
        assert!(matches!(
            select_communicating_vehicle(&scene, 0, 100.0, 1),
            Err(Error::NoEligibleVehicle)
        ));
    }

    #[test]
    fn cv_offsets_are_uniform_over_the_window() {
        // Kolmogorov–Smirnov against the uniform CDF on [-100, 100]
        let (template, traffic) = defaults();
        let mut offsets = Vec::with_capacity(10_000);
        let mut seed = 90_000u64;
        while offsets.len() < 10_000 {
            let scene = sample_snapshot(&template, &traffic, seed).unwrap();
            if let Ok(idx) = select_communicating_vehicle(&scene, 0, 100.0, seed ^ 0x5eed) {
                offsets.push(scene.vehicles[idx].body.center[0]);
            }
            seed += 1;
        }
        offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = offsets.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, x) in offsets.iter().enumerate() {
            let u = (x + 100.0) / 200.0;
            ks = ks.max(((i + 1) as f64 / n - u).abs());
            ks = ks.max((i as f64 / n - u).abs());
        }
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn antenna_sits_on_the_rooftop_center() {
        let car = Cuboid::new([0.0, 0.0, 0.75], VehicleKind::Car.dimensions(), 0.0).unwrap();
        assert_eq!(antenna_position(&car), [0.0, 0.0, 1.5]);
        let truck_dims = VehicleKind::Truck.dimensions();
        let truck = Cuboid::new([0.0, 0.0, truck_dims[2] / 2.0], truck_dims, 0.0).unwrap();
        assert_eq!(antenna_position(&truck), [0.0, 0.0, 3.8]);
        let moved = Cuboid::new([12.0, -3.0, 0.75], VehicleKind::Car.dimensions(), 90.0).unwrap();
        assert_eq!(antenna_position(&moved), [12.0, -3.0, 1.5]);
    }

    #[test]
    fn segment_interval_handles_misses_and_grazes() {
        let b = Cuboid::new([0.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0).unwrap();
        // straight through
        let (t0, t1) = b.segment_interval([-5.0, 0.0, 1.0], [5.0, 0.0, 1.0]).unwrap();
        assert!((t0 - 0.4).abs() < 1e-12 && (t1 - 0.6).abs() < 1e-12);
        // miss
        assert!(b.segment_interval([-5.0, 5.0, 1.0], [5.0, 5.0, 1.0]).is_none());
        // graze the top face: zero-length interval
        let graze = b.segment_interval([0.0, 0.0, 2.0], [0.0, 5.0, 4.0]);
        if let Some((g0, g1)) = graze {
            assert!(g1 - g0 < 1e-9);
        }
        // yawed box: rotating 45° brings the corner into the path
        let rotated = Cuboid::new([0.0, 2.0, 1.0], [4.0, 2.0, 2.0], 45.0).unwrap();
        assert!(rotated.segment_interval([-5.0, 0.0, 1.0], [5.0, 0.0, 1.0]).is_some());
    }

    #[test]
    fn dump_text_lists_counts() {
        let (template, traffic) = defaults();
        let scene = sample_snapshot(&template, &traffic, 9).unwrap();
        let dump = scene.dump_text();
        assert!(dump.contains("lanes"));
        assert!(dump.contains(&format!("{} vehicles", scene.vehicles.len())));
    }
}
