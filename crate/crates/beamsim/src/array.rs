//! Planar-array steering vectors, Kronecker-product DFT training codebooks,
//! beam-gain evaluation and region-of-interest beam filtering.
//!
//! Angle convention: azimuth is measured in the horizontal plane from array
//! broadside, elevation from the horizontal plane; broadside is (0°, 0°).
//! Element (m, n) sits m rows up and n columns across, stored row-major, and
//! its steering phase is 2π·d·(m·sin el + n·cos el·sin az) with the spacing
//! d in wavelengths.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geo;
use crate::positive;
use crate::Result;

/// Uniform planar array: `n_vertical` rows by `n_horizontal` columns of
/// elements spaced `element_spacing` wavelengths apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_horizontal: usize,
    pub n_vertical: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub carrier_frequency_hz: f64,
}

impl ArrayGeometry {
    pub fn new(
        n_horizontal: usize,
        n_vertical: usize,
        element_spacing: f64,
        carrier_frequency_hz: f64,
    ) -> Result<Self> {
        if n_horizontal == 0 || n_vertical == 0 {
            return Err(Error::InvalidGeometry(
                "array must have at least one element per axis".into(),
            ));
        }
        if !positive(element_spacing) {
            return Err(Error::InvalidGeometry(format!(
                "element spacing must be positive, got {element_spacing}"
            )));
        }
        if !positive(carrier_frequency_hz) {
            return Err(Error::InvalidGeometry(format!(
                "carrier frequency must be positive, got {carrier_frequency_hz}"
            )));
        }
        Ok(Self {
            n_horizontal,
            n_vertical,
            element_spacing,
            carrier_frequency_hz,
        })
    }

    /// N×N array at half-wavelength spacing.
    pub fn square(n: usize, carrier_frequency_hz: f64) -> Result<Self> {
        Self::new(n, n, 0.5, carrier_frequency_hz)
    }

    pub fn total_elements(&self) -> usize {
        self.n_horizontal * self.n_vertical
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.carrier_frequency_hz
    }
}

/// Unit-norm complex weight/steering vector over the array elements,
/// stored row-major (vertical index × horizontal index).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec {
    entries: Vec<Complex64>,
}

impl ComplexVec {
    /// Builds a unit-norm vector from arbitrary entries.
    pub fn unit(entries: Vec<Complex64>) -> Result<Self> {
        let norm = Self::norm_of(&entries);
        if !positive(norm) {
            return Err(Error::InvalidConfig(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        let entries = entries.into_iter().map(|e| e / norm).collect();
        Ok(Self { entries })
    }

    /// Entries are trusted to already be unit norm.
    pub(crate) fn from_normalized(entries: Vec<Complex64>) -> Self {
        debug_assert!((Self::norm_of(&entries) - 1.0).abs() < 1e-9);
        Self { entries }
    }

    fn norm_of(entries: &[Complex64]) -> f64 {
        entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        Self::norm_of(&self.entries)
    }

    /// Conjugated inner product Σ conj(self_i)·other_i.
    pub fn dot(&self, other: &ComplexVec) -> Complex64 {
        dot_conj(&self.entries, &other.entries)
    }
}

/// Σ conj(a_i)·b_i over equal-length slices.
pub(crate) fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Array response toward (azimuth, elevation); unit norm.
pub fn steering_vector(
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<ComplexVec> {
    if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
        return Err(Error::InvalidAngle(format!(
            "non-finite angles ({azimuth_deg}, {elevation_deg})"
        )));
    }
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    let horiz = el.cos() * az.sin();
    let vert = el.sin();
    let d = geometry.element_spacing;
    let amp = 1.0 / (geometry.total_elements() as f64).sqrt();
    let mut entries = Vec::with_capacity(geometry.total_elements());
    for m in 0..geometry.n_vertical {
        for n in 0..geometry.n_horizontal {
            let phase = 2.0 * PI * d * (m as f64 * vert + n as f64 * horiz);
            entries.push(Complex64::from_polar(amp, phase));
        }
    }
    Ok(ComplexVec::from_normalized(entries))
}

/// DFT training codebook: one beam per (p, q) DFT index pair.
///
/// Beam `q·n_horizontal + p` is the Kronecker product of the vertical
/// q-th and horizontal p-th DFT columns, normalized to unit norm; the set
/// is orthonormal and tiles visible space at half-wavelength spacing.
#[derive(Debug, Clone)]
pub struct Codebook {
    beams: Vec<ComplexVec>,
    index_map: Vec<(usize, usize)>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beam(&self, index: usize) -> &ComplexVec {
        &self.beams[index]
    }

    pub fn beams(&self) -> &[ComplexVec] {
        &self.beams
    }

    /// (horizontal DFT index p, vertical DFT index q) of a beam.
    pub fn dft_indices(&self, index: usize) -> (usize, usize) {
        self.index_map[index]
    }

    pub fn index_map(&self) -> &[(usize, usize)] {
        &self.index_map
    }
}

/// Builds the N_h·N_v-beam DFT codebook for a geometry.
pub fn build_dft_codebook(geometry: &ArrayGeometry) -> Codebook {
    let nh = geometry.n_horizontal;
    let nv = geometry.n_vertical;
    let amp = 1.0 / (geometry.total_elements() as f64).sqrt();
    let mut beams = Vec::with_capacity(nh * nv);
    let mut index_map = Vec::with_capacity(nh * nv);
    for q in 0..nv {
        for p in 0..nh {
            let mut entries = Vec::with_capacity(nh * nv);
            for m in 0..nv {
                for n in 0..nh {
                    let phase = 2.0
                        * PI
                        * (p as f64 * n as f64 / nh as f64 + q as f64 * m as f64 / nv as f64);
                    entries.push(Complex64::from_polar(amp, phase));
                }
            }
            beams.push(ComplexVec::from_normalized(entries));
            index_map.push((p, q));
        }
    }
    Codebook { beams, index_map }
}

/// Power gain of a beam toward (azimuth, elevation): |⟨a, beam⟩|²·N_total,
/// so a DFT beam evaluated at its own grid angle yields the element count.
pub fn beam_gain(
    beam: &ComplexVec,
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<f64> {
    if beam.len() != geometry.total_elements() {
        return Err(Error::DimensionMismatch {
            expected: geometry.total_elements(),
            got: beam.len(),
        });
    }
    let a = steering_vector(geometry, azimuth_deg, elevation_deg)?;
    Ok(a.dot(beam).norm_sqr() * geometry.total_elements() as f64)
}

/// Closed-form gain of DFT beam (p, q): the separable product of two
/// Dirichlet kernels. Algebraically equal to [`beam_gain`] on that beam.
pub fn dft_beam_gain(
    geometry: &ArrayGeometry,
    p: usize,
    q: usize,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> f64 {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    let d = geometry.element_spacing;
    let phi_h = 2.0 * PI * (p as f64 / geometry.n_horizontal as f64 - d * el.cos() * az.sin());
    let phi_v = 2.0 * PI * (q as f64 / geometry.n_vertical as f64 - d * el.sin());
    let sh = dirichlet_magnitude(phi_h, geometry.n_horizontal);
    let sv = dirichlet_magnitude(phi_v, geometry.n_vertical);
    sh * sh * sv * sv / geometry.total_elements() as f64
}

/// |Σ_{k=0}^{n-1} e^{jkφ}| = |sin(nφ/2)/sin(φ/2)|, evaluated stably by
/// reducing φ/2 modulo π first.
fn dirichlet_magnitude(phi: f64, n: usize) -> f64 {
    let x = 0.5 * phi;
    let delta = x - PI * (x / PI).round();
    if delta.abs() < 1e-12 {
        n as f64
    } else {
        ((n as f64 * delta).sin() / delta.sin()).abs()
    }
}

/// Main-lobe steering direction of DFT beam (p, q), found by a 1° grid
/// search over the front hemisphere followed by a local 0.05° refinement.
/// Ties keep the first (lowest azimuth, then elevation) candidate.
pub fn main_lobe_direction(geometry: &ArrayGeometry, p: usize, q: usize) -> (f64, f64) {
    let mut best_gain = f64::NEG_INFINITY;
    let mut best = (0.0_f64, 0.0_f64);
    for az_step in -90..=90 {
        let az = az_step as f64;
        for el_step in -90..=90 {
            let el = el_step as f64;
            let g = dft_beam_gain(geometry, p, q, az, el);
            if g > best_gain {
                best_gain = g;
                best = (az, el);
            }
        }
    }
    let (caz, cel) = best;
    for az_step in -20..=20 {
        let az = (caz + 0.05 * az_step as f64).clamp(-90.0, 90.0);
        for el_step in -20..=20 {
            let el = (cel + 0.05 * el_step as f64).clamp(-90.0, 90.0);
            let g = dft_beam_gain(geometry, p, q, az, el);
            if g > best_gain {
                best_gain = g;
                best = (az, el);
            }
        }
    }
    best
}

/// Rectangular angular sector in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularSector {
    pub azimuth_min_deg: f64,
    pub azimuth_max_deg: f64,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
}

impl AngularSector {
    pub fn new(
        azimuth_min_deg: f64,
        azimuth_max_deg: f64,
        elevation_min_deg: f64,
        elevation_max_deg: f64,
    ) -> Result<Self> {
        let sector = Self {
            azimuth_min_deg,
            azimuth_max_deg,
            elevation_min_deg,
            elevation_max_deg,
        };
        sector.validate()?;
        Ok(sector)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = self.azimuth_min_deg < self.azimuth_max_deg
            && self.elevation_min_deg < self.elevation_max_deg;
        if !ordered {
            return Err(Error::InvalidAngle(
                "sector bounds must satisfy min < max".into(),
            ));
        }
        if self.azimuth_min_deg < -180.0
            || self.azimuth_max_deg > 180.0
            || self.elevation_min_deg < -90.0
            || self.elevation_max_deg > 90.0
        {
            return Err(Error::InvalidAngle(
                "sector must lie within azimuth ±180°, elevation ±90°".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, azimuth_deg: f64, elevation_deg: f64) -> bool {
        azimuth_deg >= self.azimuth_min_deg
            && azimuth_deg <= self.azimuth_max_deg
            && elevation_deg >= self.elevation_min_deg
            && elevation_deg <= self.elevation_max_deg
    }

    fn expanded(&self, margin_az_deg: f64, margin_el_deg: f64) -> AngularSector {
        AngularSector {
            azimuth_min_deg: self.azimuth_min_deg - margin_az_deg,
            azimuth_max_deg: self.azimuth_max_deg + margin_az_deg,
            elevation_min_deg: self.elevation_min_deg - margin_el_deg,
            elevation_max_deg: self.elevation_max_deg + margin_el_deg,
        }
    }
}

/// Half the broadside inter-beam angular spacing for an n-point DFT axis.
fn half_beam_spacing_deg(n: usize, spacing: f64) -> f64 {
    0.5 * (1.0 / (spacing * n as f64)).min(1.0).asin().to_degrees()
}

/// Indices of the beams whose main lobe falls inside the sector expanded
/// by half the inter-beam spacing on each axis. Errors when no beam
/// qualifies (sector outside the codebook's angular span).
pub fn beams_covering_sector(
    codebook: &Codebook,
    geometry: &ArrayGeometry,
    sector: &AngularSector,
) -> Result<Vec<usize>> {
    sector.validate()?;
    let margin_az = half_beam_spacing_deg(geometry.n_horizontal, geometry.element_spacing);
    let margin_el = half_beam_spacing_deg(geometry.n_vertical, geometry.element_spacing);
    let expanded = sector.expanded(margin_az, margin_el);
    let mut out = Vec::new();
    for (i, &(p, q)) in codebook.index_map().iter().enumerate() {
        let (az, el) = main_lobe_direction(geometry, p, q);
        if expanded.contains(az, el) {
            out.push(i);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySectorCoverage);
    }
    Ok(out)
}

/// Mounting orientation of an array: boresight azimuth (yaw) and boresight
/// elevation (tilt) in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Orientation {
    pub yaw_deg: f64,
    pub tilt_deg: f64,
}

impl Orientation {
    pub fn new(yaw_deg: f64, tilt_deg: f64) -> Self {
        Self { yaw_deg, tilt_deg }
    }

    /// Rotates a global direction vector into the array's local frame
    /// (broadside = local +x).
    pub fn global_to_local(&self, dir: geo::Point3) -> geo::Point3 {
        let v = geo::rotate_z(dir, -self.yaw_deg.to_radians());
        geo::rotate_y(v, self.tilt_deg.to_radians())
    }

    /// Local (azimuth, elevation) in degrees of a global direction vector.
    pub fn local_angles_deg(&self, dir: geo::Point3) -> (f64, f64) {
        geo::angles_from_direction(self.global_to_local(dir))
    }
}

/// Gain samples (azimuth, elevation, gain_dB) over the front hemisphere at
/// `step_deg` resolution, for external pattern plotting.
pub fn pattern_samples(
    beam: &ComplexVec,
    geometry: &ArrayGeometry,
    step_deg: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if !positive(step_deg) {
        return Err(Error::InvalidAngle(format!(
            "pattern step must be positive, got {step_deg}"
        )));
    }
    let steps = (180.0 / step_deg).round() as i64;
    let mut out = Vec::new();
    for i in 0..=steps {
        let az = -90.0 + i as f64 * step_deg;
        for j in 0..=steps {
            let el = -90.0 + j as f64 * step_deg;
            let g = beam_gain(beam, geometry, az, el)?;
            let db = 10.0 * g.max(1e-30).log10();
            out.push((az, el, db));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> ArrayGeometry {
        ArrayGeometry::square(n, 60e9).unwrap()
    }

    /// Independent oracle: steering entries straight from the per-element
    /// phase formula, bypassing the library loop structure.
    fn steering_oracle(geom: &ArrayGeometry, az_deg: f64, el_deg: f64) -> Vec<Complex64> {
        let az = az_deg.to_radians();
        let el = el_deg.to_radians();
        let amp = 1.0 / (geom.total_elements() as f64).sqrt();
        (0..geom.total_elements())
            .map(|i| {
                let m = (i / geom.n_horizontal) as f64;
                let n = (i % geom.n_horizontal) as f64;
                let phase = 2.0
                    * PI
                    * geom.element_spacing
                    * (m * el.sin() + n * el.cos() * az.sin());
                Complex64::from_polar(amp, phase)
            })
            .collect()
    }

    #[test]
    fn geometry_rejects_degenerate_inputs() {
        assert!(ArrayGeometry::new(0, 4, 0.5, 60e9).is_err());
        assert!(ArrayGeometry::new(4, 4, 0.0, 60e9).is_err());
        assert!(ArrayGeometry::new(4, 4, 0.5, -1.0).is_err());
    }

    #[test]
    fn steering_broadside_n2_is_all_half() {
        let sv = steering_vector(&square(2), 0.0, 0.0).unwrap();
        assert_eq!(sv.len(), 4);
        for e in sv.entries() {
            assert!((e.re - 0.5).abs() < 1e-12);
            assert!(e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn steering_matches_phase_formula_oracle() {
        let geom = square(8);
        let sv = steering_vector(&geom, 30.0, 0.0).unwrap();
        let oracle = steering_oracle(&geom, 30.0, 0.0);
        for (a, b) in sv.entries().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
        // horizontal progression at el=0, az=30°: phase π·n·0.5 per column n
        for n in 0..8 {
            let expected = PI * n as f64 * 0.5;
            let got = sv.entries()[n].arg();
            let wrapped = (got - expected + PI).rem_euclid(2.0 * PI) - PI;
            assert!(wrapped.abs() < 1e-10, "column {n}: {got} vs {expected}");
        }
    }

    #[test]
    fn steering_is_unit_norm_for_random_angles() {
        let geom = square(8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let az = rng.random_range(-180.0..180.0);
            let el = rng.random_range(-90.0..90.0);
            let sv = steering_vector(&geom, az, el).unwrap();
            assert!((sv.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_rejects_non_finite_angles() {
        let geom = square(4);
        assert!(steering_vector(&geom, f64::NAN, 0.0).is_err());
        assert!(steering_vector(&geom, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn codebook_n1_is_single_unit_beam() {
        let cb = build_dft_codebook(&square(1));
        assert_eq!(cb.len(), 1);
        assert_eq!(cb.beam(0).len(), 1);
        assert!((cb.beam(0).entries()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn codebook_n2_gram_is_identity() {
        // oracle: enumerate all 4×4 inner products explicitly
        let cb = build_dft_codebook(&square(2));
        assert_eq!(cb.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let g = cb.beam(i).dot(cb.beam(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g.norm() - expected).abs() < 1e-12,
                    "gram[{i}][{j}] = {g}"
                );
            }
        }
    }

    #[test]
    fn codebook_n8_has_64_beams_and_bijective_index_map() {
        let cb = build_dft_codebook(&square(8));
        assert_eq!(cb.len(), 64);
        let mut seen = std::collections::HashSet::new();
        for i in 0..cb.len() {
            let (p, q) = cb.dft_indices(i);
            assert!(p < 8 && q < 8);
            assert!(seen.insert((p, q)), "duplicate DFT index pair");
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn codebook_orthonormal_for_all_sizes() {
        for n in [1usize, 2, 4, 8, 16] {
            let cb = build_dft_codebook(&square(n));
            for i in 0..cb.len() {
                for j in i..cb.len() {
                    let g = cb.beam(i).dot(cb.beam(j)).norm();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g - expected).abs() < 1e-10,
                        "N={n} gram[{i}][{j}] = {g}"
                    );
                }
            }
        }
    }

    /// Grid angle of a visible DFT beam, from the wrapped u-space target.
    fn grid_angle(geom: &ArrayGeometry, p: usize, q: usize) -> Option<(f64, f64)> {
        let d = geom.element_spacing;
        let wrap = |u: f64| {
            let period = 1.0 / d;
            let u = u.rem_euclid(period);
            if u >= period / 2.0 {
                u - period
            } else {
                u
            }
        };
        let uh = wrap(p as f64 / (d * geom.n_horizontal as f64));
        let uv = wrap(q as f64 / (d * geom.n_vertical as f64));
        if uh * uh + uv * uv > 1.0 {
            return None;
        }
        let el = uv.asin();
        let az = (uh / el.cos()).clamp(-1.0, 1.0).asin();
        Some((az.to_degrees(), el.to_degrees()))
    }

    #[test]
    fn dft_beam_gain_at_own_grid_angle_is_element_count() {
        let geom = square(8);
        let cb = build_dft_codebook(&geom);
        let mut checked = 0;
        for i in 0..cb.len() {
            let (p, q) = cb.dft_indices(i);
            if let Some((az, el)) = grid_angle(&geom, p, q) {
                let g = beam_gain(cb.beam(i), &geom, az, el).unwrap();
                assert!((g - 64.0).abs() < 1e-8, "beam ({p},{q}) gain {g}");
                checked += 1;
            }
        }
        assert!(checked > 32, "expected most beams visible, got {checked}");
    }

    #[test]
    fn gain_at_foreign_grid_angle_is_negligible() {
        // DFT orthogonality: a beam evaluated at another beam's grid angle
        let geom = square(8);
        let cb = build_dft_codebook(&geom);
        let (az, el) = grid_angle(&geom, 2, 1).unwrap();
        for i in 0..cb.len() {
            let (p, q) = cb.dft_indices(i);
            if (p, q) == (2, 1) {
                continue;
            }
            let g = beam_gain(cb.beam(i), &geom, az, el).unwrap();
            assert!(g <= 1e-10 * 64.0, "beam ({p},{q}) gain {g}");
        }
    }

    #[test]
    fn parseval_sum_over_codebook_is_one() {
        let geom = square(8);
        let cb = build_dft_codebook(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let az = rng.random_range(-90.0..90.0);
            let el = rng.random_range(-90.0..90.0);
            let a = steering_vector(&geom, az, el).unwrap();
            let total: f64 = cb.beams().iter().map(|f| a.dot(f).norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-9, "Parseval sum {total}");
        }
    }

    #[test]
    fn closed_form_matches_brute_force() {
        let geom = square(8);
        let cb = build_dft_codebook(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let i = rng.random_range(0..cb.len());
            let (p, q) = cb.dft_indices(i);
            let az = rng.random_range(-90.0..90.0);
            let el = rng.random_range(-90.0..90.0);
            let brute = beam_gain(cb.beam(i), &geom, az, el).unwrap();
            let closed = dft_beam_gain(&geom, p, q, az, el);
            let denom = brute.abs().max(1e-12);
            assert!(
                (brute - closed).abs() / denom < 1e-8,
                "({p},{q}) at ({az:.2},{el:.2}): {brute} vs {closed}"
            );
        }
    }

    #[test]
    fn beam_gain_rejects_dimension_mismatch() {
        let geom = square(4);
        let beam = build_dft_codebook(&square(2)).beam(0).clone();
        assert!(matches!(
            beam_gain(&beam, &geom, 0.0, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn broadside_beam_main_lobe_is_origin() {
        let geom = square(8);
        let (az, el) = main_lobe_direction(&geom, 0, 0);
        assert!(az.abs() < 0.05 && el.abs() < 0.05, "({az}, {el})");
    }

    #[test]
    fn full_hemisphere_sector_covers_all_beams() {
        let geom = square(4);
        let cb = build_dft_codebook(&geom);
        let sector = AngularSector::new(-90.0, 90.0, -90.0, 90.0).unwrap();
        let beams = beams_covering_sector(&cb, &geom, &sector).unwrap();
        assert_eq!(beams.len(), 16);
    }

    #[test]
    fn sector_outside_visible_space_is_reported() {
        let geom = square(8);
        let cb = build_dft_codebook(&geom);
        let sector = AngularSector::new(150.0, 179.0, 0.0, 10.0).unwrap();
        assert!(matches!(
            beams_covering_sector(&cb, &geom, &sector),
            Err(Error::EmptySectorCoverage)
        ));
    }

    #[test]
    fn enlarging_a_sector_never_drops_beams() {
        let geom = square(8);
        let cb = build_dft_codebook(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let az0 = rng.random_range(-80.0..0.0);
            let az1 = rng.random_range(az0 + 5.0..90.0);
            let el0 = rng.random_range(-80.0..0.0);
            let el1 = rng.random_range(el0 + 5.0..90.0);
            let small = AngularSector::new(az0, az1, el0, el1).unwrap();
            let grow = rng.random_range(1.0..20.0);
            let big = AngularSector::new(
                (az0 - grow).max(-180.0),
                (az1 + grow).min(180.0),
                (el0 - grow).max(-90.0),
                (el1 + grow).min(90.0),
            )
            .unwrap();
            let inner = beams_covering_sector(&cb, &geom, &small)
                .unwrap_or_default();
            let outer = beams_covering_sector(&cb, &geom, &big).unwrap_or_default();
            for b in &inner {
                assert!(outer.contains(b), "beam {b} lost when enlarging");
            }
        }
    }

    #[test]
    fn rectangular_arrays_keep_orthonormality() {
        let geom = ArrayGeometry::new(4, 2, 0.5, 60e9).unwrap();
        assert_eq!(geom.total_elements(), 8);
        let cb = build_dft_codebook(&geom);
        assert_eq!(cb.len(), 8);
        for i in 0..cb.len() {
            for j in i..cb.len() {
                let g = cb.beam(i).dot(cb.beam(j)).norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-12);
            }
        }
        let sv = steering_vector(&geom, 20.0, -10.0).unwrap();
        assert_eq!(sv.len(), 8);
        assert!((sv.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sector_validation_rejects_bad_bounds() {
        assert!(AngularSector::new(30.0, 10.0, 0.0, 10.0).is_err());
        assert!(AngularSector::new(-10.0, 10.0, 5.0, 5.0).is_err());
        assert!(AngularSector::new(-200.0, 10.0, 0.0, 10.0).is_err());
        assert!(AngularSector::new(-10.0, 10.0, 0.0, 95.0).is_err());
    }

    #[test]
    fn orientation_maps_boresight_to_broadside() {
        let o = Orientation::new(-90.0, 0.0);
        // global -y is this array's boresight
        let (az, el) = o.local_angles_deg([0.0, -1.0, 0.0]);
        assert!(az.abs() < 1e-9 && el.abs() < 1e-9);
        let tilted = Orientation::new(30.0, 20.0);
        let dir = geo::direction_from_angles(30.0, 20.0);
        let (az, el) = tilted.local_angles_deg(dir);
        assert!(az.abs() < 1e-9 && el.abs() < 1e-9, "({az}, {el})");
    }

    #[test]
    fn pattern_samples_cover_hemisphere() {
        let geom = square(2);
        let cb = build_dft_codebook(&geom);
        let samples = pattern_samples(cb.beam(0), &geom, 30.0).unwrap();
        assert_eq!(samples.len(), 49);
        let peak = samples.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
        assert!((peak - 10.0 * 4.0_f64.log10()).abs() < 1e-6);
    }
}
