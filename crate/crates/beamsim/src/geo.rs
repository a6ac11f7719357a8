//! Small 3D vector helpers shared by the scene and channel modules.

pub type Point3 = [f64; 3];

#[inline]
pub fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: Point3, b: Point3) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn normalize(a: Point3) -> Point3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Point on the segment a→b at parameter t in [0, 1].
#[inline]
pub fn lerp(a: Point3, b: Point3, t: f64) -> Point3 {
    add(a, scale(sub(b, a), t))
}

/// Rotate a vector about the z axis by `angle_rad`.
#[inline]
pub fn rotate_z(v: Point3, angle_rad: f64) -> Point3 {
    let (s, c) = angle_rad.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Rotate a vector about the y axis by `angle_rad`.
#[inline]
pub fn rotate_y(v: Point3, angle_rad: f64) -> Point3 {
    let (s, c) = angle_rad.sin_cos();
    [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
}

/// Unit direction vector for (azimuth, elevation) in degrees.
///
/// Azimuth is measured in the horizontal plane from +x, elevation from the
/// horizontal plane; (0°, 0°) maps to +x.
#[inline]
pub fn direction_from_angles(azimuth_deg: f64, elevation_deg: f64) -> Point3 {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

/// (azimuth, elevation) in degrees of a direction vector; inverse of
/// [`direction_from_angles`] for unit input.
#[inline]
pub fn angles_from_direction(dir: Point3) -> (f64, f64) {
    let unit = normalize(dir);
    let az = unit[1].atan2(unit[0]).to_degrees();
    let el = unit[2].clamp(-1.0, 1.0).asin().to_degrees();
    (az, el)
}
