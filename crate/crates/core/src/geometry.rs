//! Global frame geometry.
//!
//! Right-handed, z-up frame. Azimuth is measured from +x toward +y and
//! wrapped to `[-π, π)`; zenith is measured from +z in `[0, π]`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

/// A point or vector in the global Cartesian frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Position3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Position3> for [f64; 3] {
    fn from(p: Position3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Horizontal (x-y plane) distance.
    pub fn distance_2d(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Position3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Position3 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Position3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Position3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Wrap an angle to `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2π for tiny negative inputs
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A direction on the unit sphere, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionPair {
    pub azimuth: f64,
    pub zenith: f64,
}

impl DirectionPair {
    /// Builds a direction, wrapping azimuth and folding zenith back into `[0, π]`.
    pub fn new(azimuth: f64, zenith: f64) -> Self {
        let mut az = azimuth;
        let mut ze = zenith.rem_euclid(2.0 * PI);
        if ze > PI {
            ze = 2.0 * PI - ze;
            az += PI;
        }
        Self {
            azimuth: wrap_angle(az),
            zenith: ze,
        }
    }

    pub fn from_degrees(azimuth_deg: f64, zenith_deg: f64) -> Self {
        Self::new(azimuth_deg.to_radians(), zenith_deg.to_radians())
    }

    /// Direction of a (non-zero) vector.
    pub fn from_vector(v: Position3) -> Self {
        let n = v.norm();
        let zenith = (v.z / n).clamp(-1.0, 1.0).acos();
        let azimuth = v.y.atan2(v.x);
        Self {
            azimuth: wrap_angle(azimuth),
            zenith,
        }
    }

    pub fn unit_vector(self) -> Position3 {
        let (st, ct) = self.zenith.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        Position3::new(st * cp, st * sp, ct)
    }

    /// Spherical basis vector along increasing zenith.
    pub fn theta_hat(self) -> Position3 {
        let (st, ct) = self.zenith.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        Position3::new(ct * cp, ct * sp, -st)
    }

    /// Spherical basis vector along increasing azimuth.
    pub fn phi_hat(self) -> Position3 {
        let (sp, cp) = self.azimuth.sin_cos();
        Position3::new(-sp, cp, 0.0)
    }

    pub fn is_valid(self) -> bool {
        self.azimuth.is_finite()
            && self.zenith.is_finite()
            && (-PI..PI).contains(&self.azimuth)
            && (0.0..=PI).contains(&self.zenith)
    }
}

/// Array or panel orientation as bearing (about z), downtilt (about y) and
/// slant (about x), applied as `Rz(bearing)·Ry(downtilt)·Rx(slant)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Orientation {
    pub bearing: f64,
    pub downtilt: f64,
    pub slant: f64,
}

pub type Mat3 = [[f64; 3]; 3];

impl Orientation {
    pub fn from_degrees(bearing: f64, downtilt: f64, slant: f64) -> Self {
        Self {
            bearing: bearing.to_radians(),
            downtilt: downtilt.to_radians(),
            slant: slant.to_radians(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.bearing == 0.0 && self.downtilt == 0.0 && self.slant == 0.0
    }

    /// Local-to-global rotation matrix.
    pub fn matrix(&self) -> Mat3 {
        let (sa, ca) = self.bearing.sin_cos();
        let (sb, cb) = self.downtilt.sin_cos();
        let (sg, cg) = self.slant.sin_cos();
        [
            [ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg],
            [sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg],
            [-sb, cb * sg, cb * cg],
        ]
    }

    pub fn to_global(&self, v: Position3) -> Position3 {
        if self.is_identity() {
            return v;
        }
        mat_vec(&self.matrix(), v)
    }

    pub fn to_local(&self, v: Position3) -> Position3 {
        if self.is_identity() {
            return v;
        }
        mat_t_vec(&self.matrix(), v)
    }

    pub fn direction_to_local(&self, d: DirectionPair) -> DirectionPair {
        if self.is_identity() {
            return d;
        }
        DirectionPair::from_vector(self.to_local(d.unit_vector()))
    }

    pub fn direction_to_global(&self, d: DirectionPair) -> DirectionPair {
        if self.is_identity() {
            return d;
        }
        DirectionPair::from_vector(self.to_global(d.unit_vector()))
    }
}

fn mat_vec(m: &Mat3, v: Position3) -> Position3 {
    Position3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

fn mat_t_vec(m: &Mat3, v: Position3) -> Position3 {
    Position3::new(
        m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
        m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
        m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angle_diff(a: f64, b: f64) -> f64 {
        wrap_angle(a - b).abs()
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn vector_round_trip() {
        let d = DirectionPair::from_degrees(37.0, 112.0);
        let back = DirectionPair::from_vector(d.unit_vector());
        assert!(angle_diff(back.azimuth, d.azimuth) < 1e-12);
        assert!((back.zenith - d.zenith).abs() < 1e-12);
    }

    #[test]
    fn identity_orientation_is_identity() {
        let o = Orientation::default();
        let d = DirectionPair::from_degrees(-120.0, 30.0);
        assert_eq!(o.direction_to_local(d), d);
    }

    #[test]
    fn bearing_rotation_shifts_azimuth() {
        let o = Orientation::from_degrees(90.0, 0.0, 0.0);
        for az in [-170.0_f64, -45.0, 0.0, 60.0, 179.0] {
            let d = DirectionPair::from_degrees(az, 80.0);
            let l = o.direction_to_local(d);
            let expected = wrap_angle(az.to_radians() - PI / 2.0);
            assert!(angle_diff(l.azimuth, expected) < 1e-12, "az {az}");
            assert!((l.zenith - d.zenith).abs() < 1e-12);
        }
    }

    #[test]
    fn spherical_basis_is_orthonormal() {
        let d = DirectionPair::from_degrees(10.0, 70.0);
        let (r, t, p) = (d.unit_vector(), d.theta_hat(), d.phi_hat());
        assert!((r.dot(t)).abs() < 1e-15);
        assert!((r.dot(p)).abs() < 1e-15);
        assert!((t.dot(p)).abs() < 1e-15);
        assert!((t.norm() - 1.0).abs() < 1e-15);
        // right-handed: r × θ = φ
        assert!((r.cross(t) - p).norm() < 1e-15);
    }
}
