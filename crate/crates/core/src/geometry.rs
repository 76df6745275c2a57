//! Planar and space-time vector kinematics.
//!
//! Everything here is a pure function on `f64` vectors. The closest-approach
//! formula is the workhorse of the crate: two particles moving with constant
//! velocities come closest at the distance from their relative position to the
//! line spanned by their relative velocity.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance of the parallel-line test in [`line_distance_3d`].
pub const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("both particles share position and velocity")]
    IdenticalParticle,
    #[error("velocity difference is zero")]
    DegenerateVelocity,
    #[error("line direction is the zero vector")]
    ZeroDirection,
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(radius * c, radius * s)
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// Rotation by a quarter turn counter-clockwise: `(x1, x2) -> (-x2, x1)`.
    #[inline]
    pub fn rotate_quarter(self) -> Vec2 {
        Vec2::new(-self.x2, self.x1)
    }

    /// Direction angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.x2.atan2(self.x1)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }

    pub fn lift(self, x3: f64) -> Vec3 {
        Vec3::new(self.x1, self.x2, x3)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x1 += rhs.x1;
        self.x2 += rhs.x2;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x1 * rhs, self.x2 * rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Vec3 {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2 + self.x3 * other.x3
    }

    #[inline]
    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.x2 * other.x3 - self.x3 * other.x2,
            self.x3 * other.x1 - self.x1 * other.x3,
            self.x1 * other.x2 - self.x2 * other.x1,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x1 + rhs.x1, self.x2 + rhs.x2, self.x3 + rhs.x3)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x1 - rhs.x1, self.x2 - rhs.x2, self.x3 - rhs.x3)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x1 * rhs, self.x2 * rhs, self.x3 * rhs)
    }
}

/// A point particle: initial position and constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl Particle {
    pub const fn new(position: Vec2, velocity: Vec2) -> Self {
        Self { position, velocity }
    }

    /// Position at time `t`.
    #[inline]
    pub fn at(&self, t: f64) -> Vec2 {
        self.position + self.velocity * t
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// When a pair attains its minimum distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ApproachTime {
    At(f64),
    /// Zero relative velocity: the distance is the same at every time.
    AllTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairApproach {
    pub distance: f64,
    pub time_at_min: ApproachTime,
}

fn finite2(vs: &[Vec2]) -> Result<(), GeometryError> {
    if vs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}

/// Infimum over all times of `|(x + t vx) - (y + t vy)|`, with the minimizing time.
pub fn closest_approach(
    x: Vec2,
    vx: Vec2,
    y: Vec2,
    vy: Vec2,
) -> Result<PairApproach, GeometryError> {
    finite2(&[x, vx, y, vy])?;
    let d = x - y;
    let u = vx - vy;
    if u.is_zero() {
        if d.is_zero() {
            return Err(GeometryError::IdenticalParticle);
        }
        return Ok(PairApproach {
            distance: d.norm(),
            time_at_min: ApproachTime::AllTimes,
        });
    }
    let distance = d.dot(u.rotate_quarter()).abs() / u.norm();
    let time = -d.dot(u) / u.norm_sq();
    Ok(PairApproach {
        distance,
        time_at_min: ApproachTime::At(time),
    })
}

/// `closest_approach` for two particles.
pub fn particle_approach(p: &Particle, q: &Particle) -> Result<PairApproach, GeometryError> {
    closest_approach(p.position, p.velocity, q.position, q.velocity)
}

/// The separation quotient `|<x-y, wx-wy>| / |wx-wy|`.
///
/// Equals the closest-approach distance of the pair moving with `v = -I w`.
pub fn separation_margin(x: Vec2, y: Vec2, wx: Vec2, wy: Vec2) -> Result<f64, GeometryError> {
    finite2(&[x, y, wx, wy])?;
    let dw = wx - wy;
    if dw.is_zero() {
        return Err(GeometryError::DegenerateVelocity);
    }
    Ok((x - y).dot(dw).abs() / dw.norm())
}

/// Distance between the infinite lines `p1 + t d1` and `p2 + s d2`.
pub fn line_distance_3d(p1: Vec3, d1: Vec3, p2: Vec3, d2: Vec3) -> Result<f64, GeometryError> {
    if ![p1, d1, p2, d2].iter().all(|v| v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let n1 = d1.norm();
    let n2 = d2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(GeometryError::ZeroDirection);
    }
    let w = p2 - p1;
    let n = d1.cross(d2);
    let nn = n.norm();
    if nn < PARALLEL_EPS * n1 * n2 {
        // parallel: distance from p2 to the first line
        return Ok(w.cross(d1).norm() / n1);
    }
    Ok(w.dot(n).abs() / nn)
}
