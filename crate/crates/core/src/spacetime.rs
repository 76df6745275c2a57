//! Worldlines in space-time and the cylinder packings they carry.
//!
//! A particle moving as `x + t v` traces the line `{(x + t v, t)}` with
//! direction `(v, 1)`. If every time slice is 1-separated and speeds are at
//! most `M`, distinct worldlines stay at least `1 / sqrt(1 + M^2)` apart, so
//! cylinders of half that radius have disjoint interiors. Distinct velocities
//! give nonparallel axes, and a speed range `[m, M]` confines the axis angle
//! with the vertical to `[atan m, atan M]`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{verify_hardcore, MovingConfiguration, DEFAULT_THRESHOLD, DISTANCE_TOL};
use crate::geometry::{line_distance_3d, Particle, Vec2, Vec3};
use crate::pairs::{self, PairMin};

pub const SCENE_HEADER: &str = "cylinder-scene v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("hard-core condition fails: minimum all-time distance {0}")]
    HardCoreNotVerified(f64),
    #[error("radius {radius} exceeds the admissible {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("radius must be finite and positive, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneFormatError {
    #[error("missing `{SCENE_HEADER}` header")]
    MissingHeader,
    #[error("line {line}: {msg}")]
    Record { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldLine {
    /// `(x, 0)`.
    pub base: Vec3,
    /// `(v, 1)`, unnormalized.
    pub direction: Vec3,
}

impl WorldLine {
    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.direction.x1, self.direction.x2)
    }

    /// Angle between the axis and the time direction; its tangent is the speed.
    pub fn angle_to_vertical(&self) -> f64 {
        self.velocity().norm().atan()
    }

    pub fn distance_to(&self, other: &WorldLine) -> f64 {
        // directions have third coordinate 1, never zero
        line_distance_3d(self.base, self.direction, other.base, other.direction)
            .expect("worldline directions are nonzero")
    }
}

pub fn worldline_of(p: &Particle) -> WorldLine {
    WorldLine {
        base: p.position.lift(0.0),
        direction: p.velocity.lift(1.0),
    }
}

/// Guaranteed worldline separation `1 / sqrt(1 + M^2)` for speeds at most `max_speed`.
pub fn worldline_bound(max_speed: f64) -> f64 {
    1.0 / (1.0 + max_speed * max_speed).sqrt()
}

/// `(1 - M u)^2 + u^2`, the squared space-time gap bound at time offset `u`.
pub fn gap_quadratic(max_speed: f64, u: f64) -> f64 {
    let a = 1.0 - max_speed * u;
    a * a + u * u
}

/// Minimizer `M / (1 + M^2)` of [`gap_quadratic`].
pub fn gap_minimizer(max_speed: f64) -> f64 {
    max_speed / (1.0 + max_speed * max_speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub axis: WorldLine,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CylinderScene {
    pub cylinders: Vec<Cylinder>,
    /// Measured `(min, max)` speed over the axes.
    pub speed_bounds: (f64, f64),
}

impl CylinderScene {
    pub fn new(cylinders: Vec<Cylinder>) -> Self {
        let speeds = cylinders.iter().map(|c| c.axis.velocity().norm());
        let bounds = if cylinders.is_empty() {
            (0.0, 0.0)
        } else {
            (
                speeds.clone().fold(f64::INFINITY, f64::min),
                speeds.fold(0.0, f64::max),
            )
        };
        Self {
            cylinders,
            speed_bounds: bounds,
        }
    }

    pub fn from_config(config: &MovingConfiguration, radius: f64) -> Self {
        Self::new(
            config
                .particles()
                .iter()
                .map(|p| Cylinder {
                    axis: worldline_of(p),
                    radius,
                })
                .collect(),
        )
    }

    pub fn axes(&self) -> Vec<WorldLine> {
        self.cylinders.iter().map(|c| c.axis).collect()
    }
}

/// Smallest pairwise distance between lines.
pub fn min_worldline_distance(lines: &[WorldLine]) -> Option<PairMin> {
    pairs::fold_all_pairs(
        lines.len(),
        || None,
        |acc: &mut Option<PairMin>, i, j| {
            PairMin::offer(acc, PairMin::new(lines[i].distance_to(&lines[j]), i, j))
        },
        PairMin::merge,
    )
}

/// Both forms of the direction-annulus test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusCheck {
    /// Every `atan |v|` lies in `[atan m, atan M]`.
    pub by_angle: bool,
    /// Every `|v|` lies in `[m, M]`.
    pub by_speed: bool,
}

pub fn annulus_check(speeds: &[f64], m: f64, big_m: f64) -> AnnulusCheck {
    let (lo, hi) = (m.atan(), big_m.atan());
    AnnulusCheck {
        by_angle: speeds.iter().all(|s| (lo..=hi).contains(&s.atan())),
        by_speed: speeds.iter().all(|s| (m..=big_m).contains(s)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub cylinder_count: usize,
    pub radius: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub worldline_bound: f64,
    /// `max(2 radius, worldline_bound)`.
    pub required_distance: f64,
    /// `+inf` for fewer than two cylinders.
    pub min_worldline_distance: f64,
    pub witness_pair: Option<(usize, usize)>,
    pub distance_margin: f64,
    pub distances_ok: bool,
    pub nonparallel: bool,
    pub parallel_pairs: Vec<(usize, usize)>,
    /// Direction comparison on `(v, 1)` agrees with the velocity comparison.
    pub direction_test_agrees: bool,
    pub annulus_angle_min: f64,
    pub annulus_angle_max: f64,
    pub annulus: AnnulusCheck,
    pub hardcore_min_distance: f64,
    pub passed: bool,
}

/// Largest radius covered by the worldline bound for speeds at most `max_speed`.
pub fn max_safe_radius(max_speed: f64) -> f64 {
    worldline_bound(max_speed) / 2.0
}

pub fn verify_scene(config: &MovingConfiguration, radius: f64) -> Result<SceneReport, SceneError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(SceneError::BadRadius(radius));
    }
    let hard = verify_hardcore(config, DEFAULT_THRESHOLD);
    if !hard.passed {
        return Err(SceneError::HardCoreNotVerified(hard.min_alltime_distance));
    }
    let speed_max = config.max_speed();
    let speed_min = config.min_speed();
    let limit = max_safe_radius(speed_max);
    if radius > limit {
        return Err(SceneError::RadiusTooLarge { radius, limit });
    }
    let bound = worldline_bound(speed_max);
    let required = (2.0 * radius).max(bound);

    let scene = CylinderScene::from_config(config, radius);
    let axes = scene.axes();
    let min = min_worldline_distance(&axes);
    let min_distance = min.map_or(f64::INFINITY, |m| m.value);
    let margin = min_distance - required;

    let velocities: Vec<Vec2> = config.particles().iter().map(|p| p.velocity).collect();
    let parallel_pairs = pairs::duplicate_vectors(&velocities);
    let directions_parallel = parallel_direction_pairs(&axes);

    let speeds: Vec<f64> = config.particles().iter().map(Particle::speed).collect();
    let annulus = annulus_check(&speeds, speed_min, speed_max);

    let distances_ok = margin >= -DISTANCE_TOL;
    let nonparallel = parallel_pairs.is_empty();
    Ok(SceneReport {
        cylinder_count: axes.len(),
        radius,
        speed_min,
        speed_max,
        worldline_bound: bound,
        required_distance: required,
        min_worldline_distance: min_distance,
        witness_pair: min.map(|m| (m.i, m.j)),
        distance_margin: margin,
        distances_ok,
        nonparallel,
        direction_test_agrees: directions_parallel == parallel_pairs,
        parallel_pairs,
        annulus_angle_min: speed_min.atan(),
        annulus_angle_max: speed_max.atan(),
        annulus,
        hardcore_min_distance: hard.min_alltime_distance,
        passed: distances_ok && nonparallel && annulus.by_angle && annulus.by_speed,
    })
}

/// Pairs of axes whose directions are parallel, by exact cross product.
///
/// Directions are `(v, 1)`; a zero cross product forces the scalar to be 1 and
/// the velocities to coincide.
pub fn parallel_direction_pairs(axes: &[WorldLine]) -> Vec<(usize, usize)> {
    let mut found = pairs::fold_all_pairs(
        axes.len(),
        Vec::new,
        |acc: &mut Vec<(usize, usize)>, i, j| {
            let c = axes[i].direction.cross(axes[j].direction);
            if c.x1 == 0.0 && c.x2 == 0.0 && c.x3 == 0.0 {
                acc.push((i, j));
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    // report each equal-direction group as consecutive pairs, like `duplicate_vectors`
    let mut nearest = std::collections::BTreeMap::new();
    for (i, j) in found.drain(..) {
        let e = nearest.entry(j).or_insert(i);
        *e = (*e).max(i);
    }
    found.extend(nearest.into_iter().map(|(j, i)| (i, j)));
    found.sort_unstable();
    found
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One `px,py,pz,dx,dy,dz,r` record per cylinder with unit direction, sorted
/// by axis point.
pub fn export_scene(scene: &CylinderScene) -> String {
    let mut recs: Vec<(Vec3, Vec3, f64)> = scene
        .cylinders
        .iter()
        .map(|c| (c.axis.base, c.axis.direction.normalized(), c.radius))
        .collect();
    recs.sort_by(|a, b| {
        a.0.x1
            .total_cmp(&b.0.x1)
            .then(a.0.x2.total_cmp(&b.0.x2))
            .then(a.0.x3.total_cmp(&b.0.x3))
    });
    let mut out = String::new();
    out.push_str(SCENE_HEADER);
    out.push('\n');
    for (p, d, r) in recs {
        let fields = [p.x1, p.x2, p.x3, d.x1, d.x2, d.x3, r].map(fmt17);
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn parse_scene(text: &str) -> Result<CylinderScene, SceneFormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SCENE_HEADER => {}
        _ => return Err(SceneFormatError::MissingHeader),
    }
    let mut cylinders = Vec::new();
    for (k, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| SceneFormatError::Record { line: k + 1, msg };
        let vals = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("`{f}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite field".into()));
        }
        let dz = vals[5];
        if dz <= 0.0 {
            return Err(err("direction must point forward in time".into()));
        }
        if vals[6] <= 0.0 {
            return Err(err("radius must be positive".into()));
        }
        let axis = WorldLine {
            base: Vec3::new(vals[0], vals[1], vals[2]),
            direction: Vec3::new(vals[3] / dz, vals[4] / dz, 1.0),
        };
        cylinders.push(Cylinder {
            axis,
            radius: vals[6],
        });
    }
    Ok(CylinderScene::new(cylinders))
}
