//! Finite moving configurations and the all-times hard-core check.
//!
//! Infinite configurations are represented by finite windows; every report
//! here speaks about the pairs present in the window only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{particle_approach, ApproachTime, Particle, Vec2};
use crate::pairs::{self, PairMin};

/// Absolute tolerance for "at least" comparisons on distances.
pub const DISTANCE_TOL: f64 = 1e-9;

/// Default hard-core threshold: unit minimum distance.
pub const DEFAULT_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("configuration has no particles")]
    Empty,
    #[error("discreteness radius must be finite and positive, got {0}")]
    BadRadius(f64),
    #[error("particle {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("particles {0} and {1} are identical")]
    DuplicateParticle(usize, usize),
    #[error("particles {i} and {j} start {distance} apart, below the declared radius {radius}")]
    NotDiscrete {
        i: usize,
        j: usize,
        distance: f64,
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("bad time range: t0={t0}, t1={t1}, frames={frames}")]
    BadRange { t0: f64, t1: f64, frames: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingConfiguration {
    particles: Vec<Particle>,
    discreteness_radius: f64,
}

impl MovingConfiguration {
    /// Validates finiteness, distinctness and the declared discreteness radius.
    pub fn new(particles: Vec<Particle>, discreteness_radius: f64) -> Result<Self, ConfigError> {
        if particles.is_empty() {
            return Err(ConfigError::Empty);
        }
        if !(discreteness_radius.is_finite() && discreteness_radius > 0.0) {
            return Err(ConfigError::BadRadius(discreteness_radius));
        }
        if let Some(k) = particles
            .iter()
            .position(|p| !(p.position.is_finite() && p.velocity.is_finite()))
        {
            return Err(ConfigError::NonFinite(k));
        }
        let closest = pairs::fold_all_pairs(
            particles.len(),
            || None,
            |acc: &mut Option<PairMin>, i, j| {
                let d = (particles[i].position - particles[j].position).norm();
                PairMin::offer(acc, PairMin::new(d, i, j));
            },
            PairMin::merge,
        );
        if let Some(m) = closest {
            if m.value == 0.0 && particles[m.i].velocity == particles[m.j].velocity {
                return Err(ConfigError::DuplicateParticle(m.i, m.j));
            }
            if m.value < discreteness_radius {
                return Err(ConfigError::NotDiscrete {
                    i: m.i,
                    j: m.j,
                    distance: m.value,
                    radius: discreteness_radius,
                });
            }
        }
        Ok(Self {
            particles,
            discreteness_radius,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn discreteness_radius(&self) -> f64 {
        self.discreteness_radius
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.particles
            .iter()
            .map(Particle::speed)
            .fold(0.0, f64::max)
    }

    pub fn min_speed(&self) -> f64 {
        self.particles
            .iter()
            .map(Particle::speed)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same configuration with every velocity negated.
    pub fn reversed(&self) -> Self {
        Self {
            particles: self
                .particles
                .iter()
                .map(|p| Particle::new(p.position, -p.velocity))
                .collect(),
            discreteness_radius: self.discreteness_radius,
        }
    }

    /// Same configuration with every initial position moved by `offset`.
    pub fn translated(&self, offset: Vec2) -> Self {
        Self {
            particles: self
                .particles
                .iter()
                .map(|p| Particle::new(p.position + offset, p.velocity))
                .collect(),
            discreteness_radius: self.discreteness_radius,
        }
    }
}

/// Positions `x + t v(x)` in input order.
pub fn slice_at(config: &MovingConfiguration, t: f64) -> Vec<Vec2> {
    config.particles.iter().map(|p| p.at(t)).collect()
}

/// Smallest pairwise distance within one time slice.
pub fn slice_min_distance(positions: &[Vec2]) -> Option<PairMin> {
    pairs::fold_all_pairs(
        positions.len(),
        || None,
        |acc: &mut Option<PairMin>, i, j| {
            PairMin::offer(
                acc,
                PairMin::new((positions[i] - positions[j]).norm(), i, j),
            )
        },
        PairMin::merge,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardCoreReport {
    pub particle_count: usize,
    pub pair_count: u64,
    /// `+inf` for a single particle.
    pub min_alltime_distance: f64,
    pub witness_pair: Option<(usize, usize)>,
    pub witness_time: Option<ApproachTime>,
    pub threshold: f64,
    /// `min_alltime_distance - threshold`.
    pub margin: f64,
    /// `margin >= -DISTANCE_TOL`.
    pub passed: bool,
}

/// Exact minimum over all pairs and all times of the pairwise distance.
pub fn verify_hardcore(config: &MovingConfiguration, threshold: f64) -> HardCoreReport {
    let ps = &config.particles;
    let min = pairs::fold_all_pairs(
        ps.len(),
        || None,
        |acc: &mut Option<PairMin>, i, j| {
            // identical particles are excluded at construction
            let d = particle_approach(&ps[i], &ps[j]).map_or(0.0, |a| a.distance);
            PairMin::offer(acc, PairMin::new(d, i, j));
        },
        PairMin::merge,
    );
    let (distance, witness_pair, witness_time) = match min {
        Some(m) => {
            let time = particle_approach(&ps[m.i], &ps[m.j])
                .ok()
                .map(|a| a.time_at_min);
            (m.value, Some((m.i, m.j)), time)
        }
        None => (f64::INFINITY, None, None),
    };
    let margin = distance - threshold;
    HardCoreReport {
        particle_count: ps.len(),
        pair_count: pairs::pair_count(ps.len()),
        min_alltime_distance: distance,
        witness_pair,
        witness_time,
        threshold,
        margin,
        passed: margin >= -DISTANCE_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub t: f64,
    pub positions: Vec<Vec2>,
}

/// `frames` uniformly spaced slices over `[t0, t1]`, endpoints included.
pub fn snapshot_series(
    config: &MovingConfiguration,
    t0: f64,
    t1: f64,
    frames: usize,
) -> Result<Vec<Frame>, EvolutionError> {
    if !(t0.is_finite() && t1.is_finite()) || t0 > t1 || frames == 0 {
        return Err(EvolutionError::BadRange { t0, t1, frames });
    }
    Ok((0..frames)
        .map(|k| {
            let t = if frames == 1 || k == 0 {
                t0
            } else if k == frames - 1 {
                t1
            } else {
                t0 + (t1 - t0) * (k as f64) / ((frames - 1) as f64)
            };
            Frame {
                index: k,
                t,
                positions: slice_at(config, t),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_flow, MonotoneProfile, Window};

    fn p(x: (f64, f64), v: (f64, f64)) -> Particle {
        Particle::new(Vec2::new(x.0, x.1), Vec2::new(v.0, v.1))
    }

    fn flow_config(n: i64, margin: f64) -> MovingConfiguration {
        let f = build_flow(&MonotoneProfile::Arctan, Window::square(n), margin).unwrap();
        MovingConfiguration::new(f.particles, 1.0).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            MovingConfiguration::new(vec![], 1.0),
            Err(ConfigError::Empty)
        );
        let one = vec![p((0.0, 0.0), (0.0, 0.0))];
        assert_eq!(
            MovingConfiguration::new(one.clone(), 0.0),
            Err(ConfigError::BadRadius(0.0))
        );
        let dup = vec![p((0.0, 0.0), (1.0, 0.0)), p((0.0, 0.0), (1.0, 0.0))];
        assert_eq!(
            MovingConfiguration::new(dup, 1.0),
            Err(ConfigError::DuplicateParticle(0, 1))
        );
        let close = vec![p((0.0, 0.0), (1.0, 0.0)), p((0.5, 0.0), (0.0, 0.0))];
        assert!(matches!(
            MovingConfiguration::new(close, 1.0),
            Err(ConfigError::NotDiscrete { i: 0, j: 1, .. })
        ));
        let nan = vec![p((f64::NAN, 0.0), (0.0, 0.0))];
        assert_eq!(
            MovingConfiguration::new(nan, 1.0),
            Err(ConfigError::NonFinite(0))
        );
    }

    #[test]
    fn slices() {
        let c = flow_config(1, 0.5);
        let s0 = slice_at(&c, 0.0);
        assert!(s0.iter().zip(c.particles()).all(|(s, q)| *s == q.position));
        let one = MovingConfiguration::new(vec![p((0.0, 0.0), (1.0, 2.0))], 1.0).unwrap();
        assert_eq!(slice_at(&one, 3.0), vec![Vec2::new(3.0, 6.0)]);
    }

    #[test]
    fn two_particle_flow_slices_stay_apart() {
        let f = build_flow(&MonotoneProfile::Arctan, Window::new((0, 1), (0, 0)), 1.0).unwrap();
        let c = MovingConfiguration::new(f.particles, 1.0).unwrap();
        let closed = verify_hardcore(&c, 1.0).min_alltime_distance;
        for t in [10.0, -10.0] {
            let d = slice_min_distance(&slice_at(&c, t)).unwrap().value;
            assert!(d >= 1.0);
            assert!(d >= closed - DISTANCE_TOL);
        }
    }

    #[test]
    fn static_pair_passes() {
        let c = MovingConfiguration::new(
            vec![p((0.0, 0.0), (0.0, 0.0)), p((2.0, 0.0), (0.0, 0.0))],
            1.0,
        )
        .unwrap();
        let r = verify_hardcore(&c, 1.0);
        assert_eq!(r.min_alltime_distance, 2.0);
        assert_eq!(r.margin, 1.0);
        assert!(r.passed);
        assert_eq!(r.witness_time, Some(ApproachTime::AllTimes));
    }

    #[test]
    fn head_on_pair_collides_at_two() {
        let c = MovingConfiguration::new(
            vec![p((0.0, 0.0), (1.0, 0.0)), p((4.0, 0.0), (-1.0, 0.0))],
            1.0,
        )
        .unwrap();
        let r = verify_hardcore(&c, 1.0);
        assert_eq!(r.min_alltime_distance, 0.0);
        assert_eq!(r.witness_pair, Some((0, 1)));
        assert_eq!(r.witness_time, Some(ApproachTime::At(2.0)));
        assert!(!r.passed);
    }

    #[test]
    fn five_by_five_flow_passes_at_one() {
        let r = verify_hardcore(&flow_config(2, 0.5), 1.0);
        assert_eq!(r.particle_count, 25);
        assert_eq!(r.pair_count, 300);
        assert!((r.min_alltime_distance - 1.0).abs() < 1e-9);
        assert!(r.passed);
    }

    #[test]
    fn single_particle_is_vacuous() {
        let c = MovingConfiguration::new(vec![p((0.0, 0.0), (1.0, 0.0))], 1.0).unwrap();
        let r = verify_hardcore(&c, 1.0);
        assert_eq!(r.min_alltime_distance, f64::INFINITY);
        assert_eq!(r.witness_pair, None);
        assert!(r.passed);
    }

    #[test]
    fn ties_pick_smallest_pair() {
        let c = MovingConfiguration::new(
            vec![
                p((0.0, 0.0), (0.0, 0.0)),
                p((3.0, 0.0), (0.0, 0.0)),
                p((0.0, 3.0), (0.0, 0.0)),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(verify_hardcore(&c, 1.0).witness_pair, Some((0, 1)));
    }

    #[test]
    fn snapshot_ranges() {
        let c = flow_config(1, 0.5);
        let one = snapshot_series(&c, 1.5, 4.0, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].t, 1.5);
        let three = snapshot_series(&c, 0.0, 2.0, 3).unwrap();
        let ts: Vec<f64> = three.iter().map(|f| f.t).collect();
        assert_eq!(ts, vec![0.0, 1.0, 2.0]);
        assert!(snapshot_series(&c, 1.0, 0.0, 3).is_err());
        assert!(snapshot_series(&c, 0.0, 1.0, 0).is_err());
        assert!(snapshot_series(&c, 0.0, f64::NAN, 2).is_err());

        let still = MovingConfiguration::new(
            vec![p((0.0, 0.0), (0.0, 0.0)), p((1.0, 1.0), (0.0, 0.0))],
            1.0,
        )
        .unwrap();
        let frames = snapshot_series(&still, -5.0, 5.0, 4).unwrap();
        assert!(frames.windows(2).all(|w| w[0].positions == w[1].positions));
    }
}
