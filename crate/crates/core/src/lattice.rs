//! Collision-free velocity assignments on windows of the integer lattice.
//!
//! A bounded strictly increasing profile `phi` applied to each coordinate gives
//! `w(x1, x2) = (phi(x1), phi(x2))`. For distinct lattice points every
//! coordinate difference is zero or at least one in absolute value and has the
//! sign of the corresponding profile difference, which yields
//!
//! ```text
//! <x - y, w(x) - w(y)>  >=  |dphi_1| + |dphi_2|  >=  |w(x) - w(y)|  >  0
//! ```
//!
//! so every pair moving with `v = -I w` stays at distance at least one. A
//! common shift of all velocities leaves relative motion untouched and keeps
//! speeds away from zero.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{particle_approach, Particle, Vec2};
use crate::pairs::{self, PairMin, DEFAULT_SEED, EXHAUSTIVE_PAIR_LIMIT};

/// Chain-inequality margins below this are counted as failures.
pub const CHAIN_TOL: f64 = 1e-12;

/// Upper limit on window size accepted by [`build_flow`].
pub const MAX_WINDOW_POINTS: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("profile has no value at {0}")]
    OutOfDomain(i64),
    #[error("window is empty")]
    EmptyWindow,
    #[error("window has {0} points, more than the supported maximum")]
    WindowTooLarge(u64),
    #[error("profile is not strictly increasing between {0} and {}", .0 + 1)]
    NonMonotoneProfile(i64),
    #[error("profile table: {0}")]
    BadTable(String),
    #[error("shift margin must be finite and non-negative, got {0}")]
    InvalidShift(f64),
}

/// Sorted `(n, phi(n))` samples for a table-driven profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    entries: Vec<(i64, f64)>,
}

impl ProfileTable {
    pub fn new(mut entries: Vec<(i64, f64)>) -> Result<Self, LatticeError> {
        if entries.is_empty() {
            return Err(LatticeError::BadTable("no entries".into()));
        }
        if let Some(&(n, _)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(LatticeError::BadTable(format!("non-finite value at {n}")));
        }
        entries.sort_by_key(|&(n, _)| n);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(LatticeError::BadTable(format!("duplicate key {}", w[0].0)));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(i64, f64)] {
        &self.entries
    }

    pub fn get(&self, n: i64) -> Option<f64> {
        self.entries
            .binary_search_by_key(&n, |&(k, _)| k)
            .ok()
            .map(|i| self.entries[i].1)
    }
}

/// Bounded strictly increasing map from the integers to the reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MonotoneProfile {
    /// `arctan n`, bounded by `pi/2`.
    Arctan,
    /// `tanh n`, bounded by 1. Saturates in double precision past `|n| = 18`.
    Tanh,
    /// `n / (1 + |n|)`, bounded by 1.
    RationalSaturating,
    TableDriven(ProfileTable),
}

impl MonotoneProfile {
    pub fn name(&self) -> &'static str {
        match self {
            MonotoneProfile::Arctan => "arctan",
            MonotoneProfile::Tanh => "tanh",
            MonotoneProfile::RationalSaturating => "rational",
            MonotoneProfile::TableDriven(_) => "table",
        }
    }

    /// Supremum of `|phi|`.
    pub fn bound(&self) -> f64 {
        match self {
            MonotoneProfile::Arctan => FRAC_PI_2,
            MonotoneProfile::Tanh | MonotoneProfile::RationalSaturating => 1.0,
            MonotoneProfile::TableDriven(t) => {
                t.entries.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max)
            }
        }
    }

    pub fn eval(&self, n: i64) -> Result<f64, LatticeError> {
        let x = n as f64;
        Ok(match self {
            MonotoneProfile::Arctan => x.atan(),
            MonotoneProfile::Tanh => x.tanh(),
            MonotoneProfile::RationalSaturating => x / (1.0 + x.abs()),
            MonotoneProfile::TableDriven(t) => t.get(n).ok_or(LatticeError::OutOfDomain(n))?,
        })
    }

    /// Values on `lo..=hi`, failing unless they strictly increase.
    pub fn eval_increasing(&self, lo: i64, hi: i64) -> Result<Vec<f64>, LatticeError> {
        let vals = (lo..=hi)
            .map(|n| self.eval(n))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(k) = vals.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LatticeError::NonMonotoneProfile(lo + k as i64));
        }
        Ok(vals)
    }
}

/// `phi` applied to each coordinate of a lattice point.
pub fn assign_w(profile: &MonotoneProfile, point: (i64, i64)) -> Result<Vec2, LatticeError> {
    Ok(Vec2::new(profile.eval(point.0)?, profile.eval(point.1)?))
}

/// Inclusive rectangle `[x1_lo, x1_hi] x [x2_lo, x2_hi]` of lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub x1: (i64, i64),
    pub x2: (i64, i64),
}

impl Window {
    pub fn new(x1: (i64, i64), x2: (i64, i64)) -> Self {
        Self { x1, x2 }
    }

    /// `{-n..n}^2`.
    pub fn square(n: i64) -> Self {
        Self::new((-n, n), (-n, n))
    }

    pub fn is_empty(&self) -> bool {
        self.x1.0 > self.x1.1 || self.x2.0 > self.x2.1
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            return 0;
        }
        let a = (self.x1.1 - self.x1.0) as u64 + 1;
        let b = (self.x2.1 - self.x2.0) as u64 + 1;
        a.saturating_mul(b)
    }

    /// Row-major points, first coordinate outermost.
    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.x1.0..=self.x1.1).flat_map(move |a| (self.x2.0..=self.x2.1).map(move |b| (a, b)))
    }
}

/// Velocities for a lattice window, after the common shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowAssignment {
    pub lattice: Vec<(i64, i64)>,
    pub particles: Vec<Particle>,
    /// `w(x)` for each particle; unshifted velocities are `-I w`.
    pub w: Vec<Vec2>,
    pub shift: Vec2,
    pub speed_min: f64,
    pub speed_max: f64,
    pub disk_radius: f64,
}

/// Assigns `v(x) = -I w(x) + a` to every point of `window`, where
/// `a = (sup |v_unshifted| + shift_margin, 0)`.
pub fn build_flow(
    profile: &MonotoneProfile,
    window: Window,
    shift_margin: f64,
) -> Result<FlowAssignment, LatticeError> {
    if !(shift_margin.is_finite() && shift_margin >= 0.0) {
        return Err(LatticeError::InvalidShift(shift_margin));
    }
    if window.is_empty() {
        return Err(LatticeError::EmptyWindow);
    }
    if window.len() > MAX_WINDOW_POINTS {
        return Err(LatticeError::WindowTooLarge(window.len()));
    }
    let phi1 = profile.eval_increasing(window.x1.0, window.x1.1)?;
    let phi2 = profile.eval_increasing(window.x2.0, window.x2.1)?;

    let lattice: Vec<(i64, i64)> = window.points().collect();
    let w: Vec<Vec2> = lattice
        .iter()
        .map(|&(a, b)| {
            Vec2::new(
                phi1[(a - window.x1.0) as usize],
                phi2[(b - window.x2.0) as usize],
            )
        })
        .collect();
    let sup = w.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let shift = Vec2::new(sup + shift_margin, 0.0);
    let particles = lattice
        .iter()
        .zip(&w)
        .map(|(&(a, b), &w)| {
            Particle::new(Vec2::new(a as f64, b as f64), -w.rotate_quarter() + shift)
        })
        .collect();
    Ok(FlowAssignment {
        lattice,
        particles,
        w,
        shift,
        speed_min: shift_margin,
        speed_max: shift.norm() + sup,
        disk_radius: (1.0 - 1e-9) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PairMode {
    Exhaustive,
    Sampled { seed: u64, samples: u64 },
}

/// Outcome of [`verify_flow`]. Conclusions hold for the pairs examined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub particle_count: usize,
    pub pair_count: u64,
    pub pairs_checked: u64,
    pub mode: PairMode,
    /// `None` when there are no pairs (the infimum is `+inf`).
    pub min_distance: Option<PairMin>,
    /// Smallest `<x-y, dw> - (|dphi_1| + |dphi_2|)` over checked pairs.
    pub chain_inner_minus_sum: Option<f64>,
    /// Smallest `(|dphi_1| + |dphi_2|) - |dw|` over checked pairs.
    pub chain_sum_minus_norm: Option<f64>,
    /// Pairs with either chain margin below `-CHAIN_TOL`.
    pub chain_failures: u64,
    pub injective: bool,
    pub duplicate_velocities: Vec<(usize, usize)>,
    pub duplicate_w: Vec<(usize, usize)>,
    pub speed_min: f64,
    pub speed_max: f64,
}

#[derive(Clone, Copy)]
struct FlowAcc {
    min: Option<PairMin>,
    inner_minus_sum: f64,
    sum_minus_norm: f64,
    failures: u64,
}

impl FlowAcc {
    fn new() -> Self {
        Self {
            min: None,
            inner_minus_sum: f64::INFINITY,
            sum_minus_norm: f64::INFINITY,
            failures: 0,
        }
    }

    fn merge(a: Self, b: Self) -> Self {
        Self {
            min: PairMin::merge(a.min, b.min),
            inner_minus_sum: a.inner_minus_sum.min(b.inner_minus_sum),
            sum_minus_norm: a.sum_minus_norm.min(b.sum_minus_norm),
            failures: a.failures + b.failures,
        }
    }
}

/// The two chain margins for one pair: `(inner - sum, sum - norm)`.
pub fn chain_margins(x: Vec2, y: Vec2, wx: Vec2, wy: Vec2) -> (f64, f64) {
    let dw = wx - wy;
    let inner = (x - y).dot(dw);
    let sum = dw.x1.abs() + dw.x2.abs();
    (inner - sum, sum - dw.norm())
}

pub fn verify_flow(flow: &FlowAssignment, sample_budget: u64) -> FlowReport {
    verify_flow_seeded(flow, sample_budget, DEFAULT_SEED)
}

pub fn verify_flow_seeded(flow: &FlowAssignment, sample_budget: u64, seed: u64) -> FlowReport {
    verify_flow_with_limit(flow, sample_budget, seed, EXHAUSTIVE_PAIR_LIMIT)
}

/// [`verify_flow_seeded`] with an explicit exhaustive-enumeration cutoff.
pub fn verify_flow_with_limit(
    flow: &FlowAssignment,
    sample_budget: u64,
    seed: u64,
    exhaustive_limit: u64,
) -> FlowReport {
    let ps = &flow.particles;
    let n = ps.len();
    let total = pairs::pair_count(n);

    let visit = |acc: &mut FlowAcc, i: usize, j: usize| {
        // identical particles sit at distance zero forever
        let d = particle_approach(&ps[i], &ps[j]).map_or(0.0, |a| a.distance);
        PairMin::offer(&mut acc.min, PairMin::new(d, i, j));
        if let (Some(&wi), Some(&wj)) = (flow.w.get(i), flow.w.get(j)) {
            let (m1, m2) = chain_margins(ps[i].position, ps[j].position, wi, wj);
            acc.inner_minus_sum = acc.inner_minus_sum.min(m1);
            acc.sum_minus_norm = acc.sum_minus_norm.min(m2);
            if m1 < -CHAIN_TOL || m2 < -CHAIN_TOL {
                acc.failures += 1;
            }
        }
    };

    let (acc, mode, checked) = if total <= exhaustive_limit {
        let acc = pairs::fold_all_pairs(n, FlowAcc::new, visit, FlowAcc::merge);
        (acc, PairMode::Exhaustive, total)
    } else {
        let list = pairs::sample_pairs(n, sample_budget as usize, seed);
        let acc = pairs::fold_pair_list(&list, FlowAcc::new, visit, FlowAcc::merge);
        (
            acc,
            PairMode::Sampled {
                seed,
                samples: sample_budget,
            },
            list.len() as u64,
        )
    };

    let velocities: Vec<Vec2> = ps.iter().map(|p| p.velocity).collect();
    let duplicate_velocities = pairs::duplicate_vectors(&velocities);
    let duplicate_w = pairs::duplicate_vectors(&flow.w);
    let speeds = ps.iter().map(Particle::speed);
    let has_chain = checked > 0 && flow.w.len() == n;
    FlowReport {
        particle_count: n,
        pair_count: total,
        pairs_checked: checked,
        mode,
        min_distance: acc.min,
        chain_inner_minus_sum: has_chain.then_some(acc.inner_minus_sum),
        chain_sum_minus_norm: has_chain.then_some(acc.sum_minus_norm),
        chain_failures: acc.failures,
        injective: duplicate_velocities.is_empty() && duplicate_w.is_empty(),
        duplicate_velocities,
        duplicate_w,
        speed_min: speeds.clone().fold(f64::INFINITY, f64::min),
        speed_max: speeds.fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn profile_values() {
        assert_eq!(MonotoneProfile::Arctan.eval(0).unwrap(), 0.0);
        assert!(
            (MonotoneProfile::Arctan.eval(1).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15
        );
        assert_eq!(MonotoneProfile::Arctan.eval(1).unwrap(), FRAC_PI_4);
        assert!((MonotoneProfile::Tanh.eval(-2).unwrap() + 0.9640275801).abs() < 1e-10);
        assert_eq!(MonotoneProfile::RationalSaturating.eval(3).unwrap(), 0.75);
    }

    #[test]
    fn table_profile_domain() {
        let t = ProfileTable::new(vec![(1, 0.5), (-1, -0.5), (0, 0.0)]).unwrap();
        let p = MonotoneProfile::TableDriven(t);
        assert_eq!(p.eval(-1).unwrap(), -0.5);
        assert_eq!(p.eval(2), Err(LatticeError::OutOfDomain(2)));
        assert_eq!(p.bound(), 0.5);
        assert!(ProfileTable::new(vec![(0, 1.0), (0, 2.0)]).is_err());
        assert!(ProfileTable::new(vec![]).is_err());
        assert!(ProfileTable::new(vec![(0, f64::NAN)]).is_err());
    }

    #[test]
    fn builtin_profiles_monotone_and_bounded_on_scan() {
        for p in [
            MonotoneProfile::Arctan,
            MonotoneProfile::Tanh,
            MonotoneProfile::RationalSaturating,
        ] {
            let vals = p.eval_increasing(-18, 18).unwrap();
            assert!(vals.iter().all(|v| v.abs() <= p.bound()));
        }
        // tanh runs out of doubles
        assert!(matches!(
            MonotoneProfile::Tanh.eval_increasing(0, 40),
            Err(LatticeError::NonMonotoneProfile(_))
        ));
        assert!(MonotoneProfile::Arctan
            .eval_increasing(-10_000, 10_000)
            .is_ok());
    }

    #[test]
    fn w_examples() {
        let p = MonotoneProfile::Arctan;
        assert_eq!(assign_w(&p, (0, 0)).unwrap(), Vec2::new(0.0, 0.0));
        assert_eq!(assign_w(&p, (1, 0)).unwrap(), Vec2::new(FRAC_PI_4, 0.0));
        assert_eq!(
            assign_w(&p, (-1, 2)).unwrap(),
            Vec2::new(-FRAC_PI_4, 2f64.atan())
        );
    }

    #[test]
    fn two_point_flow() {
        let f = build_flow(&MonotoneProfile::Arctan, Window::new((0, 1), (0, 0)), 1.0).unwrap();
        assert_eq!(f.particles.len(), 2);
        let dv = f.particles[1].velocity - f.particles[0].velocity;
        assert!((dv.x1 - 0.0).abs() < 1e-15 && (dv.x2 + FRAC_PI_4).abs() < 1e-15);
        let a = particle_approach(&f.particles[0], &f.particles[1]).unwrap();
        assert!((a.distance - 1.0).abs() < 1e-12);
        assert_eq!(f.speed_min, 1.0);
        assert!(f.particles.iter().all(|p| p.speed() >= 1.0 - 1e-12));
    }

    #[test]
    fn single_point_flow_is_vacuous() {
        let f = build_flow(&MonotoneProfile::Tanh, Window::new((3, 3), (-2, -2)), 0.25).unwrap();
        assert_eq!(f.particles.len(), 1);
        assert_eq!(f.speed_min, 0.25);
        let r = verify_flow(&f, 100);
        assert_eq!(r.min_distance, None);
        assert_eq!(r.pair_count, 0);
        assert!(r.injective);
        assert_eq!(r.chain_inner_minus_sum, None);
    }

    #[test]
    fn nine_point_flow_all_pairs_at_least_one() {
        let f = build_flow(&MonotoneProfile::Arctan, Window::square(1), 0.5).unwrap();
        assert_eq!(f.particles.len(), 9);
        let mut count = 0;
        for i in 0..9 {
            for j in i + 1..9 {
                let m = crate::geometry::separation_margin(
                    f.particles[i].position,
                    f.particles[j].position,
                    f.w[i],
                    f.w[j],
                )
                .unwrap();
                assert!(m >= 1.0 - 1e-12);
                count += 1;
            }
        }
        assert_eq!(count, 36);
        let r = verify_flow(&f, 0);
        assert_eq!(r.mode, PairMode::Exhaustive);
        let min = r.min_distance.unwrap();
        assert!((min.value - 1.0).abs() < 1e-9);
        assert!(r.chain_inner_minus_sum.unwrap() >= -CHAIN_TOL);
        assert!(r.chain_sum_minus_norm.unwrap() >= -CHAIN_TOL);
        assert_eq!(r.chain_failures, 0);
        assert!(r.injective);
    }

    #[test]
    fn corrupted_flow_flags_injectivity() {
        let mut f = build_flow(&MonotoneProfile::Arctan, Window::square(1), 0.5).unwrap();
        f.particles[5].velocity = f.particles[2].velocity;
        let r = verify_flow(&f, 0);
        assert!(!r.injective);
        assert_eq!(r.duplicate_velocities, vec![(2, 5)]);
    }

    #[test]
    fn build_errors() {
        let p = MonotoneProfile::Arctan;
        assert_eq!(
            build_flow(&p, Window::new((1, 0), (0, 0)), 1.0),
            Err(LatticeError::EmptyWindow)
        );
        assert_eq!(
            build_flow(&p, Window::square(1), -1.0),
            Err(LatticeError::InvalidShift(-1.0))
        );
        let t = ProfileTable::new(vec![(0, 0.0), (1, 0.0)]).unwrap();
        assert_eq!(
            build_flow(
                &MonotoneProfile::TableDriven(t),
                Window::new((0, 1), (0, 0)),
                1.0
            ),
            Err(LatticeError::NonMonotoneProfile(0))
        );
        let t = ProfileTable::new(vec![(0, 0.0), (1, 1.0)]).unwrap();
        assert_eq!(
            build_flow(
                &MonotoneProfile::TableDriven(t),
                Window::new((0, 2), (0, 0)),
                1.0
            ),
            Err(LatticeError::OutOfDomain(2))
        );
    }

    #[test]
    fn sampled_mode_is_seeded() {
        let f = build_flow(&MonotoneProfile::Arctan, Window::square(2), 0.5).unwrap();
        let a = verify_flow_with_limit(&f, 50, 9, 0);
        assert_eq!(
            a.mode,
            PairMode::Sampled {
                seed: 9,
                samples: 50
            }
        );
        assert_eq!(a.pairs_checked, 50);
        assert_eq!(a, verify_flow_with_limit(&f, 50, 9, 0));
        assert!(a.min_distance.unwrap().value >= 1.0 - 1e-9);
        let full = verify_flow(&f, 50);
        assert!(full.min_distance.unwrap().value <= a.min_distance.unwrap().value);
    }
}
