//! Counterexample search against universal separating fields.
//!
//! No bounded continuous `w` on the whole plane satisfies
//! `|<x-y, w(x)-w(y)>| > c |w(x)-w(y)|` for every pair with `|x-y| > 1`. This
//! module turns the ingredients of that fact into executable checks: the cones
//! `C_u`, the chaining of a long segment into pieces of length in `(1, 2]`, a
//! probe of field values at a large radius, and a search that exhibits a
//! violating pair for a concrete field.
//!
//! The search is heuristic. A returned [`FalsifyOutcome::Exhausted`] says the
//! budget ran out, nothing more.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Particle, Vec2};

/// Slack allowed when checking the closure of cones under addition.
pub const CONE_TOL: f64 = 1e-12;

/// Independent search slots; fixed so results do not depend on the thread pool.
pub const SEARCH_SLOTS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FalsifierError {
    #[error("cone axis is the zero vector")]
    ZeroAxis,
    #[error("cone aperture cosine must lie in (0, 1), got {0}")]
    BadAperture(f64),
    #[error("segment length {0} is not greater than 1")]
    DegenerateSegment(f64),
    #[error("invalid field: {0}")]
    BadField(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Cone aperture cosine `a = min(c/2, 1/2)` used for separation constant `c`.
pub fn aperture_for(c: f64) -> f64 {
    (c / 2.0).min(0.5)
}

/// Half-width `delta = arcsin a` of the forbidden angular band.
pub fn delta_for(aperture_cos: f64) -> f64 {
    aperture_cos.asin()
}

/// Closed convex cone `{z : <u, z> >= a |u| |z|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    axis: Vec2,
    aperture_cos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    /// `<u, z>/|u| - a |z|`; non-negative exactly for members.
    pub margin: f64,
    pub member: bool,
}

impl Cone {
    pub fn new(axis: Vec2, aperture_cos: f64) -> Result<Self, FalsifierError> {
        if axis.is_zero() || !axis.is_finite() {
            return Err(FalsifierError::ZeroAxis);
        }
        if !(aperture_cos > 0.0 && aperture_cos < 1.0) {
            return Err(FalsifierError::BadAperture(aperture_cos));
        }
        Ok(Self { axis, aperture_cos })
    }

    pub fn axis(&self) -> Vec2 {
        self.axis
    }

    pub fn aperture_cos(&self) -> f64 {
        self.aperture_cos
    }

    /// Largest angle from the axis admitted by the cone.
    pub fn half_angle(&self) -> f64 {
        self.aperture_cos.acos()
    }

    pub fn contains(&self, z: Vec2) -> ConeMembership {
        let margin = self.axis.dot(z) / self.axis.norm() - self.aperture_cos * z.norm();
        ConeMembership {
            margin,
            member: margin >= 0.0,
        }
    }
}

pub fn cone_contains(cone: &Cone, z: Vec2) -> ConeMembership {
    cone.contains(z)
}

/// Regular grid of field samples, bilinear inside and constant outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    origin: Vec2,
    spacing: (f64, f64),
    nx: usize,
    ny: usize,
    /// Row-major, first coordinate fastest.
    values: Vec<Vec2>,
}

impl GridField {
    pub fn new(
        origin: Vec2,
        spacing: (f64, f64),
        nx: usize,
        ny: usize,
        values: Vec<Vec2>,
    ) -> Result<Self, FalsifierError> {
        let bad = |m: &str| Err(FalsifierError::BadField(m.to_string()));
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return bad("grid size does not match value count");
        }
        if !(spacing.0 > 0.0 && spacing.1 > 0.0 && spacing.0.is_finite() && spacing.1.is_finite()) {
            return bad("grid spacing must be positive");
        }
        if !origin.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return bad("non-finite grid data");
        }
        Ok(Self {
            origin,
            spacing,
            nx,
            ny,
            values,
        })
    }

    /// Builds a grid from rows `(position, value)` that cover a full regular lattice.
    pub fn from_samples(rows: &[Particle]) -> Result<Self, FalsifierError> {
        let bad = |m: String| FalsifierError::BadField(m);
        let axis_values = |pick: fn(&Particle) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(pick).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let xs = axis_values(|p| p.position.x1);
        let ys = axis_values(|p| p.position.x2);
        if xs.is_empty() {
            return Err(bad("no grid samples".into()));
        }
        let spacing_of = |v: &[f64]| -> Result<f64, FalsifierError> {
            if v.len() < 2 {
                return Ok(1.0);
            }
            let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
            for (k, x) in v.iter().enumerate() {
                let expect = v[0] + h * k as f64;
                if (x - expect).abs() > 1e-9 * h.max(x.abs()) {
                    return Err(bad(format!("irregular grid coordinate {x}")));
                }
            }
            Ok(h)
        };
        let (hx, hy) = (spacing_of(&xs)?, spacing_of(&ys)?);
        let (nx, ny) = (xs.len(), ys.len());
        if rows.len() != nx * ny {
            return Err(bad(format!(
                "{} samples do not fill a {nx}x{ny} grid",
                rows.len()
            )));
        }
        let mut values = vec![None; nx * ny];
        for p in rows {
            let i = xs
                .binary_search_by(|x| x.total_cmp(&p.position.x1))
                .unwrap();
            let j = ys
                .binary_search_by(|y| y.total_cmp(&p.position.x2))
                .unwrap();
            if values[j * nx + i].replace(p.velocity).is_some() {
                return Err(bad(format!("duplicate grid node ({}, {})", xs[i], ys[j])));
            }
        }
        let values = values.into_iter().map(|v| v.unwrap()).collect();
        Self::new(Vec2::new(xs[0], ys[0]), (hx, hy), nx, ny, values)
    }

    pub fn bound(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn locate(t: f64, n: usize) -> (usize, f64) {
        if n == 1 {
            return (0, 0.0);
        }
        let t = t.clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        (i, t - i as f64)
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        let (i, fx) = Self::locate((x.x1 - self.origin.x1) / self.spacing.0, self.nx);
        let (j, fy) = Self::locate((x.x2 - self.origin.x2) / self.spacing.1, self.ny);
        let at =
            |a: usize, b: usize| self.values[b.min(self.ny - 1) * self.nx + a.min(self.nx - 1)];
        let bottom = at(i, j) * (1.0 - fx) + at(i + 1, j) * fx;
        let top = at(i, j + 1) * (1.0 - fx) + at(i + 1, j + 1) * fx;
        bottom * (1.0 - fy) + top * fy
    }
}

/// Bounded continuous candidate for a universal separating field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CandidateField {
    Constant {
        value: Vec2,
    },
    /// `bound * x / sqrt(scale^2 + |x|^2)`.
    SaturatedRadial {
        bound: f64,
        scale: f64,
    },
    /// `bound * I x / max(|x|, 1)`.
    Rotational {
        bound: f64,
    },
    /// `A x + b`, radially clamped to the ball of radius `bound`.
    ClampedLinear {
        matrix: [[f64; 2]; 2],
        offset: Vec2,
        bound: f64,
    },
    SampledGrid(GridField),
}

impl CandidateField {
    pub fn name(&self) -> &'static str {
        match self {
            CandidateField::Constant { .. } => "constant",
            CandidateField::SaturatedRadial { .. } => "saturated-radial",
            CandidateField::Rotational { .. } => "rotational",
            CandidateField::ClampedLinear { .. } => "clamped-linear",
            CandidateField::SampledGrid(_) => "grid",
        }
    }

    pub fn validate(&self) -> Result<(), FalsifierError> {
        let ok = |b: f64| b.is_finite() && b >= 0.0;
        let fine = match self {
            CandidateField::Constant { value } => value.is_finite(),
            CandidateField::SaturatedRadial { bound, scale } => {
                ok(*bound) && scale.is_finite() && *scale > 0.0
            }
            CandidateField::Rotational { bound } => ok(*bound),
            CandidateField::ClampedLinear {
                matrix,
                offset,
                bound,
            } => ok(*bound) && offset.is_finite() && matrix.iter().flatten().all(|m| m.is_finite()),
            CandidateField::SampledGrid(_) => true,
        };
        if fine {
            Ok(())
        } else {
            Err(FalsifierError::BadField(format!(
                "bad {} parameters",
                self.name()
            )))
        }
    }

    /// Supremum norm.
    pub fn bound(&self) -> f64 {
        match self {
            CandidateField::Constant { value } => value.norm(),
            CandidateField::SaturatedRadial { bound, .. }
            | CandidateField::Rotational { bound }
            | CandidateField::ClampedLinear { bound, .. } => *bound,
            CandidateField::SampledGrid(g) => g.bound(),
        }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        match self {
            CandidateField::Constant { value } => *value,
            CandidateField::SaturatedRadial { bound, scale } => {
                x * (*bound / (scale * scale + x.norm_sq()).sqrt())
            }
            CandidateField::Rotational { bound } => {
                x.rotate_quarter() * (*bound / x.norm().max(1.0))
            }
            CandidateField::ClampedLinear {
                matrix,
                offset,
                bound,
            } => {
                let y = Vec2::new(
                    matrix[0][0] * x.x1 + matrix[0][1] * x.x2,
                    matrix[1][0] * x.x1 + matrix[1][1] * x.x2,
                ) + *offset;
                let n = y.norm();
                if n <= *bound {
                    y
                } else {
                    y * (*bound / n)
                }
            }
            CandidateField::SampledGrid(g) => g.eval(x),
        }
    }
}

/// Subdivision count `n = ceil(L/2)` and piece length `L/n`.
pub fn chain_subdivision(length: f64) -> Result<(u64, f64), FalsifierError> {
    if length.is_nan() || length <= 1.0 || length.is_infinite() {
        return Err(FalsifierError::DegenerateSegment(length));
    }
    let n = (length / 2.0).ceil() as u64;
    Ok((n, length / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub length: f64,
    pub pieces: u64,
    pub piece_length: f64,
    /// Margin of `w(z_i) - w(z_{i+1})` in `C_{x-y}` per piece.
    pub increment_margins: Vec<f64>,
    pub all_increments_member: bool,
    /// Margin of `w(x) - w(y)`.
    pub total_margin: f64,
    pub total_member: bool,
    /// `|sum of increments - (w(x) - w(y))|`.
    pub telescoping_error: f64,
    /// All increments members implies the total is a member (up to `CONE_TOL`).
    pub implication_holds: bool,
}

/// Splits `x -> y` into `ceil(L/2)` equal pieces and tests every field
/// increment, and their sum, for membership in `C_{x-y}`.
pub fn chain_check(
    field: &CandidateField,
    x: Vec2,
    y: Vec2,
    aperture_cos: f64,
) -> Result<ChainReport, FalsifierError> {
    let length = (x - y).norm();
    let (n, piece_length) = chain_subdivision(length)?;
    let cone = Cone::new(x - y, aperture_cos)?;
    let point = |i: u64| {
        if i == 0 {
            x
        } else if i == n {
            y
        } else {
            x + (y - x) * (i as f64 / n as f64)
        }
    };
    let values: Vec<Vec2> = (0..=n).map(|i| field.eval(point(i))).collect();
    let mut sum = Vec2::ZERO;
    let increment_margins: Vec<f64> = values
        .windows(2)
        .map(|w| {
            let inc = w[0] - w[1];
            sum += inc;
            cone.contains(inc).margin
        })
        .collect();
    let total = values[0] - values[n as usize];
    let total_margin = cone.contains(total).margin;
    let all_increments_member = increment_margins.iter().all(|&m| m >= 0.0);
    Ok(ChainReport {
        length,
        pieces: n,
        piece_length,
        all_increments_member,
        increment_margins,
        total_margin,
        total_member: total_margin >= 0.0,
        telescoping_error: (sum - total).norm(),
        implication_holds: !all_increments_member
            || total_margin >= -CONE_TOL * (1.0 + total.norm()),
    })
}

/// Field difference data for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEval {
    pub x: Vec2,
    pub y: Vec2,
    /// `<x - y, w(x) - w(y)>`.
    pub inner: f64,
    pub dw_norm: f64,
    /// `c |dw| - |inner|`; non-negative means the strict inequality fails.
    pub margin: f64,
    /// `|inner| / |dw|`, or 0 when `dw = 0`.
    pub quotient: f64,
}

impl PairEval {
    pub fn violated(&self) -> bool {
        self.margin >= 0.0
    }
}

pub fn evaluate_pair(field: &CandidateField, x: Vec2, y: Vec2, c: f64) -> PairEval {
    let dw = field.eval(x) - field.eval(y);
    let inner = (x - y).dot(dw);
    let dw_norm = dw.norm();
    PairEval {
        x,
        y,
        inner,
        dw_norm,
        margin: c * dw_norm - inner.abs(),
        quotient: if dw_norm == 0.0 {
            0.0
        } else {
            inner.abs() / dw_norm
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchRoute {
    Structured,
    Random,
    Refined,
    /// Located by bisection between pairs of opposite inner-product sign.
    Bisection,
}

/// Two admissible pairs on which `<x-y, w(x)-w(y)>` has opposite signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignWitness {
    pub positive: (Vec2, Vec2),
    pub negative: (Vec2, Vec2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub x: Vec2,
    pub y: Vec2,
    pub distance: f64,
    /// `c |dw| - |<x-y, dw>|`; positive means violated, zero when `dw = 0`.
    pub margin: f64,
    pub inner: f64,
    pub dw_norm: f64,
    pub c: f64,
    pub route: SearchRoute,
    pub evaluations_used: u64,
    pub sign_change: Option<SignWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustedReport {
    pub best: Option<PairEval>,
    pub c: f64,
    pub evaluations_used: u64,
    pub sign_change: Option<SignWitness>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum FalsifyOutcome {
    Violation(ViolationReport),
    Exhausted(ExhaustedReport),
}

impl FalsifyOutcome {
    pub fn violation(&self) -> Option<&ViolationReport> {
        match self {
            FalsifyOutcome::Violation(v) => Some(v),
            FalsifyOutcome::Exhausted(_) => None,
        }
    }

    pub fn evaluations_used(&self) -> u64 {
        match self {
            FalsifyOutcome::Violation(v) => v.evaluations_used,
            FalsifyOutcome::Exhausted(e) => e.evaluations_used,
        }
    }
}

/// Re-evaluates the field at a reported pair.
pub fn recompute_margin(field: &CandidateField, x: Vec2, y: Vec2, c: f64) -> f64 {
    evaluate_pair(field, x, y, c).margin
}

/// Bookkeeping for one search lane: evaluation budget, best pair, signs seen.
struct Lane<'a> {
    field: &'a CandidateField,
    c: f64,
    budget: u64,
    used: u64,
    best: Option<PairEval>,
    positive: Option<(Vec2, Vec2)>,
    negative: Option<(Vec2, Vec2)>,
}

enum Step {
    Found(PairEval),
    Continue(PairEval),
    OutOfBudget,
}

impl<'a> Lane<'a> {
    fn new(field: &'a CandidateField, c: f64, budget: u64) -> Self {
        Self {
            field,
            c,
            budget,
            used: 0,
            best: None,
            positive: None,
            negative: None,
        }
    }

    fn probe(&mut self, x: Vec2, y: Vec2) -> Step {
        if self.used + 2 > self.budget {
            return Step::OutOfBudget;
        }
        if (x - y).norm() <= 1.0 || (x - y).norm().is_nan() || !x.is_finite() || !y.is_finite() {
            return Step::Continue(PairEval {
                x,
                y,
                inner: f64::NAN,
                dw_norm: f64::NAN,
                margin: f64::NEG_INFINITY,
                quotient: f64::INFINITY,
            });
        }
        self.used += 2;
        let e = evaluate_pair(self.field, x, y, self.c);
        if e.inner > 0.0 && self.positive.is_none() {
            self.positive = Some((x, y));
        } else if e.inner < 0.0 && self.negative.is_none() {
            self.negative = Some((x, y));
        }
        if self.best.is_none_or(|b| e.quotient < b.quotient) {
            self.best = Some(e);
        }
        if e.violated() {
            Step::Found(e)
        } else {
            Step::Continue(e)
        }
    }

    fn sign_witness(&self) -> Option<SignWitness> {
        Some(SignWitness {
            positive: self.positive?,
            negative: self.negative?,
        })
    }
}

fn structured_pairs(max_log2_radius: i32, directions: usize) -> Vec<(Vec2, Vec2)> {
    let mut out = Vec::new();
    let chord = 1.5;
    for k in 1..=max_log2_radius {
        let r = 2f64.powi(k);
        for d in 0..directions {
            let theta = TAU * d as f64 / directions as f64;
            let u = Vec2::from_polar(1.0, theta);
            let x = u * r;
            out.push((x, -x));
            out.push((x, u * (2.0 * r)));
            for s in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
                for sign in [1.0, -1.0] {
                    if s == 0.0 && sign < 0.0 {
                        continue;
                    }
                    let psi = sign * s / r;
                    let dir = Vec2::from_polar(1.0, theta + psi);
                    out.push((x, x + dir * chord));
                }
            }
            out.push((x, x + u.rotate_quarter() * chord));
        }
    }
    out
}

/// Continuous path between two admissible pairs that stays in `|x - y| > 1`:
/// the midpoint moves linearly, the difference vector in polar coordinates.
fn pair_path(a: (Vec2, Vec2), b: (Vec2, Vec2), s: f64) -> (Vec2, Vec2) {
    let (ma, da) = ((a.0 + a.1) * 0.5, a.0 - a.1);
    let (mb, db) = ((b.0 + b.1) * 0.5, b.0 - b.1);
    let m = ma * (1.0 - s) + mb * s;
    let r = da.norm() * (1.0 - s) + db.norm() * s;
    let mut turn = (db.angle() - da.angle()).rem_euclid(TAU);
    if turn > PI {
        turn -= TAU;
    }
    let d = Vec2::from_polar(r, da.angle() + turn * s);
    (m + d * 0.5, m - d * 0.5)
}

/// Bisects the inner-product sign along [`pair_path`].
fn bisect_sign(lane: &mut Lane, w: SignWitness) -> Option<PairEval> {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (x, y) = pair_path(w.positive, w.negative, mid);
        match lane.probe(x, y) {
            Step::Found(e) => return Some(e),
            Step::OutOfBudget => return None,
            Step::Continue(e) => {
                if e.inner.is_nan() {
                    return None;
                }
                if e.inner > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }
    None
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Vec2, Vec2) {
    let r = 10f64.powf(rng.gen_range(0.0..6.0));
    let x = Vec2::from_polar(r, rng.gen_range(0.0..TAU));
    let len = if rng.gen_bool(0.75) {
        rng.gen_range(1.0..2.0) + 1e-9
    } else {
        10f64.powf(rng.gen_range(0.0..6.0)) + 1.0
    };
    (x, x + Vec2::from_polar(len, rng.gen_range(0.0..TAU)))
}

/// Compass search on `(x, y)` minimizing the separation quotient.
fn refine(lane: &mut Lane, start: PairEval, max_evals: u64) -> Option<PairEval> {
    let mut cur = start;
    let mut step = 0.25 * cur.x.norm().max(cur.y.norm()).max(1.0);
    let floor = 1e-9 * step;
    let stop_at = lane.used + max_evals;
    while step > floor && lane.used < stop_at {
        let mut improved = false;
        for k in 0..8 {
            let delta = if k % 2 == 0 { step } else { -step };
            let (mut x, mut y) = (cur.x, cur.y);
            match k / 2 {
                0 => x.x1 += delta,
                1 => x.x2 += delta,
                2 => y.x1 += delta,
                _ => y.x2 += delta,
            }
            match lane.probe(x, y) {
                Step::Found(e) => return Some(e),
                Step::OutOfBudget => return None,
                Step::Continue(e) => {
                    if e.quotient < cur.quotient {
                        cur = e;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    None
}

struct SlotResult {
    found: Option<(PairEval, SearchRoute)>,
    used: u64,
    best: Option<PairEval>,
    positive: Option<(Vec2, Vec2)>,
    negative: Option<(Vec2, Vec2)>,
}

fn run_slot(
    field: &CandidateField,
    c: f64,
    budget: u64,
    seed: u64,
    prior: Option<SignWitness>,
) -> SlotResult {
    let mut lane = Lane::new(field, c, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = None;
    let mut bisected = false;
    const ROUND: u64 = 256;
    'search: loop {
        let mut round_best: Option<PairEval> = None;
        for _ in 0..ROUND {
            let (x, y) = random_pair(&mut rng);
            match lane.probe(x, y) {
                Step::Found(e) => {
                    found = Some((e, SearchRoute::Random));
                    break 'search;
                }
                Step::OutOfBudget => break 'search,
                Step::Continue(e) => {
                    if e.quotient.is_finite() && round_best.is_none_or(|b| e.quotient < b.quotient)
                    {
                        round_best = Some(e);
                    }
                }
            }
        }
        if !bisected {
            let w = lane.sign_witness().or(prior);
            if let Some(w) = w {
                bisected = true;
                if let Some(e) = bisect_sign(&mut lane, w) {
                    found = Some((e, SearchRoute::Bisection));
                    break;
                }
            }
        }
        if let Some(b) = round_best {
            if let Some(e) = refine(&mut lane, b, 4 * ROUND) {
                found = Some((e, SearchRoute::Refined));
                break;
            }
        }
        if lane.used + 2 > lane.budget {
            break;
        }
    }
    SlotResult {
        found,
        used: lane.used,
        best: lane.best,
        positive: lane.positive,
        negative: lane.negative,
    }
}

fn slot_seed(seed: u64, slot: u64) -> u64 {
    seed ^ (slot + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Searches for a pair with `|x - y| > 1` and `|<x-y, dw>| <= c |dw|`.
///
/// Structured probes at growing radii come first, then seeded random pairs
/// with compass refinement, split across [`SEARCH_SLOTS`] independent slots.
/// The reported violation is the structured one, or else the one from the
/// lowest-numbered slot that found any.
pub fn falsify(
    field: &CandidateField,
    c: f64,
    budget: u64,
    seed: u64,
) -> Result<FalsifyOutcome, FalsifierError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(FalsifierError::InvalidArgument(format!(
            "c must be positive, got {c}"
        )));
    }
    if budget == 0 {
        return Err(FalsifierError::InvalidArgument(
            "budget must be at least 1".into(),
        ));
    }
    field.validate()?;

    let mut lane = Lane::new(field, c, budget);
    let mut structured_hit = None;
    for (x, y) in structured_pairs(40, 16) {
        match lane.probe(x, y) {
            Step::Found(e) => {
                structured_hit = Some((e, SearchRoute::Structured));
                break;
            }
            Step::OutOfBudget => break,
            Step::Continue(_) => {}
        }
    }
    if structured_hit.is_none() {
        if let Some(w) = lane.sign_witness() {
            if let Some(e) = bisect_sign(&mut lane, w) {
                structured_hit = Some((e, SearchRoute::Bisection));
            }
        }
    }
    let mut used = lane.used;
    let mut best = lane.best;
    let mut positive = lane.positive;
    let mut negative = lane.negative;

    let found = if structured_hit.is_some() {
        structured_hit
    } else {
        let remaining = budget.saturating_sub(used);
        let per_slot = remaining / SEARCH_SLOTS;
        let prior = lane.sign_witness();
        let slots: Vec<SlotResult> = (0..SEARCH_SLOTS)
            .into_par_iter()
            .map(|s| run_slot(field, c, per_slot, slot_seed(seed, s), prior))
            .collect();
        let mut hit = None;
        for s in slots {
            used += s.used;
            if best.is_none_or(|b| s.best.is_some_and(|e| e.quotient < b.quotient)) {
                best = s.best.or(best);
            }
            positive = positive.or(s.positive);
            negative = negative.or(s.negative);
            if hit.is_none() {
                hit = s.found;
            }
        }
        hit
    };

    let sign_change = positive.zip(negative).map(|(p, n)| SignWitness {
        positive: p,
        negative: n,
    });
    Ok(match found {
        Some((e, route)) => FalsifyOutcome::Violation(ViolationReport {
            x: e.x,
            y: e.y,
            distance: (e.x - e.y).norm(),
            margin: e.margin,
            inner: e.inner,
            dw_norm: e.dw_norm,
            c,
            route,
            evaluations_used: used,
            sign_change,
        }),
        None => FalsifyOutcome::Exhausted(ExhaustedReport {
            best,
            c,
            evaluations_used: used,
            sign_change,
            note: "search budget exhausted; this is not evidence that the field separates".into(),
        }),
    })
}

/// Distance on the circle `R / 2 pi Z`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Largest number of directions with pairwise circular distance at least `2 delta`.
pub fn max_separated_directions(delta: f64) -> u64 {
    (PI / delta).floor() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCluster {
    pub value: Vec2,
    pub count: usize,
    /// Circular mean of the sample directions in this cluster.
    pub direction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub radius: f64,
    pub samples: usize,
    pub clusters: Vec<ValueCluster>,
    /// `(i, j, circular distance of cluster directions)`.
    pub separations: Vec<(usize, usize, f64)>,
    pub min_separation: Option<f64>,
    /// `2 arcsin a`.
    pub theoretical_floor: f64,
    pub note: String,
}

/// Clusters of `w` values on the circle of the given radius and the angular
/// spread of where they occur.
///
/// Values join the first cluster whose representative lies within a relative
/// tolerance; clusters holding fewer than 2% of the samples are dropped as
/// transition values. Diagnostic only: a finite sample says nothing certain
/// about limits at infinity.
pub fn angular_separation_probe(
    field: &CandidateField,
    radius: f64,
    samples: usize,
    aperture_cos: f64,
) -> Result<ProbeReport, FalsifierError> {
    if !(radius > 1.0 && radius.is_finite()) {
        return Err(FalsifierError::InvalidArgument(format!(
            "radius must exceed 1, got {radius}"
        )));
    }
    if samples < 2 {
        return Err(FalsifierError::InvalidArgument(
            "need at least two samples".into(),
        ));
    }
    if !(aperture_cos > 0.0 && aperture_cos < 1.0) {
        return Err(FalsifierError::BadAperture(aperture_cos));
    }
    let tol = 1e-6 * field.bound().max(1e-300);
    let min_count = (samples / 50).max(1);

    struct Acc {
        rep: Vec2,
        count: usize,
        sin: f64,
        cos: f64,
    }
    let mut acc: Vec<Acc> = Vec::new();
    for k in 0..samples {
        let theta = TAU * k as f64 / samples as f64;
        let v = field.eval(Vec2::from_polar(radius, theta));
        let slot = acc.iter_mut().find(|a| (a.rep - v).norm() <= tol);
        match slot {
            Some(a) => {
                a.count += 1;
                a.sin += theta.sin();
                a.cos += theta.cos();
            }
            None => acc.push(Acc {
                rep: v,
                count: 1,
                sin: theta.sin(),
                cos: theta.cos(),
            }),
        }
    }
    let clusters: Vec<ValueCluster> = acc
        .into_iter()
        .filter(|a| a.count >= min_count)
        .map(|a| ValueCluster {
            value: a.rep,
            count: a.count,
            direction: a.sin.atan2(a.cos),
        })
        .collect();
    let mut separations = Vec::new();
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            separations.push((
                i,
                j,
                circular_distance(clusters[i].direction, clusters[j].direction),
            ));
        }
    }
    let min_separation = separations.iter().map(|s| s.2).reduce(f64::min);
    let note = if clusters.len() < 2 {
        "fewer than two value clusters; no angular constraint applies".to_string()
    } else {
        "empirical directions of distinct value clusters; diagnostic only".to_string()
    };
    Ok(ProbeReport {
        radius,
        samples,
        clusters,
        separations,
        min_separation,
        theoretical_floor: 2.0 * delta_for(aperture_cos),
        note,
    })
}
