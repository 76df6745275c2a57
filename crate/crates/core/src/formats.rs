//! Text formats: particle lists, frame CSV, SVG snapshots and `report v1`
//! documents.
//!
//! Floats that must survive a round trip are written with 17 significant
//! digits. Reports are flat ordered key/value documents, emitted both as
//! `key = <json value>` lines and as a JSON object.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::evolution::{Frame, HardCoreReport};
use crate::falsifier::{FalsifyOutcome, ProbeReport};
use crate::geometry::{ApproachTime, Particle, Vec2};
use crate::lattice::{FlowReport, PairMode};
use crate::spacetime::SceneReport;

pub const PARTICLES_HEADER: &str = "particles v1";
pub const REPORT_SCHEMA: &str = "report v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("missing `{0}` header")]
    MissingHeader(&'static str),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("json: {0}")]
    Json(String),
}

/// Shortest exact decimal would also round-trip; fixed 17 digits keeps files diffable.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_particles(particles: &[Particle]) -> String {
    let mut out = String::with_capacity(80 * (particles.len() + 1));
    out.push_str(PARTICLES_HEADER);
    out.push('\n');
    for p in particles {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt17(p.position.x1),
            fmt17(p.position.x2),
            fmt17(p.velocity.x1),
            fmt17(p.velocity.x2)
        );
    }
    out
}

pub fn parse_particles(text: &str) -> Result<Vec<Particle>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PARTICLES_HEADER => {}
        _ => return Err(FormatError::MissingHeader(PARTICLES_HEADER)),
    }
    let mut out = Vec::new();
    for (k, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| FormatError::Line { line: k + 1, msg };
        let vals = line
            .split(',')
            .map(|f| {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|e| err(format!("`{}`: {e}", f.trim())))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(format!("non-finite value `{}`", f.trim())))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != 4 {
            return Err(err(format!(
                "expected 4 fields x1,x2,v1,v2, found {}",
                vals.len()
            )));
        }
        out.push(Particle::new(
            Vec2::new(vals[0], vals[1]),
            Vec2::new(vals[2], vals[3]),
        ));
    }
    Ok(out)
}

/// `frame,t,index,x1,x2` rows for every particle of every frame.
pub fn write_frames_csv(frames: &[Frame]) -> String {
    let mut out = String::from("frame,t,index,x1,x2\n");
    for f in frames {
        for (i, p) in f.positions.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                f.index,
                fmt17(f.t),
                i,
                fmt17(p.x1),
                fmt17(p.x2)
            );
        }
    }
    out
}

/// Square viewport `(min_x, min_y, side)` covering `positions` padded by `pad`.
pub fn square_viewport(positions: &[Vec2], pad: f64) -> (f64, f64, f64) {
    let (mut lo, mut hi) = (
        Vec2::new(f64::INFINITY, f64::INFINITY),
        Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in positions {
        lo = Vec2::new(lo.x1.min(p.x1), lo.x2.min(p.x2));
        hi = Vec2::new(hi.x1.max(p.x1), hi.x2.max(p.x2));
    }
    if positions.is_empty() {
        lo = Vec2::ZERO;
        hi = Vec2::ZERO;
    }
    let side = (hi.x1 - lo.x1).max(hi.x2 - lo.x2) + 2.0 * pad;
    let side = if side > 0.0 { side } else { 1.0 };
    let cx = 0.5 * (lo.x1 + hi.x1);
    let cy = 0.5 * (lo.x2 + hi.x2);
    (cx - side / 2.0, cy - side / 2.0, side)
}

/// One frame as SVG with disks of the given radius. The y axis points up.
pub fn frame_svg(frame: &Frame, viewport: (f64, f64, f64), radius: f64) -> String {
    let (x0, y0, side) = viewport;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">",
        x0,
        -(y0 + side),
        side,
        side
    );
    let _ = writeln!(out, "<title>t = {}</title>", fmt17(frame.t));
    let _ = writeln!(
        out,
        "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"white\"/>",
        x0,
        -(y0 + side),
        side,
        side
    );
    for p in &frame.positions {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\" fill=\"steelblue\" fill-opacity=\"0.6\"/>",
            p.x1, -p.x2, radius
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Ordered flat key/value report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDoc {
    entries: Vec<(String, Value)>,
}

fn num(x: f64) -> Value {
    Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn pair(p: (usize, usize)) -> Value {
    Value::Array(vec![p.0.into(), p.1.into()])
}

fn vec2(v: Vec2) -> Value {
    Value::Array(vec![num(v.x1), num(v.x2)])
}

fn opt<T>(x: Option<T>, f: impl FnOnce(T) -> Value) -> Value {
    x.map_or(Value::Null, f)
}

impl ReportDoc {
    pub fn new(kind: &str) -> Self {
        let mut d = Self::default();
        d.push("schema", REPORT_SCHEMA);
        d.push("kind", kind);
        d
    }

    pub fn push(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    /// Non-finite values are written as `null`.
    pub fn push_f64(&mut self, key: &str, x: f64) -> &mut Self {
        self.push(key, num(x))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn extend(&mut self, prefix: &str, other: &ReportDoc) {
        for (k, v) in &other.entries {
            if k == "schema" || k == "kind" {
                continue;
            }
            self.entries.push((format!("{prefix}{k}"), v.clone()));
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(REPORT_SCHEMA);
        out.push('\n');
        for (k, v) in &self.entries {
            if k == "schema" {
                continue;
            }
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        let mut s =
            serde_json::to_string_pretty(&Value::Object(map)).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == REPORT_SCHEMA => {}
            _ => return Err(FormatError::MissingHeader(REPORT_SCHEMA)),
        }
        let mut doc = ReportDoc::default();
        doc.push("schema", REPORT_SCHEMA);
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| FormatError::Line { line: k + 1, msg };
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let value: Value = serde_json::from_str(value).map_err(|e| err(e.to_string()))?;
            doc.entries.push((key.to_string(), value));
        }
        Ok(doc)
    }

    pub fn parse_json(text: &str) -> Result<Self, FormatError> {
        let v: Value = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
        let Value::Object(map) = v else {
            return Err(FormatError::Json("top level is not an object".into()));
        };
        if map.get("schema").and_then(Value::as_str) != Some(REPORT_SCHEMA) {
            return Err(FormatError::MissingHeader(REPORT_SCHEMA));
        }
        Ok(Self {
            entries: map.into_iter().collect(),
        })
    }
}

fn approach_time(t: ApproachTime) -> Value {
    match t {
        ApproachTime::At(t) => num(t),
        ApproachTime::AllTimes => "all-times".into(),
    }
}

pub fn hardcore_doc(r: &HardCoreReport) -> ReportDoc {
    let mut d = ReportDoc::new("hardcore");
    d.push(
        "scope",
        "finite window: conclusions cover the listed particles only",
    )
    .push("particle_count", r.particle_count)
    .push("pair_count", r.pair_count)
    .push_f64("min_alltime_distance", r.min_alltime_distance)
    .push("witness_pair", opt(r.witness_pair, pair))
    .push("witness_time", opt(r.witness_time, approach_time))
    .push_f64("threshold", r.threshold)
    .push_f64("margin", r.margin)
    .push("passed", r.passed);
    d
}

pub fn flow_doc(r: &FlowReport) -> ReportDoc {
    let mut d = ReportDoc::new("flow");
    let (mode, seed, samples) = match r.mode {
        PairMode::Exhaustive => ("exhaustive", Value::Null, Value::Null),
        PairMode::Sampled { seed, samples } => ("sampled", seed.into(), samples.into()),
    };
    d.push("particle_count", r.particle_count)
        .push("pair_count", r.pair_count)
        .push("pairs_checked", r.pairs_checked)
        .push("pair_mode", mode)
        .push("seed", seed)
        .push("samples", samples)
        .push("min_distance", opt(r.min_distance, |m| num(m.value)))
        .push(
            "min_distance_pair",
            opt(r.min_distance, |m| pair((m.i, m.j))),
        )
        .push("chain_inner_minus_sum", opt(r.chain_inner_minus_sum, num))
        .push("chain_sum_minus_norm", opt(r.chain_sum_minus_norm, num))
        .push("chain_failures", r.chain_failures)
        .push("injective", r.injective)
        .push(
            "duplicate_velocities",
            Value::Array(r.duplicate_velocities.iter().copied().map(pair).collect()),
        )
        .push_f64("speed_min", r.speed_min)
        .push_f64("speed_max", r.speed_max);
    d
}

pub fn scene_doc(r: &SceneReport) -> ReportDoc {
    let mut d = ReportDoc::new("cylinders");
    d.push("cylinder_count", r.cylinder_count)
        .push_f64("radius", r.radius)
        .push_f64("speed_min", r.speed_min)
        .push_f64("speed_max", r.speed_max)
        .push_f64("worldline_bound", r.worldline_bound)
        .push_f64("required_distance", r.required_distance)
        .push_f64("min_worldline_distance", r.min_worldline_distance)
        .push("witness_pair", opt(r.witness_pair, pair))
        .push_f64("distance_margin", r.distance_margin)
        .push("distances_ok", r.distances_ok)
        .push("nonparallel", r.nonparallel)
        .push(
            "parallel_pairs",
            Value::Array(r.parallel_pairs.iter().copied().map(pair).collect()),
        )
        .push("direction_test_agrees", r.direction_test_agrees)
        .push_f64("annulus_angle_min", r.annulus_angle_min)
        .push_f64("annulus_angle_max", r.annulus_angle_max)
        .push("annulus_by_angle", r.annulus.by_angle)
        .push("annulus_by_speed", r.annulus.by_speed)
        .push_f64("hardcore_min_distance", r.hardcore_min_distance)
        .push("passed", r.passed);
    d
}

pub fn falsify_doc(field: &str, outcome: &FalsifyOutcome) -> ReportDoc {
    let mut d = ReportDoc::new("falsify");
    d.push("field", field);
    let sign = |s: Option<crate::falsifier::SignWitness>| {
        opt(s, |w| {
            Value::Array(vec![
                vec2(w.positive.0),
                vec2(w.positive.1),
                vec2(w.negative.0),
                vec2(w.negative.1),
            ])
        })
    };
    match outcome {
        FalsifyOutcome::Violation(v) => {
            d.push("outcome", "violation")
                .push_f64("c", v.c)
                .push("x", vec2(v.x))
                .push("y", vec2(v.y))
                .push_f64("distance", v.distance)
                .push_f64("margin", v.margin)
                .push_f64("inner", v.inner)
                .push_f64("dw_norm", v.dw_norm)
                .push("dw_zero", v.dw_norm == 0.0)
                .push(
                    "route",
                    serde_json::to_value(v.route).expect("route serializes"),
                )
                .push("evaluations_used", v.evaluations_used)
                .push("sign_change", sign(v.sign_change));
        }
        FalsifyOutcome::Exhausted(e) => {
            d.push("outcome", "exhausted")
                .push_f64("c", e.c)
                .push("best_x", opt(e.best, |b| vec2(b.x)))
                .push("best_y", opt(e.best, |b| vec2(b.y)))
                .push("best_quotient", opt(e.best, |b| num(b.quotient)))
                .push("evaluations_used", e.evaluations_used)
                .push("sign_change", sign(e.sign_change))
                .push("note", e.note.as_str());
        }
    }
    d
}

pub fn probe_doc(r: &ProbeReport) -> ReportDoc {
    let mut d = ReportDoc::new("angular-probe");
    d.push_f64("radius", r.radius)
        .push("samples", r.samples)
        .push(
            "cluster_values",
            Value::Array(r.clusters.iter().map(|c| vec2(c.value)).collect()),
        )
        .push(
            "cluster_counts",
            Value::Array(r.clusters.iter().map(|c| c.count.into()).collect()),
        )
        .push(
            "cluster_directions",
            Value::Array(r.clusters.iter().map(|c| num(c.direction)).collect()),
        )
        .push("min_separation", opt(r.min_separation, num))
        .push_f64("theoretical_floor", r.theoretical_floor)
        .push("note", r.note.as_str());
    d
}
