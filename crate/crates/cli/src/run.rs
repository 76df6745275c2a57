//! Executes one configured command and writes its artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use discflow::evolution::{snapshot_series, verify_hardcore, ConfigError, MovingConfiguration};
use discflow::falsifier::{falsify, CandidateField, FalsifierError, FalsifyOutcome, GridField};
use discflow::formats::{
    falsify_doc, flow_doc, frame_svg, hardcore_doc, parse_particles, scene_doc, square_viewport,
    write_frames_csv, write_particles, FormatError, ReportDoc,
};
use discflow::lattice::{
    build_flow, verify_flow_seeded, FlowAssignment, LatticeError, MonotoneProfile, ProfileTable,
};
use discflow::spacetime::{export_scene, max_safe_radius, verify_scene, CylinderScene, SceneError};
use discflow::Vec2;
use thiserror::Error;

use crate::config::{Command, FieldSpec, ProfileSpec, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Input problems; all map to exit status 2.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: line {line}: {msg}")]
    Table {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Configuration(#[from] ConfigError),
    #[error(transparent)]
    Falsifier(#[from] FalsifierError),
    #[error(transparent)]
    Scene(SceneError),
    #[error("{0}")]
    Evolution(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let io_err = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn report(&mut self, doc: &ReportDoc) -> Result<(), RunError> {
        self.put("report.txt", &doc.to_text())?;
        self.put("report.json", &doc.to_json())
    }
}

/// `n,value` lines; `#` starts a comment.
pub fn load_profile_table(path: &Path) -> Result<ProfileTable, RunError> {
    let text = read(path)?;
    let mut entries = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| RunError::Table {
            path: path.to_path_buf(),
            line: k + 1,
            msg,
        };
        let (n, v) = line
            .split_once(',')
            .ok_or_else(|| bad("expected `n,value`".into()))?;
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|e| bad(format!("`{}`: {e}", n.trim())))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| bad(format!("`{}`: {e}", v.trim())))?;
        entries.push((n, v));
    }
    Ok(ProfileTable::new(entries)?)
}

fn profile_of(spec: &ProfileSpec) -> Result<MonotoneProfile, RunError> {
    Ok(match spec {
        ProfileSpec::Arctan => MonotoneProfile::Arctan,
        ProfileSpec::Tanh => MonotoneProfile::Tanh,
        ProfileSpec::Rational => MonotoneProfile::RationalSaturating,
        ProfileSpec::Table(path) => MonotoneProfile::TableDriven(load_profile_table(path)?),
    })
}

pub fn field_of(cfg: &RunConfig) -> Result<CandidateField, RunError> {
    let [a, b, c, d] = cfg.field_matrix;
    let field = match &cfg.field {
        FieldSpec::Constant => CandidateField::Constant {
            value: Vec2::new(cfg.field_value[0], cfg.field_value[1]),
        },
        FieldSpec::SaturatedRadial => CandidateField::SaturatedRadial {
            bound: cfg.field_bound,
            scale: cfg.field_scale,
        },
        FieldSpec::Rotational => CandidateField::Rotational {
            bound: cfg.field_bound,
        },
        FieldSpec::ClampedLinear => CandidateField::ClampedLinear {
            matrix: [[a, b], [c, d]],
            offset: Vec2::new(cfg.field_offset[0], cfg.field_offset[1]),
            bound: cfg.field_bound,
        },
        FieldSpec::Grid(path) => {
            let rows = parse_particles(&read(path)?).map_err(|source| RunError::Format {
                path: path.clone(),
                source,
            })?;
            CandidateField::SampledGrid(GridField::from_samples(&rows)?)
        }
    };
    field.validate()?;
    Ok(field)
}

/// The configuration under study: the input file if given, else the lattice flow.
struct Subject {
    config: MovingConfiguration,
    flow: Option<FlowAssignment>,
    disk_radius: f64,
}

fn subject(cfg: &RunConfig) -> Result<Subject, RunError> {
    match &cfg.input {
        Some(path) => {
            let particles = parse_particles(&read(path)?).map_err(|source| RunError::Format {
                path: path.clone(),
                source,
            })?;
            let config = MovingConfiguration::new(particles, cfg.discreteness)?;
            Ok(Subject {
                config,
                flow: None,
                disk_radius: cfg.radius.unwrap_or(cfg.threshold / 2.0 * (1.0 - 1e-9)),
            })
        }
        None => {
            let flow = build_flow(&profile_of(&cfg.profile)?, cfg.window, cfg.shift_margin)?;
            let config = MovingConfiguration::new(flow.particles.clone(), 1.0)?;
            Ok(Subject {
                config,
                disk_radius: cfg.radius.unwrap_or(flow.disk_radius),
                flow: Some(flow),
            })
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut out = Writer::new(&cfg.out)?;
    let (exit_code, summary) = match cfg.command {
        Command::Assign => {
            let flow = build_flow(&profile_of(&cfg.profile)?, cfg.window, cfg.shift_margin)?;
            out.put("particles.txt", &write_particles(&flow.particles))?;
            (
                EXIT_PASS,
                format!(
                    "assigned {} particles, speeds in [{}, {}]",
                    flow.particles.len(),
                    flow.speed_min,
                    flow.speed_max
                ),
            )
        }
        Command::Verify => {
            let s = subject(cfg)?;
            let hc = verify_hardcore(&s.config, cfg.threshold);
            let mut doc = hardcore_doc(&hc);
            let mut passed = hc.passed;
            if let Some(flow) = &s.flow {
                let fr = verify_flow_seeded(flow, cfg.sample_budget, cfg.seed);
                passed &= fr.chain_failures == 0 && fr.injective;
                doc.extend("flow.", &flow_doc(&fr));
            }
            doc.push("verdict", if passed { "pass" } else { "fail" });
            out.report(&doc)?;
            let summary = match hc.witness_pair {
                Some((i, j)) => format!(
                    "{}: minimum all-time distance {} at pair ({i}, {j})",
                    if passed { "pass" } else { "fail" },
                    hc.min_alltime_distance
                ),
                None => "pass: fewer than two particles".to_string(),
            };
            (if passed { EXIT_PASS } else { EXIT_FAIL }, summary)
        }
        Command::Evolve => {
            let s = subject(cfg)?;
            let frames = snapshot_series(&s.config, cfg.t0, cfg.t1, cfg.frames)
                .map_err(|e| RunError::Evolution(e.to_string()))?;
            out.put("frames.csv", &write_frames_csv(&frames))?;
            if cfg.svg {
                let initial: Vec<Vec2> = s.config.particles().iter().map(|p| p.position).collect();
                let pad = s.config.max_speed() * cfg.t0.abs().max(cfg.t1.abs()) + s.disk_radius;
                let viewport = square_viewport(&initial, pad);
                for f in &frames {
                    out.put(
                        &format!("frame_{:04}.svg", f.index),
                        &frame_svg(f, viewport, s.disk_radius),
                    )?;
                }
            }
            (EXIT_PASS, format!("wrote {} frames", frames.len()))
        }
        Command::Cylinders => {
            let s = subject(cfg)?;
            let radius = cfg
                .radius
                .unwrap_or_else(|| max_safe_radius(s.config.max_speed()));
            let report = match verify_scene(&s.config, radius) {
                Ok(r) => r,
                Err(SceneError::HardCoreNotVerified(d)) => {
                    let mut doc = hardcore_doc(&verify_hardcore(&s.config, 1.0));
                    doc.push("verdict", "fail");
                    out.report(&doc)?;
                    let summary = format!("fail: hard-core condition fails, minimum distance {d}");
                    return Ok(RunOutcome {
                        exit_code: EXIT_FAIL,
                        artifacts: out.artifacts,
                        summary,
                    });
                }
                Err(e) => return Err(RunError::Scene(e)),
            };
            out.put(
                "scene.txt",
                &export_scene(&CylinderScene::from_config(&s.config, radius)),
            )?;
            out.report(&scene_doc(&report))?;
            (
                if report.passed { EXIT_PASS } else { EXIT_FAIL },
                format!(
                    "{}: {} cylinders of radius {}, minimum axis distance {}",
                    if report.passed { "pass" } else { "fail" },
                    report.cylinder_count,
                    radius,
                    report.min_worldline_distance
                ),
            )
        }
        Command::Falsify => {
            let field = field_of(cfg)?;
            let outcome = falsify(&field, cfg.c, cfg.budget, cfg.seed)?;
            out.report(&falsify_doc(field.name(), &outcome))?;
            match outcome {
                FalsifyOutcome::Violation(v) => (
                    EXIT_PASS,
                    format!(
                        "violation: x = ({}, {}), y = ({}, {}), margin {}",
                        v.x.x1, v.x.x2, v.y.x1, v.y.x2, v.margin
                    ),
                ),
                FalsifyOutcome::Exhausted(e) => (
                    EXIT_FAIL,
                    format!("exhausted after {} evaluations", e.evaluations_used),
                ),
            }
        }
    };
    Ok(RunOutcome {
        exit_code,
        artifacts: out.artifacts,
        summary,
    })
}
