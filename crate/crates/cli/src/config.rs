//! Flat `key = value` run configuration.
//!
//! Keys may use `-` or `_`. Every key except `command` has a default.
//! Command-line flags are applied on top of the file with the same parser,
//! so both sources report errors the same way.

use std::path::PathBuf;

use discflow::lattice::Window;
use thiserror::Error;

pub const DEFAULT_SEED: u64 = discflow::pairs::DEFAULT_SEED;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{field}: {msg}")]
    Validation { field: String, msg: String },
    #[error("no command given (assign, verify, evolve, cylinders, falsify)")]
    MissingCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Assign,
    Verify,
    Evolve,
    Cylinders,
    Falsify,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Arctan,
    Tanh,
    Rational,
    /// File of `n,value` lines.
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant,
    SaturatedRadial,
    Rotational,
    ClampedLinear,
    /// Particle-list file whose velocity columns hold the field values.
    Grid(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub window: Window,
    pub profile: ProfileSpec,
    pub shift_margin: f64,
    pub threshold: f64,
    /// Particle-list file used instead of the lattice flow.
    pub input: Option<PathBuf>,
    pub discreteness: f64,
    /// Disk or cylinder radius; derived from the configuration when absent.
    pub radius: Option<f64>,
    pub t0: f64,
    pub t1: f64,
    pub frames: usize,
    pub svg: bool,
    pub sample_budget: u64,
    pub field: FieldSpec,
    pub field_value: [f64; 2],
    pub field_bound: f64,
    pub field_scale: f64,
    pub field_matrix: [f64; 4],
    pub field_offset: [f64; 2],
    pub c: f64,
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn with_command(command: Command) -> Self {
        Self {
            command,
            window: Window::square(2),
            profile: ProfileSpec::Arctan,
            shift_margin: 1.0,
            threshold: 1.0,
            input: None,
            discreteness: 1.0,
            radius: None,
            t0: 0.0,
            t1: 10.0,
            frames: 11,
            svg: false,
            sample_budget: 1_000_000,
            field: FieldSpec::Constant,
            field_value: [1.0, 0.0],
            field_bound: 1.0,
            field_scale: 1.0,
            field_matrix: [1.0, 0.5, -0.3, 2.0],
            field_offset: [0.0, 0.0],
            c: 0.1,
            budget: 1_000_000,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
        }
    }

    /// Builds a configuration from `(line, key, value)` settings, later
    /// settings overriding earlier ones.
    pub fn from_settings<'a, I>(settings: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = Setting<'a>>,
    {
        let settings: Vec<_> = settings.into_iter().collect();
        let command = settings
            .iter()
            .rev()
            .find(|(_, k, _)| normalize(k) == "command")
            .map(|&(line, k, v)| parse_command(v).map_err(|m| err(line, k, m)))
            .transpose()?
            .ok_or(ConfigError::MissingCommand)?;
        let mut cfg = Self::with_command(command);
        for (line, key, value) in settings {
            cfg.set(&normalize(key), value.trim())
                .map_err(|m| err(line, key, m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "command" => self.command = parse_command(v)?,
            "window" => self.window = parse_window(v)?,
            "profile" => self.profile = parse_profile(v)?,
            "shift_margin" => self.shift_margin = real(v)?,
            "threshold" => self.threshold = real(v)?,
            "input" => self.input = Some(PathBuf::from(v)),
            "discreteness" => self.discreteness = real(v)?,
            "radius" => self.radius = Some(real(v)?),
            "t0" => self.t0 = real(v)?,
            "t1" => self.t1 = real(v)?,
            "frames" => self.frames = v.parse().map_err(|e| format!("`{v}`: {e}"))?,
            "svg" => {
                self.svg = v
                    .parse()
                    .map_err(|_| format!("`{v}` is not true or false"))?
            }
            "sample_budget" => self.sample_budget = integer(v)?,
            "field" => self.field = parse_field(v)?,
            "field_value" => self.field_value = reals::<2>(v)?,
            "field_bound" => self.field_bound = real(v)?,
            "field_scale" => self.field_scale = real(v)?,
            "field_matrix" => self.field_matrix = reals::<4>(v)?,
            "field_offset" => self.field_offset = reals::<2>(v)?,
            "c" => self.c = real(v)?,
            "budget" => self.budget = integer(v)?,
            "seed" => self.seed = integer(v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, msg: &str| {
            Err(ConfigError::Validation {
                field: field.into(),
                msg: msg.into(),
            })
        };
        if self.window.is_empty() {
            return bad("window", "window is empty");
        }
        if self.shift_margin < 0.0 {
            return bad("shift_margin", "must be non-negative");
        }
        if self.threshold <= 0.0 {
            return bad("threshold", "must be positive");
        }
        if self.discreteness <= 0.0 {
            return bad("discreteness", "must be positive");
        }
        if matches!(self.radius, Some(r) if r <= 0.0) {
            return bad("radius", "must be positive");
        }
        if self.t0 > self.t1 {
            return bad("t1", "must not precede t0");
        }
        if self.frames == 0 {
            return bad("frames", "must be at least 1");
        }
        if self.c <= 0.0 {
            return bad("c", "must be positive");
        }
        if self.budget == 0 {
            return bad("budget", "must be at least 1");
        }
        if self.sample_budget == 0 {
            return bad("sample_budget", "must be at least 1");
        }
        if self.field_bound < 0.0 {
            return bad("field_bound", "must be non-negative");
        }
        if self.field_scale <= 0.0 {
            return bad("field_scale", "must be positive");
        }
        Ok(())
    }
}

fn err(line: Option<usize>, key: &str, msg: String) -> ConfigError {
    match line {
        Some(line) => ConfigError::Parse {
            line,
            msg: format!("{key}: {msg}"),
        },
        None => ConfigError::Validation {
            field: key.to_string(),
            msg,
        },
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// `(line, key, value)`; flags carry no line.
pub type Setting<'a> = (Option<usize>, &'a str, &'a str);

/// Splits a config file into settings. `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<Vec<Setting<'_>>, ConfigError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: k + 1,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        out.push((Some(k + 1), key.trim(), value.trim()));
    }
    Ok(out)
}

fn parse_command(v: &str) -> Result<Command, String> {
    Ok(match v.trim() {
        "assign" => Command::Assign,
        "verify" => Command::Verify,
        "evolve" => Command::Evolve,
        "cylinders" => Command::Cylinders,
        "falsify" => Command::Falsify,
        other => return Err(format!("unknown command `{other}`")),
    })
}

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|e| format!("`{v}`: {e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn reals<const K: usize>(v: &str) -> Result<[f64; K], String> {
    let vals = v
        .split(',')
        .map(|s| real(s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    vals.try_into().map_err(|vals: Vec<f64>| {
        format!("expected {K} comma-separated numbers, found {}", vals.len())
    })
}

/// Decimal or `0x` hexadecimal.
fn integer(v: &str) -> Result<u64, String> {
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    parsed.map_err(|e| format!("`{v}`: {e}"))
}

fn range(v: &str) -> Result<(i64, i64), String> {
    let (a, b) = v
        .split_once("..")
        .ok_or_else(|| format!("expected `lo..hi`, found `{v}`"))?;
    let a = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    if a > b {
        return Err(format!("empty range `{v}`"));
    }
    Ok((a, b))
}

/// `N` for `{-N..N}^2`, `lo..hi` for a square, or `lo..hi,lo..hi`.
pub fn parse_window(v: &str) -> Result<Window, String> {
    if let Some((a, b)) = v.split_once(',') {
        return Ok(Window::new(range(a.trim())?, range(b.trim())?));
    }
    if v.contains("..") {
        let r = range(v)?;
        return Ok(Window::new(r, r));
    }
    let n: i64 = v.parse().map_err(|e| format!("`{v}`: {e}"))?;
    if n < 0 {
        return Err("half-width must be non-negative".into());
    }
    Ok(Window::square(n))
}

fn parse_profile(v: &str) -> Result<ProfileSpec, String> {
    Ok(match v {
        "arctan" => ProfileSpec::Arctan,
        "tanh" => ProfileSpec::Tanh,
        "rational" => ProfileSpec::Rational,
        _ => match v.strip_prefix("table:") {
            Some(path) if !path.is_empty() => ProfileSpec::Table(PathBuf::from(path)),
            _ => {
                return Err(format!(
                    "unknown profile `{v}` (arctan, tanh, rational, table:PATH)"
                ))
            }
        },
    })
}

fn parse_field(v: &str) -> Result<FieldSpec, String> {
    Ok(match v {
        "constant" => FieldSpec::Constant,
        "saturated-radial" => FieldSpec::SaturatedRadial,
        "rotational" => FieldSpec::Rotational,
        "clamped-linear" => FieldSpec::ClampedLinear,
        _ => match v.strip_prefix("grid:") {
            Some(path) if !path.is_empty() => FieldSpec::Grid(PathBuf::from(path)),
            _ => {
                return Err(format!(
                    "unknown field `{v}` (constant, saturated-radial, rotational, clamped-linear, grid:PATH)"
                ))
            }
        },
    })
}
