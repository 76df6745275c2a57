use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use discflow_cli::config::parse_kv;
use discflow_cli::{run, RunConfig, EXIT_INPUT};

/// Collision-free constant-velocity flows, worldline cylinders and a
/// falsifier for separating fields.
#[derive(Parser, Debug)]
#[command(name = "discflow", version)]
struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// assign, verify, evolve, cylinders or falsify.
    #[arg(long)]
    command: Option<String>,
    /// `N` for {-N..N}^2, `lo..hi`, or `lo..hi,lo..hi`.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// arctan, tanh, rational or table:PATH.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    shift_margin: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Particle-list file to use instead of the lattice flow.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    discreteness: Option<String>,
    /// Disk radius for snapshots, cylinder radius for scenes.
    #[arg(long)]
    radius: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    /// Also write SVG snapshots when evolving.
    #[arg(long)]
    svg: bool,
    /// Pair samples for flows too large to check exhaustively.
    #[arg(long)]
    sample_budget: Option<String>,
    /// constant, saturated-radial, rotational, clamped-linear or grid:PATH.
    #[arg(long)]
    field: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    field_value: Option<String>,
    #[arg(long)]
    field_bound: Option<String>,
    #[arg(long)]
    field_scale: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    field_matrix: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    field_offset: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &str)> {
        let pairs: [(&'static str, &Option<String>); 23] = [
            ("command", &self.command),
            ("window", &self.window),
            ("profile", &self.profile),
            ("shift_margin", &self.shift_margin),
            ("threshold", &self.threshold),
            ("input", &self.input),
            ("discreteness", &self.discreteness),
            ("radius", &self.radius),
            ("t0", &self.t0),
            ("t1", &self.t1),
            ("frames", &self.frames),
            ("sample_budget", &self.sample_budget),
            ("field", &self.field),
            ("field_value", &self.field_value),
            ("field_bound", &self.field_bound),
            ("field_scale", &self.field_scale),
            ("field_matrix", &self.field_matrix),
            ("field_offset", &self.field_offset),
            ("c", &self.c),
            ("budget", &self.budget),
            ("seed", &self.seed),
            ("out", &self.out),
            ("svg", &None),
        ];
        let mut out: Vec<_> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect();
        if self.svg {
            out.push(("svg", "true"));
        }
        out
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_INPUT as u8);
            }
        },
        None => String::new(),
    };
    let config = parse_kv(&file_text).and_then(|mut settings| {
        settings.extend(cli.flags().into_iter().map(|(k, v)| (None, k, v)));
        RunConfig::from_settings(settings)
    });
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            match &cli.config {
                Some(path) => eprintln!("error: {}: {e}", path.display()),
                None => eprintln!("error: {e}"),
            }
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
