//! The `spoofsim` command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 attack not applicable to
//! the chosen LiDAR.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::sweep::{Axis, DEFAULT_TRIALS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_APPLICABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spoofsim", version, about = "LiDAR spoofing attack simulator")]
pub struct Cli {
    /// Extra profile definitions (TOML) added to or replacing the built-ins.
    #[arg(long, global = true, value_name = "FILE")]
    pub profiles: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List LiDAR profiles.
    Profiles {
        /// Show only this profile.
        #[arg(long)]
        name: Option<String>,
        /// Print as a TOML profile file, a starting point for `--profiles`.
        #[arg(long)]
        toml: bool,
    },
    /// Apply an injection or removal attack to a point cloud.
    Attack(AttackArgs),
    /// Place an object at a range of distances in a background scan.
    Scenario(ScenarioArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Success rate of an attack while one parameter varies.
    Sweep(SweepArgs),
    /// Count injected and removed points between a benign and an attacked frame.
    Count(CountArgs),
    /// Write a synthetic background scan.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    #[arg(long = "in", value_name = "CLOUD")]
    pub input: PathBuf,
    #[arg(long, value_name = "CLOUD")]
    pub out: PathBuf,
    /// Overrides the config's profile.
    #[arg(long)]
    pub profile: Option<String>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// Object model (.toml spec or ASCII .stl). Defaults to a sedan-sized box.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Background cloud. Defaults to a synthetic 64-channel roof scan.
    #[arg(long, value_name = "CLOUD")]
    pub background: Option<PathBuf>,
    /// Gap between the object's near face and the distance origin, m.
    #[arg(long, default_value_t = 0.0)]
    pub nose_offset: f64,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value_t = 0.0)]
    pub d_min: f64,
    #[arg(long, default_value_t = 14.0)]
    pub d_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = CloudFormat::Bin)]
    pub format: CloudFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CloudFormat {
    Bin,
    Pcd,
}

impl CloudFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Bin => "bin",
            CloudFormat::Pcd => "pcd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Injection,
    Removal,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "DIR")]
    pub clouds: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub detections: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub gt: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Per-scenario CSV. Printed to standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Aggregate report as JSON.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[arg(long, default_value_t = 0.5)]
    pub cluster_radius: f64,
    #[arg(long, default_value_t = 10)]
    pub min_points: usize,
    #[arg(long)]
    pub max_points: Option<usize>,
    #[arg(long, default_value_t = -1.4, allow_hyphen_values = true)]
    pub ground_z: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<String>,
    /// Base attack config. Defaults to plain injection, or HFR with p = 1
    /// over the object on the frequency axis.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Scenario distances, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub distances: Vec<f64>,
    /// Use an external detector through this exchange directory.
    #[arg(long, value_name = "DIR")]
    pub external_dir: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// CSV output. Printed to standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long, value_name = "CLOUD")]
    pub benign: PathBuf,
    #[arg(long, value_name = "CLOUD")]
    pub attacked: PathBuf,
    /// Intensity above which a point counts as spoofed (0 to 255).
    #[arg(long, default_value_t = 80.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bin_deg: f64,
    #[arg(long, default_value_t = spoofsim_core::eval::DEFAULT_MATCH_TOL)]
    pub match_tol: f64,
    /// Per-azimuth removal CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 64 channels over the forward 90 degrees with a ground plane.
    Roof64,
    /// Uniform angular grid returning from a sphere.
    Backdrop,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Roof64)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0.2)]
    pub az_step: f64,
    /// Backdrop radius, m.
    #[arg(long, default_value_t = 60.0)]
    pub range: f64,
    #[arg(long, value_name = "CLOUD")]
    pub out: PathBuf,
}

/// Output streams and styling for one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub color: bool,
}

impl Io<'_> {
    /// `key: value` line, key bold when color is on.
    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> std::io::Result<()> {
        if self.color {
            writeln!(self.out, "\x1b[1m{key}:\x1b[0m {value}")
        } else {
            writeln!(self.out, "{key}: {value}")
        }
    }
}

/// Whether to style terminal output: never when `NO_COLOR` is set.
pub fn color_enabled(is_terminal: bool) -> bool {
    is_terminal && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
}

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = if io.color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let _ = if e.use_stderr() {
                write!(io.err, "{text}")
            } else {
                write!(io.out, "{text}")
            };
            return code;
        }
    };
    match commands::dispatch(&cli, io) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Maps an error to the exit-code contract.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    let applicability = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<spoofsim_core::Error>(),
            Some(spoofsim_core::Error::Applicability { .. })
        )
    });
    if applicability {
        EXIT_NOT_APPLICABLE
    } else {
        EXIT_INPUT
    }
}
