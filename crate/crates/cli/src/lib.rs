//! Command-line harness: generate instances, run policies, measure ratios,
//! check the potential inequality and sweep parameter grids.
//!
//! Exit codes: 0 ok, 1 usage, 2 validation, 3 verification violation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mobsrv_core::algorithms::Policy;
use mobsrv_core::offline::Coordinates;
use mobsrv_core::Variant;

pub mod commands;
pub mod sweep;

/// Overrides the default output directory (`out`).
pub const OUT_DIR_ENV: &str = "MOBSRV_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("verification failed: {0}")]
    Violation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Violation(_) => 3,
        }
    }
}

impl From<mobsrv_core::Error> for CliError {
    fn from(e: mobsrv_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mobsrv", version, about = "Mobile server problem lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run an online policy on an instance.
    Run(RunArgs),
    /// Online cost over the offline optimum.
    Ratio(RatioArgs),
    /// Per-step potential inequality ledger.
    Verify(VerifyArgs),
    /// Ratios over a parameter grid described by a TOML file.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Thm1,
    Thm2,
    Thm3,
    MovingClient,
    Random,
    RandomAgent,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Thm1 => "thm1",
            Generator::Thm2 => "thm2",
            Generator::Thm3 => "thm3",
            Generator::MovingClient => "moving-client",
            Generator::Random => "random",
            Generator::RandomAgent => "random-agent",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// One seeded fair coin per phase.
    Oblivious,
    /// Pick the side worse for the reference policy.
    Worst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Standard,
    AnswerFirst,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::AnswerFirst => Variant::AnswerFirst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    HighR,
    LowR,
    MovingClient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoordinatesArg {
    Increments,
    Positions,
}

impl From<CoordinatesArg> for Coordinates {
    fn from(c: CoordinatesArg) -> Coordinates {
        match c {
            CoordinatesArg::Increments => Coordinates::Increments,
            CoordinatesArg::Positions => Coordinates::Positions,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    /// Number of steps (thm1, moving-client, random, random-agent).
    #[arg(long = "T", default_value_t = 100)]
    pub steps: usize,
    /// Phase length; thm1 and thm2 take an integer.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub cycles: usize,
    /// Requests per step (thm3).
    #[arg(long, default_value_t = 8)]
    pub r: usize,
    #[arg(long, default_value_t = 1)]
    pub r_min: usize,
    #[arg(long, default_value_t = 4)]
    pub r_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long = "D", default_value_t = 2.0)]
    pub move_cost: f64,
    /// Augmentation the thm2 catch-up phase is sized for.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Agent speed excess for moving-client, `m_a = (1 + eps) m`.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Agent speed for random-agent; defaults to `m`.
    #[arg(long)]
    pub m_a: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub dimension: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Worst)]
    pub mode: ModeArg,
    /// Reference policy of the worst mode; defaults to the MtC rule of the variant.
    #[arg(long)]
    pub against: Option<Policy>,
    #[arg(long, default_value_t = 0.0)]
    pub against_delta: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
    pub variant: VariantArg,
    /// Random: all requests of a step on one point.
    #[arg(long)]
    pub collapsed: bool,
    #[arg(long, default_value_t = 1.5)]
    pub drift: f64,
    #[arg(long, default_value_t = 2.0)]
    pub spread: f64,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long, default_value = "mtc")]
    pub policy: Policy,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 50_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = CoordinatesArg::Increments)]
    pub coordinates: CoordinatesArg,
    /// Grid step of the 1D oracle run alongside the solver.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    /// Skip the 1D grid oracle.
    #[arg(long)]
    pub no_certify: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Also write per-step costs as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Inequality constant; defaults to the variant's verifier ceiling.
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    pub regime: RegimeArg,
    /// Verify the instance as given instead of collapsing each batch to its center.
    #[arg(long)]
    pub no_collapse: bool,
    /// Exit 0 even when violations are found.
    #[arg(long)]
    pub report_only: bool,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Ledger CSV path.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub spec: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

/// Output directory from the environment, else `out`.
pub fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// `explicit`, or `name` inside the output directory.
pub fn resolve_out(explicit: Option<&Path>, name: &str) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir().join(name))
}

pub fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

pub fn execute(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Gen(a) => commands::cmd_gen(&a),
        Command::Run(a) => commands::cmd_run(&a),
        Command::Ratio(a) => commands::cmd_ratio(&a),
        Command::Verify(a) => commands::cmd_verify(&a),
        Command::Sweep(a) => sweep::cmd_sweep(&a),
    }
}

/// Parses `args`, runs the command, prints its report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(report) => {
            println!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
