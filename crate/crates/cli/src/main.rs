mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "dispatch",
    version,
    about = "Do-not-exceed limits and operating base points for real-time dispatch",
    after_help = "Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.\n\
                  Set DISPATCH_LP_DUMP=<dir> to dump every LP/MILP the solver sees."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one period's do-not-exceed limits.
    Dne(DneArgs),
    /// Solve one period's operating base points for given or freshly solved limits.
    Obp(ObpArgs),
    /// Simulate one method over a horizon of validation periods.
    Run(RunArgs),
    /// Simulate both methods on the same data and compare them.
    Compare(RunArgs),
    /// Write a deterministic synthetic history and validation series.
    GenSynthetic(GenArgs),
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// Run manifest (JSON); flags given on the command line override it.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Case file (JSON).
    #[arg(long)]
    pub case: Option<PathBuf>,
    /// History CSV: timestamp, forecast_<vrg>..., error_<vrg>...
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Validation CSV: the history columns plus observed_<vrg>...
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Samples selected for the limit problem [default: 400].
    #[arg(long, alias = "samples", value_parser = clap::value_parser!(u64).range(1..))]
    pub n_dne: Option<u64>,
    /// Robust feasibility tolerance in MW [default: 1e-4].
    #[arg(long, value_parser = positive)]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormulationArg {
    Extended,
    BigM,
}

#[derive(Args)]
pub struct DneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Index of the validation record whose forecast defines the period.
    #[arg(long, default_value_t = 0)]
    pub period: usize,
    /// Output JSON path.
    #[arg(long, default_value = "dne.json")]
    pub out: PathBuf,
    /// Also write the final master problem in LP format next to the JSON.
    #[arg(long)]
    pub emit_lp: bool,
    #[arg(long, value_enum, default_value_t = FormulationArg::Extended)]
    pub formulation: FormulationArg,
}

#[derive(Args)]
pub struct ObpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub period: usize,
    /// Samples selected for the cost model [default: 20].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_obp: Option<u64>,
    /// Limits from a previous `dne` run; solved first when omitted.
    #[arg(long)]
    pub limits: Option<PathBuf>,
    #[arg(long, default_value = "obp.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub emit_lp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Proposed,
    Odne,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Method to simulate [default: proposed]; ignored by `compare`.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Samples selected for the cost model [default: 20].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_obp: Option<u64>,
    /// First validation index of the horizon [default: 0].
    #[arg(long)]
    pub start: Option<usize>,
    /// Horizon length [default: 24].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub periods: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Price unserved balance and line overloads (default).
    #[arg(long, conflicts_with = "strict")]
    pub penalty: bool,
    /// Record infeasible corrective dispatch instead of pricing slack.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct GenArgs {
    /// Manifest supplying `case`, `seed` and `output_dir`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Case whose VRG units (ids and capacities) the series are generated for.
    #[arg(long)]
    pub case: Option<PathBuf>,
    /// Random seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 2000)]
    pub history_periods: usize,
    #[arg(long, default_value_t = 240)]
    pub validation_periods: usize,
    /// AR(1) coefficient of the forecast series.
    #[arg(long, default_value_t = 0.95)]
    pub ar_coef: f64,
    /// Innovation standard deviation, fraction of capacity.
    #[arg(long, default_value_t = 0.08)]
    pub noise_scale: f64,
    /// Long-run forecast level, fraction of capacity.
    #[arg(long, default_value_t = 0.5)]
    pub mean_level: f64,
    /// Share of the forecast innovation common to all units.
    #[arg(long, default_value_t = 0.5)]
    pub correlation: f64,
    /// Error standard deviation at zero forecast, fraction of capacity.
    #[arg(long, default_value_t = 0.02)]
    pub error_base: f64,
    /// Growth of the error standard deviation with forecast/capacity.
    #[arg(long, default_value_t = 0.12)]
    pub error_slope: f64,
    /// Directory for history.csv and validation.csv [default: .].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Failures split by exit status.
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<dispatch_core::Error> for Failure {
    fn from(e: dispatch_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dne(a) => commands::dne(a),
        Command::Obp(a) => commands::obp(a),
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::GenSynthetic(a) => commands::gen_synthetic(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
