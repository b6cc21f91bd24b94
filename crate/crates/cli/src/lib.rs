//! Command-line front end for `urllc-noma`.
//!
//! Four subcommands share one config format (see [`config`]):
//!
//! * `sweep` writes required SNR over a one-dimensional grid as CSV,
//! * `compare` writes NOMA and OMA requirements side by side,
//! * `plan` prints a full two-user plan with its verification as JSON,
//! * `simulate` runs the frame queue and prints a validation report.
//!
//! Exit status is 0 on success, 1 for usage or configuration errors and 2
//! for failures after the inputs were accepted, including a failed
//! simulation check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod format;
pub mod report;
pub mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use urllc_noma::fbl::SystemConfig;
use urllc_noma::planner::Modes;
use urllc_noma::traffic::TrafficModel;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::format::canonical_json;
use crate::sweep::{Access, Preset, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "urllc-noma", version, about = "Required SNR for two-user NOMA under reliability and delay targets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Required SNR over a parameter grid, as CSV.
    Sweep(SweepArgs),
    /// Plan a two-user link and verify it, as JSON.
    Plan(PlanArgs),
    /// Simulate the frame queue against the analytic tail.
    Simulate(SimulateArgs),
    /// NOMA against OMA over a parameter grid, as CSV.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Literal dispersion and the weak user's gain in the SIC term.
    Paper,
    /// Standard dispersion and the strong user's own gain in the SIC term.
    Corrected,
}

impl From<ModeArg> for Modes {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => Modes::paper(),
            ModeArg::Corrected => Modes::corrected(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Compare,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig1 => Preset::Fig1,
            PresetArg::Fig2 => Preset::Fig2,
            PresetArg::Fig3 => Preset::Fig3,
            PresetArg::Fig4 => Preset::Fig4,
            PresetArg::Compare => Preset::Compare,
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Config file; with a preset only its system and traffic are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file, standard output if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Built-in grid over the default system.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Orthogonal access instead of NOMA.
    #[arg(long)]
    pub oma: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write the delay histogram here as CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn grid_spec(args: &GridArgs) -> Result<SweepSpec> {
    let modes = args.mode.map(Modes::from);
    let config = args.config.as_deref().map(Config::load).transpose()?;
    match (args.preset, config) {
        (Some(preset), Some(config)) => {
            let base = config.system()?;
            let traffic = config.traffic(base.frame_duration_s)?.m11;
            Ok(Preset::from(preset).spec(base, traffic, modes.unwrap_or_else(|| config.modes())))
        }
        (Some(preset), None) => Ok(Preset::from(preset).spec(
            SystemConfig::table1(),
            TrafficModel::new(0.01, SystemConfig::table1().frame_duration_s)?,
            modes.unwrap_or_default(),
        )),
        (None, Some(config)) => config.sweep(modes),
        (None, None) => Err(CliError::Usage("either --config or --preset is required".into())),
    }
}

fn output_error(path: Option<&Path>, source: io::Error) -> CliError {
    CliError::Output {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

/// Writes to `path`, or to `stdout` when there is none.
fn emit<F>(path: Option<&Path>, stdout: &mut dyn Write, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let res = match path {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => write(stdout),
    };
    res.map_err(|e| output_error(path, e))
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = grid_spec(&args.grid)?;
    let access = if args.oma { Access::Oma } else { Access::Noma };
    let result = spec.run(access);
    emit(args.grid.output.as_deref(), stdout, |w| result.write_csv(w).map_err(csv_io))
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = grid_spec(&args.grid)?;
    let result = spec.compare();
    emit(args.grid.output.as_deref(), stdout, |w| result.write_csv(w).map_err(csv_io))
}

pub fn cmd_plan(args: &PlanArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = Config::load(&args.config)?;
    let inputs = config.plan_inputs(args.mode.map(Modes::from))?;
    let report = report::plan_report(&inputs)?;
    let json = canonical_json(&report).map_err(|e| CliError::Failed(e.to_string()))?;
    emit(args.output.as_deref(), stdout, |w| writeln!(w, "{json}"))
}

/// Prints the report, and fails when the tail slope check fails.
pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = Config::load(&args.config)?;
    let (queue, delay_bound_s) = config.queue()?;
    let (report, hist) = report::simulation_report(&queue, delay_bound_s)?;
    let json = canonical_json(&report).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(stdout, "{json}").map_err(|e| output_error(None, e))?;
    if let Some(path) = &args.output {
        emit(Some(path), stdout, |w| hist.write_csv(w))?;
    }
    if report.validation.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "tail slope check failed: empirical {:?} against analytic {}",
            report.validation.empirical_slope, report.validation.analytic_slope
        )))
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Plan(a) => cmd_plan(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
    }
}

/// Parses `args` and runs the command, returning the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
