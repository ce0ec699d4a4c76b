//! Command-line front end: `simulate`, `feasibility` and `sweep`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
//! When no output path is given, `DPRQKD_OUTPUT_DIR` (if set) names the
//! directory results are written to; otherwise they go to standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{check_cow_feasibility, check_dps_feasibility, table1_rows, TABLE1_RATIOS};
use crate::detectors::LinearModeConfig;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::scenario::{simulate, write_output, Overrides, RunMode, ScenarioConfig};
use crate::sweep::{power6, run_sweep, SweepConfig};

pub const OUTPUT_DIR_ENV: &str = "DPRQKD_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dprqkd", version, about = "DPS/COW QKD detector-control attack simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and emit a JSON result document.
    Simulate(SimulateArgs),
    /// Evaluate the attack feasibility conditions for a set of thresholds.
    Feasibility(FeasibilityArgs),
    /// Run a parameter sweep and emit a CSV table.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Honest,
    Attack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Dps,
    Cow,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the run mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Override the number of key bits.
    #[arg(long)]
    pub n_bits: Option<usize>,
    /// Override the mean photon number.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Override the channel transmittance.
    #[arg(long)]
    pub transmittance: Option<f64>,
    /// Write the result document here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Embed Bob's detection record in the result.
    #[arg(long)]
    pub include_record: bool,
}

#[derive(Debug, Args)]
pub struct FeasibilityArgs {
    /// Protocol whose conditions are checked.
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// DPS detector thresholds in µW.
    #[arg(long)]
    pub p_never: Option<f64>,
    #[arg(long)]
    pub p_always: Option<f64>,
    /// COW monitor thresholds in µW.
    #[arg(long)]
    pub p_never_m: Option<f64>,
    #[arg(long)]
    pub p_always_m: Option<f64>,
    /// COW data-detector thresholds in µW.
    #[arg(long)]
    pub p_never_b: Option<f64>,
    #[arg(long)]
    pub p_always_b: Option<f64>,
    /// COW splitting ratio towards the data detector.
    #[arg(long)]
    pub t_b: Option<f64>,
    /// Use the relaxed bound with a factor of 4 instead of 2.
    #[arg(long)]
    pub relaxed: bool,
    /// Bob has a single monitor detector.
    #[arg(long)]
    pub one_monitor: bool,
    /// Print the data-threshold table as CSV.
    #[arg(long)]
    pub table1: bool,
    /// Splitting ratios for `--table1`.
    #[arg(long, value_delimiter = ',')]
    pub t_b_values: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Write the CSV table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run grid points on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

fn missing(flag: &str) -> Error {
    Error::Usage(format!("missing required flag --{flag}"))
}

fn thresholds(never: Option<f64>, always: Option<f64>, names: [&str; 2]) -> Result<LinearModeConfig> {
    LinearModeConfig::new(
        never.ok_or_else(|| missing(names[0]))?,
        always.ok_or_else(|| missing(names[1]))?,
    )
}

fn default_output(configured: Option<PathBuf>, stem: &str, ext: &str) -> Option<PathBuf> {
    configured.or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| Path::new(&d).join(format!("{stem}.{ext}")))
    })
}

fn emit(out: &mut dyn Write, path: Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_output(&p, text),
        None => out.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&a.config)?;
    cfg.apply(&Overrides {
        seed: a.seed,
        mode: a.mode.map(|m| match m {
            ModeArg::Honest => RunMode::Honest,
            ModeArg::Attack => RunMode::Attack,
        }),
        n_bits: a.n_bits,
        mu: a.mu,
        transmittance: a.transmittance,
        out: a.out,
        include_record: a.include_record,
    });
    let doc = simulate(&cfg)?;
    let stem = cfg.name.clone().unwrap_or_else(|| "result".into());
    emit(out, default_output(cfg.output.path.clone(), &stem, "json"), &doc.to_json()?)
}

fn cmd_feasibility(a: FeasibilityArgs, out: &mut dyn Write) -> Result<()> {
    let text = if a.table1 {
        let m = thresholds(a.p_never_m, a.p_always_m, ["p-never-m", "p-always-m"])?;
        let ratios = a.t_b_values.clone().unwrap_or_else(|| TABLE1_RATIOS.to_vec());
        let rows = table1_rows(&ratios, m.p_never, m.p_always)?;
        let mut s = String::from("t_b,min_p_never_b,max_p_always_b\n");
        for r in rows {
            s.push_str(&format!(
                "{},{},{}\n",
                r.t_b,
                power6(r.min_p_never_b),
                power6(r.max_p_always_b)
            ));
        }
        s
    } else {
        let report = match a.protocol {
            ProtocolArg::Dps => {
                check_dps_feasibility(&thresholds(a.p_never, a.p_always, ["p-never", "p-always"])?, a.relaxed)
            }
            ProtocolArg::Cow => {
                let m = thresholds(a.p_never_m, a.p_always_m, ["p-never-m", "p-always-m"])?;
                let d = thresholds(a.p_never_b, a.p_always_b, ["p-never-b", "p-always-b"])?;
                let t_b = a.t_b.ok_or_else(|| missing("t-b"))?;
                check_cow_feasibility(&m, &d, t_b, a.relaxed, a.one_monitor)?
            }
        };
        let mut s = serde_json::to_string_pretty(&report)?;
        s.push('\n');
        s
    };
    emit(out, None, &text)
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SweepConfig::load(&a.config)?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let table = run_sweep(&cfg, exec)?;
    let stem = cfg.base.name.clone().unwrap_or_else(|| "sweep".into());
    emit(out, default_output(a.out.or(cfg.output.clone()), &stem, "csv"), &table.to_csv()?)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Feasibility(a) => cmd_feasibility(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
