//! Command-line front end: `verify-symbol`, `run` and `replay`.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{RunArgs, VerifySymbolArgs, EXIT_USAGE};

const RUN_AFTER_HELP: &str = "\
Outputs (in --out):
  manifest.json                  written before any computation
  report.json                    {manifest, config, trials, summary, pass}
  summary.csv                    header trial_id,seed,lhs,rhs,ratio,flags; one row per
                                 trial; numbers with 17 significant digits, empty when
                                 undefined; flags separated by ';'; LF line endings
  <check>_ratio_histogram.dat    '# log10_ratio count', quarter-decade bins
  decay_slope.dat                '# log_distance log_abs_T' (decay check only)
  FAILED                         present when a check failed or the run aborted

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration error.";

#[derive(Debug, Parser)]
#[command(name = "hardylab", version, about = "Numerical checks for multilinear Coifman-Meyer operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn parse_shells(text: &str) -> Result<(i32, i32), String> {
    let (a, b) = text.split_once(':').ok_or("expected LO:HI, e.g. -4:4")?;
    let lo = a.trim().parse().map_err(|_| format!("bad shell exponent `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad shell exponent `{b}`"))?;
    Ok((lo, hi))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coifman-Meyer ratios per derivative and dyadic shell, plus plane vanishing.
    VerifySymbol {
        /// Builtin name, `name^k`, or a file holding one of those.
        symbol: String,
        /// Largest derivative order |alpha|.
        #[arg(long, default_value_t = 2)]
        orders: usize,
        /// Dyadic shell exponents LO:HI.
        #[arg(long, default_value = "-4:4", value_parser = parse_shells, allow_hyphen_values = true)]
        shells: (i32, i32),
        /// Random directions added to the axes and diagonals.
        #[arg(long, default_value_t = 60)]
        directions: usize,
        /// Fail unless the symbol vanishes on the plane xi_1 + ... + xi_m = 0.
        #[arg(long)]
        require_plane_vanishing: bool,
    },
    /// Run the checks enabled in a configuration file.
    #[command(after_help = RUN_AFTER_HELP)]
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `[ensemble] seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "HARDYLAB_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Recompute one trial of a report and compare bit for bit.
    Replay { report: PathBuf, trial_id: String },
}

/// Parse `args` and execute; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::VerifySymbol { symbol, orders, shells, directions, require_plane_vanishing } => {
            commands::verify_symbol(&VerifySymbolArgs { symbol, orders, shells, directions, require_plane_vanishing }, out)
        }
        Command::Run { config, out: dir, seed, jobs } => commands::run(&RunArgs { config, out: dir, seed, jobs }, out),
        Command::Replay { report, trial_id } => commands::replay(&report, &trial_id, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.0);
            EXIT_USAGE
        }
    }
}
