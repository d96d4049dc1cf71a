//! Command-line front end.
//!
//! `aloha-deadline <mode> --config <path> [--out <path>] [--seed <u64>]
//! [--slots <u64>] [--reps <u32>] [--grid <float>] [--jobs <u32>]`
//!
//! Flags override the matching `[run]` keys of the config. `--jobs` falls
//! back to `ALOHA_DEADLINE_JOBS`, then to one worker per core. Exit codes:
//! 0 success, 1 usage or config error, 2 validation failure.

pub mod config;
pub mod execute;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{parse_config, render_config, Axis, ChannelSpec, Mode, Param, RunSpec, ScenarioSpec, TableSource};
pub use execute::{columns, execute, Report, Z_TOLERANCE};

use crate::dtmc::{analyze, write_steady_state_csv};
use crate::error::{Error, Result};
use crate::sim::run_simulation_traced;

pub const JOBS_ENV: &str = "ALOHA_DEADLINE_JOBS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Analyze,
    Simulate,
    Validate,
    Sweep,
    SdpTable,
    Optimize,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analyze => Mode::Analyze,
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Validate => Mode::Validate,
            ModeArg::Sweep => Mode::Sweep,
            ModeArg::SdpTable => Mode::SdpTable,
            ModeArg::Optimize => Mode::Optimize,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aloha-deadline", version, about = "Deadline-constrained slotted ALOHA: analysis, simulation and sweeps")]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    mode: ModeArg,
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    reps: Option<u32>,
    /// Grid step of the q search (optimize).
    #[arg(long)]
    grid: Option<f64>,
    /// Worker threads for sweep points.
    #[arg(long)]
    jobs: Option<u32>,
    /// Per-slot trace CSV (simulate, single point, one replication).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Transition matrix CSV (analyze, single point).
    #[arg(long)]
    matrix_out: Option<PathBuf>,
    /// Steady-state CSV (analyze, single point).
    #[arg(long)]
    pi_out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config { line: 0, message: msg.into() }
}

fn resolve_jobs(flag: Option<u32>, config: Option<usize>) -> Result<usize> {
    if let Some(j) = flag {
        return Ok(j as usize);
    }
    if let Some(j) = config {
        return Ok(j);
    }
    match std::env::var(JOBS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("{JOBS_ENV} = '{v}' is not a thread count"))),
        Err(_) => Ok(0),
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run_args(args: Args) -> Result<Report> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut spec = parse_config(&text)?;
    spec.mode = args.mode.into();
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(s) = args.slots {
        spec.slots = s;
    }
    if let Some(r) = args.reps {
        spec.reps = r;
    }
    if let Some(g) = args.grid {
        spec.grid = g;
    }
    if let Some(o) = args.out {
        spec.output = Some(o);
    }
    // re-validate overrides through the parser's own checks
    let spec = parse_config(&render_config(&spec))?;
    let jobs = resolve_jobs(args.jobs, spec.jobs)?;

    let single = spec.points().len() == 1;
    if let Some(path) = &args.trace {
        if spec.mode != Mode::Simulate || !single || spec.reps != 1 {
            return Err(usage("--trace needs simulate mode, no sweep axes and a single replication"));
        }
        let point = spec.scenario.resolve()?;
        let cfg = crate::sim::SimConfig::new(point, spec.table_for(point.n_nodes)?)
            .with_slots(spec.slots)
            .with_warmup(spec.warmup)
            .with_seed(execute::point_seed(spec.seed, 0));
        let mut w = create(path)?;
        run_simulation_traced(&cfg, &mut w)?;
        w.flush()?;
    }
    if args.matrix_out.is_some() || args.pi_out.is_some() {
        if spec.mode != Mode::Analyze || !single {
            return Err(usage("--matrix-out and --pi-out need analyze mode and no sweep axes"));
        }
        let point = spec.scenario.resolve()?;
        let a = analyze(&point, &spec.table_for(point.n_nodes)?)?;
        if let Some(path) = &args.matrix_out {
            let mut w = create(path)?;
            a.model.write_matrix_csv(&mut w)?;
            w.flush()?;
        }
        if let Some(path) = &args.pi_out {
            let mut w = create(path)?;
            write_steady_state_csv(&a.model, &a.steady, &mut w)?;
            w.flush()?;
        }
    }

    match &spec.output {
        Some(path) => {
            let mut w = create(path)?;
            let report = execute(&spec, jobs, &mut w)?;
            w.flush()?;
            Ok(report)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            execute(&spec, jobs, &mut w)
        }
    }
}

/// Parses `argv`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run_args(args) {
        Ok(report) => {
            if report.error_rows > 0 {
                eprintln!("{} of {} rows could not be evaluated", report.error_rows, report.rows);
            }
            if report.validation_failures > 0 {
                eprintln!("{} of {} rows outside |z| <= {Z_TOLERANCE}", report.validation_failures, report.rows);
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
