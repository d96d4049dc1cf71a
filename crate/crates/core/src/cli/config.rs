//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [scenario]          # keys before any header also land here
//! N = 2
//! q = 0.5
//! lambda = 0.5
//! D = 3
//! n = 2
//! c = 1
//! L = 3               # optional, defaults to D
//! b = 2               # optional, defaults to N
//!
//! [channel]
//! gamma_db = 0
//! noise_dbm = -115.4
//! ptx_mw = 0.01
//! v = 1
//! r = 100
//! alpha = 4.5
//! table = explicit    # or physics (default)
//! table_values = 0.75, 0.375, 0.1875, 0.09375, 0.046875
//!
//! [sweep]             # axes in order; first axis varies slowest
//! lambda = 0.25, 0.5, 0.75
//! q = 0.1:0.9:0.1     # inclusive range start:stop:step
//!
//! [run]
//! mode = sweep
//! seed = 1
//! slots = 100000
//! warmup = 1000
//! reps = 1
//! grid = 0.1
//! objective = max-throughput
//! jobs = 4
//! out = results.csv
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::channel::{ChannelParams, SuccessTable};
use crate::dtmc::Objective;
use crate::error::{Error, Result};
use crate::service::Scenario;
use crate::sim::{DEFAULT_SLOTS, DEFAULT_WARMUP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analyze,
    Simulate,
    Validate,
    Sweep,
    SdpTable,
    Optimize,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::Analyze, Mode::Simulate, Mode::Validate, Mode::Sweep, Mode::SdpTable, Mode::Optimize];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Analyze => "analyze",
            Mode::Simulate => "simulate",
            Mode::Validate => "validate",
            Mode::Sweep => "sweep",
            Mode::SdpTable => "sdp-table",
            Mode::Optimize => "optimize",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Scenario parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Q,
    Lambda,
    Deadline,
    Retx,
    Nodes,
    MprCap,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::Q, Param::Lambda, Param::Deadline, Param::Retx, Param::Nodes, Param::MprCap];

    pub fn key(&self) -> &'static str {
        match self {
            Param::Q => "q",
            Param::Lambda => "lambda",
            Param::Deadline => "D",
            Param::Retx => "n",
            Param::Nodes => "N",
            Param::MprCap => "c",
        }
    }

    pub fn from_key(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.key() == s)
    }

    fn is_integer(&self) -> bool {
        !matches!(self, Param::Q | Param::Lambda)
    }

    fn check(&self, v: f64) -> std::result::Result<(), String> {
        if !v.is_finite() {
            return Err(format!("{} must be finite", self.key()));
        }
        match self {
            Param::Q | Param::Lambda if !(0.0..=1.0).contains(&v) => Err(format!("{} = {v} outside [0, 1]", self.key())),
            _ if self.is_integer() && v.fract() != 0.0 => Err(format!("{} = {v} is not an integer", self.key())),
            Param::Retx if v < 0.0 => Err(format!("n = {v} is negative")),
            Param::Deadline | Param::Nodes | Param::MprCap if v < 1.0 => {
                Err(format!("{} = {v} must be at least 1", self.key()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

/// Scenario fields as written in the document; `L` and `b` stay unset unless
/// given so that they follow `D` and `N` across a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub n_nodes: usize,
    pub q: f64,
    pub lambda: f64,
    pub deadline: usize,
    pub retx: usize,
    pub mpr_cap: usize,
    pub buffer: Option<usize>,
    pub backlogged: Option<usize>,
}

impl ScenarioSpec {
    pub fn set(&mut self, param: Param, v: f64) {
        match param {
            Param::Q => self.q = v,
            Param::Lambda => self.lambda = v,
            Param::Deadline => self.deadline = v as usize,
            Param::Retx => self.retx = v as usize,
            Param::Nodes => self.n_nodes = v as usize,
            Param::MprCap => self.mpr_cap = v as usize,
        }
    }

    pub fn resolve(&self) -> Result<Scenario<f64>> {
        let s = Scenario {
            n_nodes: self.n_nodes,
            q: self.q,
            lambda: self.lambda,
            deadline: self.deadline,
            retx: self.retx,
            mpr_cap: self.mpr_cap,
            buffer: self.buffer.unwrap_or(self.deadline),
            backlogged: self.backlogged.unwrap_or(self.n_nodes),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Physical-layer parameters, in the units the document uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub gamma_db: f64,
    pub noise_dbm: f64,
    pub ptx_mw: f64,
    pub v: f64,
    pub r: f64,
    pub alpha: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self { gamma_db: 0.0, noise_dbm: -115.4, ptx_mw: 0.01, v: 1.0, r: 100.0, alpha: 4.5 }
    }
}

impl ChannelSpec {
    pub fn params(&self) -> Result<ChannelParams<f64>> {
        ChannelParams::from_db(self.gamma_db, self.noise_dbm, self.ptx_mw, self.v, self.r, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    /// Symmetric table computed from the channel parameters for each `N`.
    Physics,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    pub scenario: ScenarioSpec,
    pub channel: ChannelSpec,
    pub table: TableSource,
    pub sweep: Vec<Axis>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub slots: u64,
    pub warmup: u64,
    pub reps: u32,
    pub grid: f64,
    pub objective: Objective,
    pub jobs: Option<usize>,
}

impl RunSpec {
    /// Success table for a given node count.
    pub fn table_for(&self, n_nodes: usize) -> Result<SuccessTable<f64>> {
        match &self.table {
            TableSource::Physics => crate::channel::symmetric_success_table(&self.channel.params()?, n_nodes),
            TableSource::Explicit(v) => SuccessTable::from_values(v.clone()),
        }
    }

    /// Every sweep point in row order; the first axis varies slowest.
    pub fn points(&self) -> Vec<ScenarioSpec> {
        let mut points = vec![self.scenario];
        for axis in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut p = p;
                        p.set(axis.param, v);
                        p
                    })
                })
                .collect();
        }
        points
    }
}

const REQUIRED: [&str; 6] = ["N", "q", "lambda", "D", "n", "c"];

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Scenario,
    Channel,
    Sweep,
    Run,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| err(line, format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(err(line, format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| err(line, format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    if v.is_empty() {
        return Err(err(line, format!("{key}: empty value list")));
    }
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step) =
            (parse_f64(line, key, parts[0].trim())?, parse_f64(line, key, parts[1].trim())?, parse_f64(line, key, parts[2].trim())?);
        if !(step > 0.0) || stop < start {
            return Err(err(line, format!("{key}: range needs start <= stop and a positive step")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // rounded so that 0.1:0.9:0.1 yields 0.3, not 0.30000000000000004
        return Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    v.split(',').map(|s| parse_f64(line, key, s.trim())).collect()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let mut section = Section::Scenario;
    let mut seen: Vec<(Section, String)> = Vec::new();

    let mut n_nodes = None;
    let mut q = None;
    let mut lambda = None;
    let mut deadline = None;
    let mut retx = None;
    let mut mpr_cap = None;
    let mut buffer = None;
    let mut backlogged = None;
    let mut channel = ChannelSpec::default();
    let mut table_kind: Option<(usize, String)> = None;
    let mut table_values: Option<(usize, Vec<f64>)> = None;
    let mut sweep: Vec<Axis> = Vec::new();
    let mut mode = Mode::Analyze;
    let mut output = None;
    let mut seed = 1;
    let mut slots = DEFAULT_SLOTS;
    let mut warmup = DEFAULT_WARMUP;
    let mut reps = 1;
    let mut grid = 0.1;
    let mut objective = Objective::MaxThroughput;
    let mut jobs = None;
    let mut base_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header '{content}'")))?
                .trim();
            section = match name {
                "scenario" => Section::Scenario,
                "channel" => Section::Channel,
                "sweep" => Section::Sweep,
                "run" => Section::Run,
                other => return Err(err(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|(s, k)| *s == section && k == key) {
            return Err(err(line, format!("duplicate key '{key}'")));
        }
        seen.push((section, key.to_string()));

        match section {
            Section::Scenario => {
                base_line = base_line.max(line);
                match key {
                    "N" => n_nodes = Some(parse_int::<usize>(line, key, value)?),
                    "q" => q = Some(parse_f64(line, key, value)?),
                    "lambda" => lambda = Some(parse_f64(line, key, value)?),
                    "D" => deadline = Some(parse_int::<usize>(line, key, value)?),
                    "n" => retx = Some(parse_int::<usize>(line, key, value)?),
                    "c" => mpr_cap = Some(parse_int::<usize>(line, key, value)?),
                    "L" => buffer = Some(parse_int::<usize>(line, key, value)?),
                    "b" => backlogged = Some(parse_int::<usize>(line, key, value)?),
                    _ => return Err(err(line, format!("unknown key '{key}' in [scenario]"))),
                }
            }
            Section::Channel => match key {
                "gamma_db" => channel.gamma_db = parse_f64(line, key, value)?,
                "noise_dbm" => channel.noise_dbm = parse_f64(line, key, value)?,
                "ptx_mw" => channel.ptx_mw = parse_f64(line, key, value)?,
                "v" => channel.v = parse_f64(line, key, value)?,
                "r" => channel.r = parse_f64(line, key, value)?,
                "alpha" => channel.alpha = parse_f64(line, key, value)?,
                "table" => match value {
                    "physics" | "explicit" => table_kind = Some((line, value.to_string())),
                    _ => return Err(err(line, format!("table must be 'physics' or 'explicit', got '{value}'"))),
                },
                "table_values" => table_values = Some((line, parse_list(line, key, value)?)),
                _ => return Err(err(line, format!("unknown key '{key}' in [channel]"))),
            },
            Section::Sweep => {
                let param = Param::from_key(key).ok_or_else(|| {
                    err(line, format!("unknown sweep axis '{key}' (allowed: q, lambda, D, n, N, c)"))
                })?;
                let values = parse_list(line, key, value)?;
                for &v in &values {
                    param.check(v).map_err(|m| err(line, m))?;
                }
                sweep.push(Axis { param, values });
            }
            Section::Run => match key {
                "mode" => mode = Mode::parse(value).ok_or_else(|| err(line, format!("unknown mode '{value}'")))?,
                "seed" => seed = parse_int(line, key, value)?,
                "slots" => slots = parse_int(line, key, value)?,
                "warmup" => warmup = parse_int(line, key, value)?,
                "reps" => reps = parse_int(line, key, value)?,
                "grid" => grid = parse_f64(line, key, value)?,
                "objective" => {
                    objective = Objective::parse(value).ok_or_else(|| {
                        err(line, format!("objective must be max-throughput or min-drop-rate, got '{value}'"))
                    })?
                }
                "jobs" => jobs = Some(parse_int(line, key, value)?),
                "out" => output = Some(PathBuf::from(value)),
                _ => return Err(err(line, format!("unknown key '{key}' in [run]"))),
            },
        }
    }

    let present = [n_nodes.is_some(), q.is_some(), lambda.is_some(), deadline.is_some(), retx.is_some(), mpr_cap.is_some()];
    let missing: Vec<String> =
        REQUIRED.iter().zip(present).filter(|(_, p)| !p).map(|(k, _)| k.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingKeys(missing));
    }

    let scenario = ScenarioSpec {
        n_nodes: n_nodes.unwrap(),
        q: q.unwrap(),
        lambda: lambda.unwrap(),
        deadline: deadline.unwrap(),
        retx: retx.unwrap(),
        mpr_cap: mpr_cap.unwrap(),
        buffer,
        backlogged,
    };
    scenario.resolve().map_err(|e| err(base_line, format!("invalid scenario: {e}")))?;

    let table = match (table_kind, table_values) {
        (None, None) => TableSource::Physics,
        (Some((_, k)), None) if k == "physics" => TableSource::Physics,
        (Some((_, k)), Some((line, values))) if k == "explicit" => {
            SuccessTable::from_values(values.clone()).map_err(|e| err(line, e.to_string()))?;
            TableSource::Explicit(values)
        }
        (Some((line, k)), _) if k == "explicit" => return Err(err(line, "table = explicit requires table_values")),
        (_, Some((line, _))) => return Err(err(line, "table_values requires table = explicit")),
        _ => unreachable!(),
    };
    if table == TableSource::Physics {
        channel.params().map_err(|e| err(0, format!("invalid channel: {e}")))?;
    }
    if slots <= warmup {
        return Err(err(0, format!("slots = {slots} must exceed warmup = {warmup}")));
    }
    if reps == 0 {
        return Err(err(0, "reps must be at least 1"));
    }
    if !(grid > 0.0 && grid <= 0.5) {
        return Err(err(0, format!("grid = {grid} outside (0, 0.5]")));
    }

    Ok(RunSpec { mode, scenario, channel, table, sweep, output, seed, slots, warmup, reps, grid, objective, jobs })
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ")
}

/// Writes a document that [`parse_config`] reads back to the same spec.
pub fn render_config(spec: &RunSpec) -> String {
    let s = &spec.scenario;
    let c = &spec.channel;
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]");
    let _ = writeln!(out, "N = {}\nq = {}\nlambda = {}\nD = {}\nn = {}\nc = {}", s.n_nodes, s.q, s.lambda, s.deadline, s.retx, s.mpr_cap);
    if let Some(l) = s.buffer {
        let _ = writeln!(out, "L = {l}");
    }
    if let Some(b) = s.backlogged {
        let _ = writeln!(out, "b = {b}");
    }
    let _ = writeln!(out, "\n[channel]");
    let _ = writeln!(
        out,
        "gamma_db = {}\nnoise_dbm = {}\nptx_mw = {}\nv = {}\nr = {}\nalpha = {}",
        c.gamma_db, c.noise_dbm, c.ptx_mw, c.v, c.r, c.alpha
    );
    match &spec.table {
        TableSource::Physics => {
            let _ = writeln!(out, "table = physics");
        }
        TableSource::Explicit(v) => {
            let _ = writeln!(out, "table = explicit\ntable_values = {}", list(v));
        }
    }
    if !spec.sweep.is_empty() {
        let _ = writeln!(out, "\n[sweep]");
        for axis in &spec.sweep {
            let _ = writeln!(out, "{} = {}", axis.param.key(), list(&axis.values));
        }
    }
    let _ = writeln!(out, "\n[run]");
    let _ = writeln!(
        out,
        "mode = {}\nseed = {}\nslots = {}\nwarmup = {}\nreps = {}\ngrid = {}\nobjective = {}",
        spec.mode.name(),
        spec.seed,
        spec.slots,
        spec.warmup,
        spec.reps,
        spec.grid,
        spec.objective.name()
    );
    if let Some(j) = spec.jobs {
        let _ = writeln!(out, "jobs = {j}");
    }
    if let Some(p) = &spec.output {
        let _ = writeln!(out, "out = {}", p.display());
    }
    out
}
