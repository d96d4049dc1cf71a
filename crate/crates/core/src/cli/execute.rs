//! Runs a [`RunSpec`] and writes its CSV.
//!
//! Every mode except `sdp-table` emits one row per sweep point (a single row
//! when there are no axes). Columns are the resolved scenario
//! `N,q,lambda,D,n,c,L,b` followed by the mode's metrics and a `status`
//! column: `ok`, `reducible(k)` when `k` chain states carry no stationary
//! mass, or `error: ...` for points that could not be evaluated. Real values
//! have 12 significant digits. Points are evaluated on a worker pool but
//! rows are written in sweep order.

use std::io::Write;

use rayon::prelude::*;

use super::config::{Mode, RunSpec, ScenarioSpec};
use crate::csv_out::fmt_f64;
use crate::dtmc::{analyze, optimize_q, Analysis};
use crate::error::{Error, Result};
use crate::sdp::sdp_table;
use crate::service::service_prob;
use crate::sim::{run_replications, Replications, SimConfig};

/// `|z|` above which a simulated metric disagrees with the analytic one.
pub const Z_TOLERANCE: f64 = 4.0;

const SCENARIO_COLUMNS: [&str; 8] = ["N", "q", "lambda", "D", "n", "c", "L", "b"];

/// Summary of an executed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub rows: usize,
    pub error_rows: usize,
    /// Validate mode only: rows whose simulation missed the analytic value.
    pub validation_failures: usize,
}

impl Report {
    /// 0 on success, 2 when validation failed.
    pub fn exit_code(&self) -> i32 {
        if self.validation_failures > 0 {
            2
        } else {
            0
        }
    }
}

pub fn columns(mode: Mode) -> Vec<&'static str> {
    let metrics: &[&str] = match mode {
        Mode::Analyze => &["mu", "nu", "throughput", "drop_rate"],
        Mode::Simulate => &[
            "throughput_sim",
            "drop_rate_sim",
            "se_throughput",
            "se_drop",
            "ci99_throughput",
            "ci99_drop",
            "arrivals",
            "successes",
            "drops_deadline",
            "drops_retx",
            "drops_overflow",
            "reps",
            "slots",
            "seed",
        ],
        Mode::Validate | Mode::Sweep => &[
            "mu",
            "throughput",
            "drop_rate",
            "throughput_sim",
            "drop_rate_sim",
            "se_throughput",
            "se_drop",
            "ci99_throughput",
            "ci99_drop",
            "z_throughput",
            "z_drop",
            "pass",
        ],
        Mode::SdpTable => &["mu", "nu", "D_eval", "n_eval", "p_s"],
        Mode::Optimize => &["objective", "q_opt", "value", "grid_q", "grid_value"],
    };
    SCENARIO_COLUMNS.iter().chain(metrics).chain(&["status"]).copied().collect()
}

/// One output row, cells already formatted.
#[derive(Debug, Clone)]
struct Row {
    cells: Vec<String>,
    error: bool,
    failed_validation: bool,
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn scenario_cells(p: &ScenarioSpec) -> Vec<String> {
    vec![
        p.n_nodes.to_string(),
        fmt_f64(p.q),
        fmt_f64(p.lambda),
        p.deadline.to_string(),
        p.retx.to_string(),
        p.mpr_cap.to_string(),
        p.buffer.unwrap_or(p.deadline).to_string(),
        p.backlogged.unwrap_or(p.n_nodes).to_string(),
    ]
}

fn status(a: &Analysis<f64>) -> String {
    match a.steady.unreached.len() {
        0 => "ok".to_string(),
        k => format!("reducible({k})"),
    }
}

fn z_score(sim: f64, exact: f64, se: f64) -> f64 {
    let diff = sim - exact;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn sim_config(spec: &RunSpec, point: &ScenarioSpec, index: usize) -> Result<SimConfig> {
    let scenario = point.resolve()?;
    let table = spec.table_for(scenario.n_nodes)?;
    Ok(SimConfig::new(scenario, table)
        .with_slots(spec.slots)
        .with_warmup(spec.warmup)
        .with_seed(point_seed(spec.seed, index)))
}

/// Seed of sweep point `index`; replications split from it.
pub fn point_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

fn analyze_point(spec: &RunSpec, point: &ScenarioSpec) -> Result<Analysis<f64>> {
    let scenario = point.resolve()?;
    analyze(&scenario, &spec.table_for(scenario.n_nodes)?)
}

fn simulate_point(spec: &RunSpec, point: &ScenarioSpec, index: usize) -> Result<Replications> {
    run_replications(&sim_config(spec, point, index)?, spec.reps)
}

fn evaluate(spec: &RunSpec, mode: Mode, point: &ScenarioSpec, index: usize) -> Result<Vec<Row>> {
    let base = scenario_cells(point);
    let row = |metrics: Vec<String>, status: String, failed: bool| Row {
        cells: base.iter().cloned().chain(metrics).chain([status]).collect(),
        error: false,
        failed_validation: failed,
    };
    Ok(match mode {
        Mode::Analyze => {
            let a = analyze_point(spec, point)?;
            let nu = if point.q > 0.0 { fmt_f64(a.mu / point.q) } else { String::new() };
            vec![row(vec![fmt_f64(a.mu), nu, fmt_f64(a.throughput), fmt_f64(a.drop_rate)], status(&a), false)]
        }
        Mode::Simulate => {
            let r = simulate_point(spec, point, index)?;
            let c = r.measured();
            vec![row(
                vec![
                    fmt_f64(r.throughput),
                    fmt_f64(r.drop_rate),
                    fmt_f64(r.se_throughput),
                    fmt_f64(r.se_drop),
                    fmt_f64(r.ci99_throughput()),
                    fmt_f64(r.ci99_drop()),
                    c.arrivals.to_string(),
                    c.successes.to_string(),
                    c.drops_deadline.to_string(),
                    c.drops_retx.to_string(),
                    c.drops_overflow.to_string(),
                    spec.reps.to_string(),
                    spec.slots.to_string(),
                    point_seed(spec.seed, index).to_string(),
                ],
                "ok".to_string(),
                false,
            )]
        }
        Mode::Validate | Mode::Sweep => {
            let a = analyze_point(spec, point)?;
            let r = simulate_point(spec, point, index)?;
            let zt = z_score(r.throughput, a.throughput, r.se_throughput);
            let zd = z_score(r.drop_rate, a.drop_rate, r.se_drop);
            let pass = zt.abs() <= Z_TOLERANCE && zd.abs() <= Z_TOLERANCE;
            vec![row(
                vec![
                    fmt_f64(a.mu),
                    fmt_f64(a.throughput),
                    fmt_f64(a.drop_rate),
                    fmt_f64(r.throughput),
                    fmt_f64(r.drop_rate),
                    fmt_f64(r.se_throughput),
                    fmt_f64(r.se_drop),
                    fmt_f64(r.ci99_throughput()),
                    fmt_f64(r.ci99_drop()),
                    fmt_f64(zt),
                    fmt_f64(zd),
                    u8::from(pass).to_string(),
                ],
                status(&a),
                mode == Mode::Validate && !pass,
            )]
        }
        Mode::SdpTable => {
            let scenario = point.resolve()?;
            let service = service_prob(&scenario, &spec.table_for(scenario.n_nodes)?)?;
            let nu = service.nu.ok_or_else(|| Error::domain("delivery probability needs q > 0"))?;
            let table = sdp_table(scenario.q, nu, scenario.retx, scenario.deadline);
            let mut rows = Vec::new();
            for d in 1..=scenario.deadline {
                for n in 0..=scenario.retx.min(d - 1) {
                    rows.push(row(
                        vec![fmt_f64(service.mu), fmt_f64(nu), d.to_string(), n.to_string(), fmt_f64(table[n][d])],
                        "ok".to_string(),
                        false,
                    ));
                }
            }
            rows
        }
        Mode::Optimize => {
            let scenario = point.resolve()?;
            let o = optimize_q(&scenario, &spec.table_for(scenario.n_nodes)?, spec.objective, spec.grid)?;
            vec![row(
                vec![
                    spec.objective.name().to_string(),
                    fmt_f64(o.q),
                    fmt_f64(o.value),
                    fmt_f64(o.grid_q),
                    fmt_f64(o.grid_value),
                ],
                "ok".to_string(),
                false,
            )]
        }
    })
}

fn error_row(mode: Mode, point: &ScenarioSpec, e: &Error) -> Row {
    let width = columns(mode).len();
    let mut cells = scenario_cells(point);
    cells.resize(width - 1, String::new());
    cells.push(format!("error: {e}"));
    Row { cells, error: true, failed_validation: false }
}

/// Evaluates every point of `spec` on a pool of `jobs` threads (0 = one per
/// core) and writes the CSV to `out`.
pub fn execute<W: Write>(spec: &RunSpec, jobs: usize, out: &mut W) -> Result<Report> {
    let mode = spec.mode;
    if mode == Mode::Optimize && spec.sweep.iter().any(|a| a.param == super::config::Param::Q) {
        return Err(Error::domain("optimize mode searches q itself; remove the q sweep axis"));
    }
    let points = spec.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<Vec<Row>> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| evaluate(spec, mode, p, i).unwrap_or_else(|e| vec![error_row(mode, p, &e)]))
            .collect()
    });

    writeln!(out, "{}", columns(mode).join(","))?;
    let mut report = Report { rows: 0, error_rows: 0, validation_failures: 0 };
    for row in rows.iter().flatten() {
        let line: Vec<String> = row.cells.iter().map(|c| quote(c)).collect();
        writeln!(out, "{}", line.join(","))?;
        report.rows += 1;
        report.error_rows += usize::from(row.error);
        report.validation_failures += usize::from(row.failed_validation);
    }
    Ok(report)
}
