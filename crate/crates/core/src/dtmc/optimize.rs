use super::analyze;
use crate::channel::SuccessTable;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::service::Scenario;

const GOLDEN_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MaxThroughput,
    MinDropRate,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::MaxThroughput => "max-throughput",
            Objective::MinDropRate => "min-drop-rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max-throughput" => Some(Objective::MaxThroughput),
            "min-drop-rate" => Some(Objective::MinDropRate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum<T> {
    pub q: T,
    /// Objective value at `q` (throughput or drop rate, not negated).
    pub value: T,
    /// Best point of the coarse grid, before refinement.
    pub grid_q: T,
    pub grid_value: T,
}

/// Searches the transmission probability that optimizes the analytic
/// objective.
///
/// The grid `{step, 2 step, ..., 1 - step}` is scanned first (ties go to the
/// smaller `q`), then golden-section search refines inside the neighbouring
/// cells of the best grid point, clipped to the grid range. The refined point
/// replaces the grid point only if it is strictly better.
pub fn optimize_q<T: Real>(
    scenario: &Scenario<T>,
    table: &SuccessTable<T>,
    objective: Objective,
    step: T,
) -> Result<Optimum<T>> {
    if !(step > T::zero() && step <= T::lit(0.5)) {
        return Err(Error::domain(format!("grid step {step} outside (0, 0.5]")));
    }
    // Larger score is better.
    let score = |q: T| -> Result<T> {
        let a = analyze(&scenario.with_q(q), table)?;
        Ok(match objective {
            Objective::MaxThroughput => a.throughput,
            Objective::MinDropRate => -a.drop_rate,
        })
    };

    let lo = step;
    let hi = T::one() - step;
    let slack = step * T::lit(1e-9);
    let mut best: Option<(T, T)> = None;
    let mut i = 1;
    loop {
        let q = T::from_count(i) * step;
        if q > hi + slack {
            break;
        }
        let s = score(q)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((q, s));
        }
        i += 1;
    }
    let (grid_q, grid_score) = best.expect("grid has at least one point");

    let (mut a, mut b) = ((grid_q - step).max(lo), (grid_q + step).min(hi));
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (score(c)?, score(d)?);
    while b - a > T::lit(GOLDEN_TOL) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = score(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = score(d)?;
        }
    }
    let mid = (a + b) / T::lit(2.0);
    let mid_score = score(mid)?;
    let (q, s) = if mid_score > grid_score { (mid, mid_score) } else { (grid_q, grid_score) };
    let unscore = |s: T| match objective {
        Objective::MaxThroughput => s,
        Objective::MinDropRate => -s,
    };
    Ok(Optimum { q, value: unscore(s), grid_q, grid_value: unscore(grid_score) })
}
