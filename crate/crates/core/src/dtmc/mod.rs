//! Head-of-line Markov chains for the buffered tagged node.
//!
//! A state tracks the age of the head-of-line packet (slots since it entered
//! the queue) and, when retransmissions are limited, how many of its
//! transmissions have failed. Success and drop events are not states: they are
//! accounted as event rates over the recurrent chain by [`throughput`] and
//! [`drop_rate`].
//!
//! Matrices are column stochastic: entry `(to, from)` is the probability of
//! moving from state `from` to state `to` in one slot.

mod build;
mod optimize;
mod solve;

use std::fmt;
use std::io::Write;

use crate::channel::SuccessTable;
use crate::csv_out::fmt_num;
use crate::error::Result;
use crate::scalar::Real;
use crate::service::{service_prob, Scenario};

pub use build::{build_chain, build_full_retx_chain, build_limited_retx_chain, expected_state_count};
pub use optimize::{optimize_q, Objective, Optimum};
pub use solve::{stationary_distribution, steady_state, SolveMethod, SteadyState};

/// A head-of-line state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChainState {
    /// Queue empty.
    Empty,
    /// Head packet of the given age; the full-retransmission chain does not
    /// track failures.
    Age(usize),
    /// Head packet with its age and failed-attempt count.
    AgeFails(usize, usize),
}

impl ChainState {
    pub fn age(&self) -> Option<usize> {
        match *self {
            ChainState::Empty => None,
            ChainState::Age(t) | ChainState::AgeFails(t, _) => Some(t),
        }
    }

    pub fn fails(&self) -> Option<usize> {
        match *self {
            ChainState::AgeFails(_, r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainState::Empty => write!(f, "0"),
            ChainState::Age(t) => write!(f, "{t}"),
            ChainState::AgeFails(t, r) => write!(f, "{t},{r}"),
        }
    }
}

/// Dense square matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    /// Builds from rows; `rows[to][from]`.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self { dim, data: rows.iter().flatten().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, to: usize, from: usize) -> T {
        self.data[to * self.dim + from]
    }

    pub(crate) fn add(&mut self, to: usize, from: usize, p: T) {
        self.data[to * self.dim + from] = self.data[to * self.dim + from] + p;
    }

    pub fn column_sum(&self, from: usize) -> T {
        (0..self.dim).map(|to| self.get(to, from)).sum()
    }

    /// Largest deviation of any column sum from one.
    pub fn stochasticity_error(&self) -> T {
        (0..self.dim)
            .map(|c| (self.column_sum(c) - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// `M * x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|to| (0..self.dim).map(|from| self.get(to, from) * x[from]).sum())
            .collect()
    }
}

/// Which retransmission regime a chain models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Retransmit until the deadline, `n = D - 1`.
    Full,
    /// At most `n` retransmissions, `n < D - 1` (any `n <= D - 1` is accepted).
    Limited { retx: usize },
}

/// A built chain with its event-state classification.
#[derive(Debug, Clone)]
pub struct MarkovModel<T> {
    pub(crate) states: Vec<ChainState>,
    pub(crate) matrix: TransitionMatrix<T>,
    pub(crate) success_set: Vec<usize>,
    pub(crate) fd_set: Vec<usize>,
    pub(crate) f_set: Vec<usize>,
    pub(crate) regime: Regime,
    pub(crate) deadline: usize,
    pub(crate) mu: T,
    pub(crate) q: T,
    pub(crate) lambda: T,
}

impl<T: Real> MarkovModel<T> {
    pub fn states(&self) -> &[ChainState] {
        &self.states
    }
    pub fn matrix(&self) -> &TransitionMatrix<T> {
        &self.matrix
    }
    /// States from which a success can occur (every non-empty state).
    pub fn success_set(&self) -> &[usize] {
        &self.success_set
    }
    /// States in the last slot before the deadline.
    pub fn deadline_set(&self) -> &[usize] {
        &self.fd_set
    }
    /// States whose failed transmission exhausts the retransmission budget
    /// before the deadline.
    pub fn budget_set(&self) -> &[usize] {
        &self.f_set
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }
    pub fn deadline(&self) -> usize {
        self.deadline
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn q(&self) -> T {
        self.q
    }
    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn index_of(&self, state: ChainState) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Writes the matrix as CSV: a `to\from` header of state labels, then one
    /// row per destination state.
    pub fn write_matrix_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "to\\from")?;
        for s in &self.states {
            write!(out, ",\"{s}\"")?;
        }
        writeln!(out)?;
        for (to, s) in self.states.iter().enumerate() {
            write!(out, "\"{s}\"")?;
            for from in 0..self.states.len() {
                write!(out, ",{}", fmt_num(self.matrix.get(to, from)))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Writes `state,pi,reached` rows.
pub fn write_steady_state_csv<T: Real, W: Write>(model: &MarkovModel<T>, pi: &SteadyState<T>, mut out: W) -> Result<()> {
    writeln!(out, "state,pi,reached")?;
    for (i, s) in model.states.iter().enumerate() {
        let reached = !pi.unreached.contains(&i);
        writeln!(out, "\"{s}\",{},{}", fmt_num(pi.pi[i]), u8::from(reached))?;
    }
    Ok(())
}

/// Long-run successes per slot, `mu * sum over non-empty states of pi`.
pub fn throughput<T: Real>(model: &MarkovModel<T>, pi: &SteadyState<T>) -> T {
    model.mu * model.success_set.iter().map(|&i| pi.pi[i]).sum::<T>()
}

/// Long-run drops per slot from deadline expiry and exhausted budgets.
pub fn drop_rate<T: Real>(model: &MarkovModel<T>, pi: &SteadyState<T>) -> T {
    let deadline: T = model.fd_set.iter().map(|&i| pi.pi[i]).sum();
    let budget: T = model.f_set.iter().map(|&i| pi.pi[i]).sum();
    (T::one() - model.mu) * deadline + (model.q - model.mu) * budget
}

/// Analytic metrics of one scenario.
#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub mu: T,
    pub throughput: T,
    pub drop_rate: T,
    pub model: MarkovModel<T>,
    pub steady: SteadyState<T>,
}

/// Computes the service probability, builds the matching chain and evaluates
/// throughput and drop rate.
pub fn analyze<T: Real>(scenario: &Scenario<T>, table: &SuccessTable<T>) -> Result<Analysis<T>> {
    scenario.validate()?;
    let service = service_prob(scenario, table)?;
    let model = build_chain(scenario, service.mu)?;
    let steady = steady_state(&model)?;
    Ok(Analysis {
        mu: service.mu,
        throughput: throughput(&model, &steady),
        drop_rate: drop_rate(&model, &steady),
        model,
        steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_table() -> SuccessTable<f64> {
        SuccessTable::from_values(vec![0.75, 0.375, 0.1875, 0.09375, 0.046875]).unwrap()
    }

    fn solved(model: &MarkovModel<f64>) -> (f64, f64) {
        let pi = steady_state(model).unwrap();
        (throughput(model, &pi), drop_rate(model, &pi))
    }

    #[test]
    fn labels() {
        assert_eq!(ChainState::Empty.to_string(), "0");
        assert_eq!(ChainState::Age(3).to_string(), "3");
        assert_eq!(ChainState::AgeFails(2, 1).to_string(), "2,1");
    }

    #[test]
    fn single_slot_deadline() {
        for &lambda in &[0.1_f64, 0.5, 0.9] {
            for &mu in &[0.0, 0.2, 0.7, 1.0] {
                let m = build_full_retx_chain(lambda, mu, 1).unwrap();
                let pi = steady_state(&m).unwrap();
                assert!((pi.pi[0] - (1.0 - lambda)).abs() < 1e-12);
                assert!((pi.pi[1] - lambda).abs() < 1e-12);
                let (t, dr) = solved(&m);
                assert!((t - lambda * mu).abs() < 1e-12);
                assert!((dr - lambda * (1.0 - mu)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_channel_has_no_drops() {
        let m = build_limited_retx_chain(0.5, 1.0, 1.0, 1, 3).unwrap();
        let (t, dr) = solved(&m);
        assert_eq!(dr, 0.0);
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_service() {
        let m = build_full_retx_chain(0.5, 0.0, 3).unwrap();
        let (t, dr) = solved(&m);
        assert_eq!(t, 0.0);
        assert!((dr - 0.5).abs() < 1e-12);
    }

    #[test]
    fn analyze_picks_regime() {
        let s = Scenario::new(2, 0.5, 0.5, 3, 2, 1).unwrap();
        assert_eq!(analyze(&s, &round_table()).unwrap().model.regime(), Regime::Full);
        let s = Scenario::new(2, 0.5, 0.5, 3, 1, 1).unwrap();
        let a = analyze(&s, &round_table()).unwrap();
        assert_eq!(a.model.regime(), Regime::Limited { retx: 1 });
        assert!((a.throughput + a.drop_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matrix_csv_layout() {
        let m = build_limited_retx_chain(0.5, 0.1875, 0.5, 1, 3).unwrap();
        let mut buf = Vec::new();
        m.write_matrix_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "to\\from,\"0\",\"1,0\",\"2,0\",\"2,1\",\"3,0\",\"3,1\"");
        assert_eq!(text.lines().count(), 7);
        let pi = steady_state(&m).unwrap();
        let mut buf = Vec::new();
        write_steady_state_csv(&m, &pi, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("state,pi,reached\n\"0\","));
    }

    #[test]
    fn single_precision_conservation() {
        let s = Scenario::new(3, 0.3_f32, 0.5, 5, 1, 2).unwrap();
        let t = SuccessTable::from_values(vec![0.75_f32, 0.375, 0.1875]).unwrap();
        let a = analyze(&s, &t).unwrap();
        assert!((a.throughput + a.drop_rate - 0.5).abs() < 1e-5);
    }
}
