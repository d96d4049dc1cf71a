//! Head-of-line service probability of the tagged node.

use crate::channel::SuccessTable;
use crate::error::{Error, Result};
use crate::scalar::{is_probability, Real};

/// Full description of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario<T> {
    /// Number of nodes N sharing the channel.
    pub n_nodes: usize,
    /// Per-slot transmission probability.
    pub q: T,
    /// Bernoulli arrival probability of the tagged node.
    pub lambda: T,
    /// Deadline D in slots.
    pub deadline: usize,
    /// Allowed retransmissions n.
    pub retx: usize,
    /// Receiver multi-packet reception capability c; 1 is the collision channel.
    pub mpr_cap: usize,
    /// Buffer size L in packets.
    pub buffer: usize,
    /// Backlogged nodes b (tagged node included) used for the service probability.
    pub backlogged: usize,
}

impl<T: Real> Scenario<T> {
    /// Scenario with `L = D` and `b = N`.
    pub fn new(n_nodes: usize, q: T, lambda: T, deadline: usize, retx: usize, mpr_cap: usize) -> Result<Self> {
        let s = Self { n_nodes, q, lambda, deadline, retx, mpr_cap, buffer: deadline, backlogged: n_nodes };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::domain("N must be at least 1"));
        }
        if !is_probability(self.q) {
            return Err(Error::domain(format!("q = {} outside [0, 1]", self.q)));
        }
        if !is_probability(self.lambda) {
            return Err(Error::domain(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if self.deadline == 0 {
            return Err(Error::domain("D must be at least 1"));
        }
        if self.retx + 1 > self.deadline {
            return Err(Error::domain(format!(
                "n = {} exceeds D - 1 = {}",
                self.retx,
                self.deadline - 1
            )));
        }
        if self.mpr_cap == 0 || self.mpr_cap > self.n_nodes {
            return Err(Error::domain(format!("c = {} outside 1..={}", self.mpr_cap, self.n_nodes)));
        }
        if self.buffer < self.deadline {
            return Err(Error::domain(format!("L = {} smaller than D = {}", self.buffer, self.deadline)));
        }
        if self.backlogged == 0 || self.backlogged > self.n_nodes {
            return Err(Error::domain(format!("b = {} outside 1..={}", self.backlogged, self.n_nodes)));
        }
        Ok(())
    }

    /// Total transmission attempts allowed per packet, `n + 1`.
    pub fn attempts(&self) -> usize {
        self.retx + 1
    }

    /// Whether retransmissions are limited only by the deadline.
    pub fn full_retx(&self) -> bool {
        self.retx + 1 == self.deadline
    }

    pub fn with_q(mut self, q: T) -> Self {
        self.q = q;
        self
    }
}

/// Service probability and the derived per-attempt success ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceModel<T> {
    pub mu: T,
    /// `mu / q`; `None` when `q = 0`.
    pub nu: Option<T>,
    pub table: SuccessTable<T>,
}

/// Binomial coefficient, exact in integers for `n <= 64` and evaluated in log
/// space above that.
pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    if n <= 64 {
        let mut acc: u128 = 1;
        for i in 0..k {
            // acc * (n - i) is divisible by (i + 1) at every step.
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        T::from_u128(acc).unwrap_or_else(T::infinity)
    } else {
        let ln: f64 = (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum();
        T::lit(ln.exp())
    }
}

/// Probability that the tagged head-of-line packet is delivered in a slot.
///
/// The tagged node and `b - 1` backlogged competitors each transmit with
/// probability `q`. With `k` transmitters in total the tagged packet succeeds
/// with probability `table[k - 1]` when `k <= c`; above the receiver's
/// capability every transmission fails.
pub fn service_prob<T: Real>(scenario: &Scenario<T>, table: &SuccessTable<T>) -> Result<ServiceModel<T>> {
    let b = scenario.backlogged;
    if table.len() < b.min(scenario.mpr_cap) {
        return Err(Error::domain(format!(
            "success table has {} entries, need {}",
            table.len(),
            b.min(scenario.mpr_cap)
        )));
    }
    let q = scenario.q;
    if q == T::zero() {
        return Ok(ServiceModel { mu: T::zero(), nu: None, table: table.clone() });
    }
    let idle = T::one() - q;
    let mu: T = (1..=b.min(scenario.mpr_cap))
        .map(|k| {
            binomial::<T>(b - 1, k - 1) * table.values()[k - 1] * q.powi(k as i32) * idle.powi((b - k) as i32)
        })
        .sum();
    let mu = mu.min(q);
    Ok(ServiceModel { mu, nu: Some(mu / q), table: table.clone() })
}
