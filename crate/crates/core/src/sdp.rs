//! Successful delivery probability of a head-of-line packet with a deadline
//! and a retransmission budget, when a new packet is generated only after the
//! previous one leaves.

use crate::error::{Error, Result};
use crate::scalar::{is_probability, Real};

/// Arguments of a delivery-probability query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpQuery<T> {
    /// Per-slot transmission probability.
    pub q: T,
    /// Success probability of one transmission, `mu / q`.
    pub nu: T,
    /// Allowed retransmissions.
    pub retx: usize,
    /// Deadline in slots.
    pub deadline: usize,
}

impl<T: Real> SdpQuery<T> {
    pub fn new(q: T, nu: T, retx: usize, deadline: usize) -> Result<Self> {
        if !(q > T::zero() && q <= T::one()) {
            return Err(Error::domain(format!("q = {q} outside (0, 1]")));
        }
        if !is_probability(nu) {
            return Err(Error::domain(format!("nu = {nu} outside [0, 1]")));
        }
        if retx > deadline.saturating_sub(1) {
            return Err(Error::domain(format!("n = {retx} exceeds max(D - 1, 0) for D = {deadline}")));
        }
        Ok(Self { q, nu, retx, deadline })
    }
}

/// Closed form for a single allowed attempt: `nu * (1 - (1 - q)^D)`.
pub fn sdp_no_retx<T: Real>(query: &SdpQuery<T>) -> T {
    if query.deadline == 0 {
        return T::zero();
    }
    query.nu * (T::one() - (T::one() - query.q).powi(query.deadline as i32))
}

/// Delivery probability `p_s(n, D)` by the first-attempt recursion, evaluated
/// bottom-up over `(n, D)` in `O(n * D^2)`.
pub fn sdp<T: Real>(query: &SdpQuery<T>) -> T {
    sdp_table(query.q, query.nu, query.retx, query.deadline)[query.retx][query.deadline]
}

/// Full table `table[n][d]` for `n <= max_retx`, `d <= max_deadline`.
///
/// Entries with `n > d - 1` are valid and equal `table[d - 1][d]`: the
/// deadline leaves no room for the extra budget.
pub fn sdp_table<T: Real>(q: T, nu: T, max_retx: usize, max_deadline: usize) -> Vec<Vec<T>> {
    let idle = T::one() - q;
    let mut table: Vec<Vec<T>> = Vec::with_capacity(max_retx + 1);
    // below budget zero nothing is left, so a failed attempt delivers nothing
    let mut prev = vec![T::zero(); max_deadline + 1];
    for _ in 0..=max_retx {
        let mut row = vec![T::zero(); max_deadline + 1];
        for d in 1..=max_deadline {
            // first attempt in slot k of the remaining d
            let mut wait = T::one();
            let mut acc = T::zero();
            for k in 1..=d {
                acc = acc + wait * q * (nu + (T::one() - nu) * prev[d - k]);
                wait = wait * idle;
            }
            row[d] = acc;
        }
        table.push(row.clone());
        prev = row;
    }
    table
}
