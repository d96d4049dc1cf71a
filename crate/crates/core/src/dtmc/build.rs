use super::{ChainState, MarkovModel, Regime, TransitionMatrix};
use crate::error::{Error, Result};
use crate::scalar::{is_probability, Real};
use crate::service::Scenario;

/// Number of non-empty plus empty states for deadline `D` and budget `n`:
/// `D(n+1) + 1 - n(n+1)/2`.
pub fn expected_state_count(deadline: usize, retx: usize) -> usize {
    deadline * (retx + 1) + 1 - retx * (retx + 1) / 2
}

fn check_prob<T: Real>(name: &str, x: T) -> Result<()> {
    if is_probability(x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} outside [0, 1]")))
    }
}

/// Spreads `mass` over the next head-of-line state after the head departs at
/// age `t`. The oldest packet that arrived during the head's lifetime becomes
/// the head with age `j` with probability `lambda (1-lambda)^(t-j)`; the queue
/// is empty with probability `(1-lambda)^t`.
fn handover<T: Real>(
    m: &mut TransitionMatrix<T>,
    from: usize,
    t: usize,
    mass: T,
    lambda: T,
    head_index: impl Fn(usize) -> usize,
) {
    if mass == T::zero() {
        return;
    }
    let idle = T::one() - lambda;
    // j = t down to 1 accumulates (1-lambda)^(t-j)
    let mut none_before = T::one();
    for j in (1..=t).rev() {
        m.add(head_index(j), from, mass * lambda * none_before);
        none_before = none_before * idle;
    }
    m.add(0, from, mass * none_before);
}

/// Chain for unlimited retransmissions up to the deadline (`n = D - 1`).
///
/// States `0..=D`: the empty queue, then the head-of-line age. From age `D`
/// the head leaves with certainty (delivered with probability `mu`, expired
/// otherwise), so the final column hands over the full unit mass.
pub fn build_full_retx_chain<T: Real>(lambda: T, mu: T, deadline: usize) -> Result<MarkovModel<T>> {
    check_prob("lambda", lambda)?;
    check_prob("mu", mu)?;
    if deadline == 0 {
        return Err(Error::domain("D must be at least 1"));
    }
    let dim = deadline + 1;
    let mut m = TransitionMatrix::zeros(dim);
    m.add(0, 0, T::one() - lambda);
    m.add(1, 0, lambda);
    for t in 1..deadline {
        m.add(t + 1, t, T::one() - mu);
        handover(&mut m, t, t, mu, lambda, |j| j);
    }
    handover(&mut m, deadline, deadline, T::one(), lambda, |j| j);

    let mut states = vec![ChainState::Empty];
    states.extend((1..=deadline).map(ChainState::Age));
    Ok(MarkovModel {
        states,
        matrix: m,
        success_set: (1..=deadline).collect(),
        fd_set: vec![deadline],
        f_set: Vec::new(),
        regime: Regime::Full,
        deadline,
        mu,
        // q does not enter this chain; build_chain records the scenario's value.
        q: T::one(),
        lambda,
    })
}

/// Chain for at most `retx` retransmissions within deadline `D`.
///
/// States are the empty queue followed by `(t, r)` in lexicographic order,
/// `t` the head age and `r <= min(n, t - 1)` its failed attempts.
pub fn build_limited_retx_chain<T: Real>(lambda: T, mu: T, q: T, retx: usize, deadline: usize) -> Result<MarkovModel<T>> {
    check_prob("lambda", lambda)?;
    check_prob("mu", mu)?;
    check_prob("q", q)?;
    if deadline == 0 {
        return Err(Error::domain("D must be at least 1"));
    }
    if retx + 1 > deadline {
        return Err(Error::domain(format!("n = {retx} exceeds D - 1 = {}", deadline - 1)));
    }
    if mu > q {
        return Err(Error::domain(format!("mu = {mu} exceeds q = {q}")));
    }

    let mut states = vec![ChainState::Empty];
    // offsets[t] = index of (t, 0)
    let mut offsets = vec![0; deadline + 1];
    for t in 1..=deadline {
        offsets[t] = states.len();
        states.extend((0..=retx.min(t - 1)).map(|r| ChainState::AgeFails(t, r)));
    }
    let idx = |t: usize, r: usize| offsets[t] + r;
    let head = |j: usize| offsets[j];

    let dim = states.len();
    let mut m = TransitionMatrix::zeros(dim);
    m.add(0, 0, T::one() - lambda);
    m.add(head(1), 0, lambda);

    let fail = q - mu;
    let silent = T::one() - q;
    let mut fd_set = Vec::new();
    let mut f_set = Vec::new();
    for t in 1..=deadline {
        for r in 0..=retx.min(t - 1) {
            let from = idx(t, r);
            if t == deadline {
                fd_set.push(from);
                handover(&mut m, from, t, T::one(), lambda, head);
                continue;
            }
            handover(&mut m, from, t, mu, lambda, head);
            if r < retx {
                m.add(idx(t + 1, r + 1), from, fail);
            } else {
                f_set.push(from);
                handover(&mut m, from, t, fail, lambda, head);
            }
            m.add(idx(t + 1, r), from, silent);
        }
    }

    Ok(MarkovModel {
        states,
        matrix: m,
        success_set: (1..dim).collect(),
        fd_set,
        f_set,
        regime: Regime::Limited { retx },
        deadline,
        mu,
        q,
        lambda,
    })
}

/// Builds the full chain when `n = D - 1` and the limited chain otherwise.
pub fn build_chain<T: Real>(scenario: &Scenario<T>, mu: T) -> Result<MarkovModel<T>> {
    if scenario.full_retx() {
        let mut model = build_full_retx_chain(scenario.lambda, mu, scenario.deadline)?;
        model.q = scenario.q;
        Ok(model)
    } else {
        build_limited_retx_chain(scenario.lambda, mu, scenario.q, scenario.retx, scenario.deadline)
    }
}
