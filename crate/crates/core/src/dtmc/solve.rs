//! Stationary distribution of a column-stochastic matrix.
//!
//! The chain is restricted to the first closed communicating class reachable
//! from state 0, which is solved directly by Gaussian elimination on
//! `(M - I) pi = 0` with the last balance equation replaced by `sum(pi) = 1`.
//! Lazy power iteration polishes the result if the residual is too large.

use std::collections::VecDeque;

use super::{MarkovModel, TransitionMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_POWER_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<T> {
    /// Probability of each state, in model order.
    pub pi: Vec<T>,
    /// States outside the recurrent class (zero stationary mass).
    pub unreached: Vec<usize>,
    pub method: SolveMethod,
}

impl<T: Real> SteadyState<T> {
    /// `max |M pi - pi|`.
    pub fn residual(&self, matrix: &TransitionMatrix<T>) -> T {
        matrix
            .apply(&self.pi)
            .iter()
            .zip(&self.pi)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

pub fn steady_state<T: Real>(model: &MarkovModel<T>) -> Result<SteadyState<T>> {
    stationary_distribution(&model.matrix)
}

/// Residual accepted from the direct solve before falling back to iteration.
fn residual_tol<T: Real>(dim: usize) -> T {
    T::epsilon() * T::lit(100.0) * T::from_count(dim.max(1))
}

fn power_tol<T: Real>() -> T {
    T::lit(1e-13).max(T::epsilon() * T::lit(10.0))
}

pub fn stationary_distribution<T: Real>(matrix: &TransitionMatrix<T>) -> Result<SteadyState<T>> {
    let dim = matrix.dim();
    if dim == 0 {
        return Err(Error::domain("empty transition matrix"));
    }
    let class = recurrent_class_from(matrix, 0);
    let sub = restrict(matrix, &class);

    let (local, method) = match solve_direct(&sub) {
        Some(x) if local_residual(&sub, &x) <= residual_tol::<T>(class.len()) => (x, SolveMethod::Direct),
        start => (power_iterate(&sub, start), SolveMethod::PowerIteration),
    };

    let mut pi = vec![T::zero(); dim];
    for (&i, &p) in class.iter().zip(&local) {
        pi[i] = p;
    }
    let unreached = (0..dim).filter(|i| !class.contains(i)).collect();
    Ok(SteadyState { pi, unreached, method })
}

fn reachable<T: Real>(matrix: &TransitionMatrix<T>, start: usize) -> Vec<bool> {
    let dim = matrix.dim();
    let mut seen = vec![false; dim];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(from) = queue.pop_front() {
        for to in 0..dim {
            if !seen[to] && matrix.get(to, from) > T::zero() {
                seen[to] = true;
                queue.push_back(to);
            }
        }
    }
    seen
}

/// First closed class (in index order) reachable from `start`, sorted.
fn recurrent_class_from<T: Real>(matrix: &TransitionMatrix<T>, start: usize) -> Vec<usize> {
    let dim = matrix.dim();
    let reach: Vec<Vec<bool>> = (0..dim).map(|i| reachable(matrix, i)).collect();
    // i is recurrent iff everything it reaches reaches it back
    let recurrent = |i: usize| (0..dim).filter(|&j| reach[i][j]).all(|j| reach[j][i]);
    let first = (0..dim)
        .find(|&i| reach[start][i] && recurrent(i))
        .expect("every finite chain has a closed class");
    (0..dim).filter(|&j| reach[first][j]).collect()
}

fn restrict<T: Real>(matrix: &TransitionMatrix<T>, class: &[usize]) -> TransitionMatrix<T> {
    let rows: Vec<Vec<T>> = class
        .iter()
        .map(|&to| class.iter().map(|&from| matrix.get(to, from)).collect())
        .collect();
    TransitionMatrix::from_rows(&rows)
}

fn local_residual<T: Real>(m: &TransitionMatrix<T>, x: &[T]) -> T {
    m.apply(x).iter().zip(x).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
}

/// Gaussian elimination with partial pivoting. Returns `None` when singular.
fn solve_direct<T: Real>(m: &TransitionMatrix<T>) -> Option<Vec<T>> {
    let n = m.dim();
    let mut a: Vec<Vec<T>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r == n - 1 { T::one() } else { m.get(r, c) - if r == c { T::one() } else { T::zero() } })
                .collect()
        })
        .collect();
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();

    let tiny = T::epsilon() * T::from_count(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= tiny {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s: T = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(normalize(x))
}

fn normalize<T: Real>(mut x: Vec<T>) -> Vec<T> {
    for v in x.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    let total: T = x.iter().copied().sum();
    x.iter_mut().for_each(|v| *v = *v / total);
    x
}

/// Iterates `x <- (M x + x) / 2`, which shares the stationary vector of `M`
/// and converges for periodic chains too.
fn power_iterate<T: Real>(m: &TransitionMatrix<T>, start: Option<Vec<T>>) -> Vec<T> {
    let n = m.dim();
    let half = T::lit(0.5);
    let mut x = start.unwrap_or_else(|| vec![T::one() / T::from_count(n); n]);
    let tol = power_tol::<T>();
    for _ in 0..MAX_POWER_ITERS {
        let y = m.apply(&x);
        let next: Vec<T> = y.iter().zip(&x).map(|(a, b)| half * (*a + *b)).collect();
        let delta = next.iter().zip(&x).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        x = normalize(next);
        if delta < tol {
            break;
        }
    }
    x
}
