//! Independent Monte-Carlo and enumeration oracles for the analytic path.

use aloha_deadline::dtmc::{
    build_chain, build_full_retx_chain, build_limited_retx_chain, drop_rate, expected_state_count, steady_state,
    throughput, ChainState,
};
use aloha_deadline::sdp::{sdp, SdpQuery};
use aloha_deadline::Scenario;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Simulates the single-packet attempt process: each slot the packet is sent
/// with probability q and delivered with probability nu when sent.
#[test]
fn delivery_probability_monte_carlo() {
    let (q, nu, retx, deadline) = (0.5f64, 0.375f64, 1usize, 2usize);
    let exact = sdp(&SdpQuery::new(q, nu, retx, deadline).unwrap());
    assert!((exact - 0.33984375).abs() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 10_000_000u64;
    let mut delivered = 0u64;
    for _ in 0..trials {
        let mut fails = 0;
        for _ in 0..deadline {
            if rng.gen::<f64>() < q {
                if rng.gen::<f64>() < nu {
                    delivered += 1;
                    break;
                }
                fails += 1;
                if fails > retx {
                    break;
                }
            }
        }
    }
    let est = delivered as f64 / trials as f64;
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((est - exact).abs() <= 4.0 * se, "{est} vs {exact}");
}

/// Slot process of the tagged queue driven directly by (q, nu); the head
/// state at the start of each slot is histogrammed and compared with the
/// stationary vector, using batch means for the standard error.
#[test]
fn limited_chain_steady_state_histogram() {
    let (lambda, q, mu, retx, deadline) = (0.5, 0.5, 0.1875, 1usize, 3usize);
    let nu = mu / q;
    let model = build_limited_retx_chain(lambda, mu, q, retx, deadline).unwrap();
    let pi = steady_state(&model).unwrap();
    let states = model.states().to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let slots = 10_000_000usize;
    let batches = 100;
    let batch_len = slots / batches;
    let mut batch_counts = vec![vec![0u64; states.len()]; batches];
    // (age, fails)
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for slot in 0..slots {
        let state = match queue.front() {
            None => ChainState::Empty,
            Some(&(t, r)) => ChainState::AgeFails(t, r),
        };
        let idx = states.iter().position(|&s| s == state).expect("state in model");
        batch_counts[slot / batch_len][idx] += 1;

        if let Some(head) = queue.front_mut() {
            if rng.gen::<f64>() < q {
                if rng.gen::<f64>() < nu {
                    queue.pop_front();
                } else {
                    head.1 += 1;
                    if head.1 > retx {
                        queue.pop_front();
                    }
                }
            }
        }
        for p in queue.iter_mut() {
            p.0 += 1;
        }
        queue.retain(|p| p.0 <= deadline);
        if rng.gen::<f64>() < lambda {
            queue.push_back((1, 0));
        }
    }

    for (i, s) in states.iter().enumerate() {
        let means: Vec<f64> = batch_counts.iter().map(|b| b[i] as f64 / batch_len as f64).collect();
        let mean = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        assert!((mean - pi.pi[i]).abs() <= 4.0 * se, "state {s}: {mean} vs {}", pi.pi[i]);
    }
}

fn grid_case() -> impl Strategy<Value = (f64, f64, f64, usize, usize)> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 1usize..10)
        .prop_flat_map(|(l, q, nu, d)| (Just(l), Just(q), Just(nu), Just(d), 0..d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_matrices_are_column_stochastic((l, q, nu, d, n) in grid_case()) {
        let m = build_limited_retx_chain(l, q * nu, q, n, d).unwrap();
        prop_assert!(m.matrix().stochasticity_error() < 1e-12);
        let dim = m.states().len();
        for to in 0..dim {
            for from in 0..dim {
                let x = m.matrix().get(to, from);
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
        let f = build_full_retx_chain(l, q * nu, d).unwrap();
        prop_assert!(f.matrix().stochasticity_error() < 1e-12);
    }

    #[test]
    fn throughput_plus_drops_equals_arrivals((l, q, nu, d, n) in grid_case()) {
        let m = build_limited_retx_chain(l, q * nu, q, n, d).unwrap();
        let pi = steady_state(&m).unwrap();
        prop_assert!(pi.residual(m.matrix()) < 1e-10);
        prop_assert!((throughput(&m, &pi) + drop_rate(&m, &pi) - l).abs() < 1e-10);
    }
}

#[test]
fn state_count_formula() {
    for d in 1..=13 {
        for n in 0..d {
            let m = build_limited_retx_chain(0.3, 0.2, 0.4, n, d).unwrap();
            assert_eq!(m.states().len(), expected_state_count(d, n));
        }
    }
}

#[test]
fn more_retransmissions_never_hurt() {
    let table = aloha_deadline::SuccessTable::from_values(vec![0.75, 0.375, 0.1875]).unwrap();
    for d in [3, 5, 7] {
        for c in [1, 2] {
            for &l in &[0.25, 0.5, 0.75] {
                for qi in 1..=9 {
                    let q = qi as f64 / 10.0;
                    let mut prev: Option<(f64, f64)> = None;
                    for n in 0..d {
                        let s = Scenario::new(2, q, l, d, n, c).unwrap();
                        let mu = aloha_deadline::service::service_prob(&s, &table).unwrap().mu;
                        let m = build_chain(&s, mu).unwrap();
                        let pi = steady_state(&m).unwrap();
                        let (t, dr) = (throughput(&m, &pi), drop_rate(&m, &pi));
                        if let Some((pt, pd)) = prev {
                            assert!(t >= pt - 1e-12 && dr <= pd + 1e-12, "D={d} c={c} l={l} q={q} n={n}");
                        }
                        prev = Some((t, dr));
                    }
                }
            }
        }
    }
}

#[test]
fn drops_grow_with_arrival_rate() {
    for d in [3, 5] {
        for n in 0..d {
            for qi in 1..=9 {
                let q = qi as f64 / 10.0;
                let mu = 0.75 * q * (1.0 - q);
                let drs: Vec<f64> = [0.25, 0.5, 0.75]
                    .iter()
                    .map(|&l| {
                        let m = build_limited_retx_chain(l, mu, q, n, d).unwrap();
                        drop_rate(&m, &steady_state(&m).unwrap())
                    })
                    .collect();
                assert!(drs.windows(2).all(|w| w[1] >= w[0] - 1e-12), "D={d} n={n} q={q}: {drs:?}");
            }
        }
    }
}
