//! Slot-level Monte-Carlo simulator of the tagged buffered node.
//!
//! Per slot, in order:
//!
//! 1. if the tagged queue is nonempty the head transmits with probability `q`;
//!    each of the `b - 1` backlogged competitors transmits with probability `q`;
//! 2. with `k` transmitters in total the tagged packet succeeds with
//!    probability `table[k - 1]` if `k <= c` and fails otherwise;
//! 3. a delivered head leaves; a failed head whose failure count exceeds `n`
//!    is dropped;
//! 4. every queued packet ages by one slot and packets older than `D` expire,
//!    so a packet in its `D`-th slot still gets that slot's attempt;
//! 5. a new packet arrives with probability `lambda` at the tail, and is
//!    discarded if the buffer already holds `L` packets.
//!
//! Competitors are always backlogged, so only their interference is sampled.
//! Runs are deterministic in the seed (ChaCha8).

use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::SuccessTable;
use crate::error::{Error, Result};
use crate::service::Scenario;

pub const DEFAULT_SLOTS: u64 = 100_000;
pub const DEFAULT_WARMUP: u64 = 1_000;
/// Replication `i` xors `i * SEED_SPLIT` into the base seed.
pub const SEED_SPLIT: u64 = 0x9E37_79B9_7F4A_7C15;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;
const BATCHES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub birth_slot: u64,
    /// Slots spent in the system, 1 in the first slot after arrival.
    pub age: usize,
    pub fails: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario<f64>,
    pub table: SuccessTable<f64>,
    pub slots: u64,
    pub seed: u64,
    /// Leading slots excluded from the rate estimates.
    pub warmup: u64,
}

impl SimConfig {
    pub fn new(scenario: Scenario<f64>, table: SuccessTable<f64>) -> Self {
        Self { scenario, table, slots: DEFAULT_SLOTS, seed: 1, warmup: DEFAULT_WARMUP }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_slots(mut self, slots: u64) -> Self {
        self.slots = slots;
        self
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.slots <= self.warmup {
            return Err(Error::domain(format!("slots = {} must exceed warmup = {}", self.slots, self.warmup)));
        }
        let need = self.scenario.backlogged.min(self.scenario.mpr_cap);
        if self.table.len() < need {
            return Err(Error::domain(format!("success table has {} entries, need {need}", self.table.len())));
        }
        Ok(())
    }
}

/// Event counts over some window of slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub arrivals: u64,
    pub successes: u64,
    pub drops_deadline: u64,
    pub drops_retx: u64,
    pub drops_overflow: u64,
}

impl Counters {
    pub fn drops(&self) -> u64 {
        self.drops_deadline + self.drops_retx + self.drops_overflow
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Counts over the whole run, warmup included.
    pub totals: Counters,
    /// Counts over the measured slots only.
    pub measured: Counters,
    pub measured_slots: u64,
    pub final_queue_len: usize,
    /// Successes per measured slot.
    pub throughput: f64,
    /// Drops per measured slot.
    pub drop_rate: f64,
    /// Standard errors by batch means over the measured slots.
    pub se_throughput: f64,
    pub se_drop: f64,
    pub ci99_throughput: f64,
    pub ci99_drop: f64,
    pub seed: u64,
    pub config: SimConfig,
}

/// Head-of-line outcome of one slot, for tracing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotEvent {
    Empty,
    Silent,
    Success,
    Fail,
    RetxDrop,
    Expired,
}

impl SlotEvent {
    fn as_str(self) -> &'static str {
        match self {
            SlotEvent::Empty => "empty",
            SlotEvent::Silent => "silent",
            SlotEvent::Success => "success",
            SlotEvent::Fail => "fail",
            SlotEvent::RetxDrop => "retx_drop",
            SlotEvent::Expired => "expired",
        }
    }
}

/// Running batch-means accumulator for one per-slot quantity.
#[derive(Debug, Default)]
struct BatchMeans {
    batch_len: u64,
    in_batch: u64,
    current: f64,
    sums: Vec<f64>,
}

impl BatchMeans {
    fn new(measured_slots: u64) -> Self {
        Self { batch_len: (measured_slots / BATCHES).max(1), ..Default::default() }
    }

    fn push(&mut self, x: f64) {
        self.current += x;
        self.in_batch += 1;
        if self.in_batch == self.batch_len {
            self.sums.push(self.current / self.batch_len as f64);
            self.current = 0.0;
            self.in_batch = 0;
        }
    }

    /// Standard error of the overall mean of `total_slots` observations.
    fn standard_error(&self, total_slots: u64) -> f64 {
        let k = self.sums.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.sums.iter().sum::<f64>() / k as f64;
        let var = self.sums.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        // variance of a batch mean scaled to the full measured window
        (var * self.batch_len as f64 / total_slots as f64).sqrt()
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    simulate(config, None)
}

/// Runs the simulation and writes one CSV row per slot:
/// `slot,queue_len,head_age,head_fails,event`, where the head columns
/// describe the queue at the start of the slot.
pub fn run_simulation_traced<W: Write>(config: &SimConfig, trace: &mut W) -> Result<SimResult> {
    simulate(config, Some(trace))
}

fn simulate(config: &SimConfig, mut trace: Option<&mut dyn Write>) -> Result<SimResult> {
    config.validate()?;
    let s = &config.scenario;
    let table = config.table.values();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut queue: VecDeque<Packet> = VecDeque::with_capacity(s.buffer + 1);
    let mut totals = Counters::default();
    let mut measured = Counters::default();
    let measured_slots = config.slots - config.warmup;
    let mut succ_batches = BatchMeans::new(measured_slots);
    let mut drop_batches = BatchMeans::new(measured_slots);

    if let Some(w) = trace.as_mut() {
        writeln!(w, "slot,queue_len,head_age,head_fails,event")?;
    }

    for slot in 0..config.slots {
        let mut slot_counts = Counters::default();
        let head_before = queue.front().copied();
        let queue_len = queue.len();

        let mut event = SlotEvent::Empty;
        if !queue.is_empty() {
            event = SlotEvent::Silent;
            if rng.gen::<f64>() < s.q {
                let competitors = (1..s.backlogged).filter(|_| rng.gen::<f64>() < s.q).count();
                let k = 1 + competitors;
                let delivered = k <= s.mpr_cap && rng.gen::<f64>() < table[k - 1];
                if delivered {
                    queue.pop_front();
                    slot_counts.successes += 1;
                    event = SlotEvent::Success;
                } else {
                    let head = queue.front_mut().expect("nonempty");
                    head.fails += 1;
                    event = SlotEvent::Fail;
                    if head.fails > s.retx {
                        queue.pop_front();
                        slot_counts.drops_retx += 1;
                        event = SlotEvent::RetxDrop;
                    }
                }
            }
        }

        for p in queue.iter_mut() {
            p.age += 1;
        }
        let before = queue.len();
        queue.retain(|p| p.age <= s.deadline);
        let expired = (before - queue.len()) as u64;
        if expired > 0 {
            slot_counts.drops_deadline += expired;
            event = SlotEvent::Expired;
        }

        if rng.gen::<f64>() < s.lambda {
            slot_counts.arrivals += 1;
            if queue.len() >= s.buffer {
                debug_assert!(s.buffer < s.deadline, "overflow is unreachable when L >= D");
                slot_counts.drops_overflow += 1;
            } else {
                queue.push_back(Packet { birth_slot: slot, age: 1, fails: 0 });
            }
        }

        add(&mut totals, &slot_counts);
        if slot >= config.warmup {
            add(&mut measured, &slot_counts);
            succ_batches.push(slot_counts.successes as f64);
            drop_batches.push(slot_counts.drops() as f64);
        }

        if let Some(w) = trace.as_mut() {
            let (age, fails) = head_before.map_or((0, 0), |p| (p.age, p.fails));
            writeln!(w, "{slot},{queue_len},{age},{fails},{}", event.as_str())?;
        }
    }

    let m = measured_slots as f64;
    let se_throughput = succ_batches.standard_error(measured_slots);
    let se_drop = drop_batches.standard_error(measured_slots);
    Ok(SimResult {
        totals,
        measured,
        measured_slots,
        final_queue_len: queue.len(),
        throughput: measured.successes as f64 / m,
        drop_rate: measured.drops() as f64 / m,
        se_throughput,
        se_drop,
        ci99_throughput: Z99 * se_throughput,
        ci99_drop: Z99 * se_drop,
        seed: config.seed,
        config: config.clone(),
    })
}

fn add(acc: &mut Counters, x: &Counters) {
    acc.arrivals += x.arrivals;
    acc.successes += x.successes;
    acc.drops_deadline += x.drops_deadline;
    acc.drops_retx += x.drops_retx;
    acc.drops_overflow += x.drops_overflow;
}

/// Seed of replication `i`: `base xor (i * SEED_SPLIT)`, wrapping.
pub fn replication_seed(base: u64, i: u32) -> u64 {
    base ^ u64::from(i).wrapping_mul(SEED_SPLIT)
}

/// Independent replications and their across-run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    pub runs: Vec<SimResult>,
    pub throughput: f64,
    pub drop_rate: f64,
    /// Across-replication standard error; the within-run batch-means error
    /// when there is a single replication.
    pub se_throughput: f64,
    pub se_drop: f64,
}

impl Replications {
    pub fn ci99_throughput(&self) -> f64 {
        Z99 * self.se_throughput
    }

    pub fn ci99_drop(&self) -> f64 {
        Z99 * self.se_drop
    }

    /// Counters summed over all replications.
    pub fn measured(&self) -> Counters {
        let mut acc = Counters::default();
        for r in &self.runs {
            add(&mut acc, &r.measured);
        }
        acc
    }
}

pub fn run_replications(config: &SimConfig, reps: u32) -> Result<Replications> {
    if reps == 0 {
        return Err(Error::domain("at least one replication is required"));
    }
    let runs: Vec<SimResult> = (0..reps)
        .into_par_iter()
        .map(|i| run_simulation(&config.clone().with_seed(replication_seed(config.seed, i))))
        .collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let mean = |f: fn(&SimResult) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let se = |f: fn(&SimResult) -> f64, m: f64| {
        (runs.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    };
    let throughput = mean(|r| r.throughput);
    let drop_rate = mean(|r| r.drop_rate);
    let (se_throughput, se_drop) = if runs.len() == 1 {
        (runs[0].se_throughput, runs[0].se_drop)
    } else {
        (se(|r| r.throughput, throughput), se(|r| r.drop_rate, drop_rate))
    };
    Ok(Replications { runs, throughput, drop_rate, se_throughput, se_drop })
}
