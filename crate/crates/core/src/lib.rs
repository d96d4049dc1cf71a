//! Deadline-constrained slotted ALOHA with limited retransmissions.
//!
//! The analytic path is generic over the scalar type (`f32`/`f64`):
//!
//! * [`channel`]: SINR-threshold success probabilities under Rayleigh fading.
//! * [`service`]: head-of-line service probability of the tagged node among
//!   backlogged competitors, for collision and multi-packet reception channels.
//! * [`sdp`]: delivery probability of a single packet within its deadline and
//!   retransmission budget.
//! * [`dtmc`]: head-of-line Markov chains for buffered Bernoulli traffic,
//!   their stationary distribution, throughput, drop rate and the numerical
//!   search for the best transmission probability.
//!
//! [`sim`] is a slot-level Monte-Carlo simulator used to validate the chains,
//! and [`cli`] drives configuration, sweeps and CSV output.
//!
//! The type aliases at the crate root fix the scalar to `f64`, with `*F32`
//! variants for single precision.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Matrix and table code reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod cli;
pub mod csv_out;
pub mod dtmc;
mod error;
pub mod scalar;
pub mod sdp;
pub mod service;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub use channel::DbKind;
pub use dtmc::{ChainState, Objective, Regime, SolveMethod};
pub use sim::{SimConfig, SimResult};

pub type ChannelParams = channel::ChannelParams<f64>;
pub type SuccessTable = channel::SuccessTable<f64>;
pub type Scenario = service::Scenario<f64>;
pub type ServiceModel = service::ServiceModel<f64>;
pub type SdpQuery = sdp::SdpQuery<f64>;
pub type MarkovModel = dtmc::MarkovModel<f64>;
pub type SteadyState = dtmc::SteadyState<f64>;
pub type TransitionMatrix = dtmc::TransitionMatrix<f64>;
pub type Analysis = dtmc::Analysis<f64>;
pub type Optimum = dtmc::Optimum<f64>;

pub type ChannelParamsF32 = channel::ChannelParams<f32>;
pub type SuccessTableF32 = channel::SuccessTable<f32>;
pub type ScenarioF32 = service::Scenario<f32>;
pub type MarkovModelF32 = dtmc::MarkovModel<f32>;
pub type SteadyStateF32 = dtmc::SteadyState<f32>;
