//! Physical-layer success probabilities under Rayleigh fading with an SINR
//! capture threshold.
//!
//! All quantities are linear scale. Decibel inputs go through [`convert_units`]
//! once, at construction.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which decibel scale a value is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbKind {
    /// dBm to milliwatts.
    PowerDbm,
    /// dB to a dimensionless linear ratio.
    RatioDb,
}

/// Converts a dBm power to mW or a dB ratio to linear scale.
///
/// Both scales share the same map `10^(x/10)`; the kind only documents intent
/// at the call site.
pub fn convert_units<T: Real>(value: T, kind: DbKind) -> T {
    match kind {
        DbKind::PowerDbm | DbKind::RatioDb => T::lit(10.0).powf(value / T::lit(10.0)),
    }
}

/// Received-power factor `s = ptx * r^(-alpha)`.
pub fn received_power_factor<T: Real>(ptx: T, r: T, alpha: T) -> Result<T> {
    if !(ptx > T::zero()) {
        return Err(Error::domain(format!("transmit power must be positive, got {ptx}")));
    }
    if !(r > T::zero()) {
        return Err(Error::domain(format!("distance must be positive, got {r}")));
    }
    Ok(ptx * r.powf(-alpha))
}

/// Per-node physical-layer parameters, linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    gamma: T,
    eta: T,
    ptx: T,
    v: T,
    r: T,
    alpha: T,
    s: T,
}

impl<T: Real> ChannelParams<T> {
    /// Builds parameters from linear-scale values: SINR threshold `gamma`,
    /// noise power `eta` (mW), transmit power `ptx` (mW), fading scale `v`,
    /// distance `r` (m) and path-loss exponent `alpha`.
    pub fn new(gamma: T, eta: T, ptx: T, v: T, r: T, alpha: T) -> Result<Self> {
        if !(gamma > T::zero()) {
            return Err(Error::domain(format!("SINR threshold must be positive, got {gamma}")));
        }
        if !(eta >= T::zero()) {
            return Err(Error::domain(format!("noise power must be non-negative, got {eta}")));
        }
        if !(v > T::zero()) {
            return Err(Error::domain(format!("fading parameter must be positive, got {v}")));
        }
        if !(alpha >= T::lit(2.0)) {
            return Err(Error::domain(format!("path-loss exponent must be >= 2, got {alpha}")));
        }
        let s = received_power_factor(ptx, r, alpha)?;
        Ok(Self { gamma, eta, ptx, v, r, alpha, s })
    }

    /// Builds parameters with the threshold in dB and the noise power in dBm.
    pub fn from_db(gamma_db: T, noise_dbm: T, ptx: T, v: T, r: T, alpha: T) -> Result<Self> {
        Self::new(
            convert_units(gamma_db, DbKind::RatioDb),
            convert_units(noise_dbm, DbKind::PowerDbm),
            ptx,
            v,
            r,
            alpha,
        )
    }

    /// The reference operating point: 0 dB threshold, -115.4 dBm noise,
    /// 0.01 mW transmit power, unit fading scale, 100 m, exponent 4.5.
    pub fn reference() -> Self {
        Self::from_db(
            T::zero(),
            T::lit(-115.4),
            T::lit(0.01),
            T::one(),
            T::lit(100.0),
            T::lit(4.5),
        )
        .expect("reference parameters are valid")
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
    pub fn eta(&self) -> T {
        self.eta
    }
    pub fn ptx(&self) -> T {
        self.ptx
    }
    pub fn v(&self) -> T {
        self.v
    }
    pub fn r(&self) -> T {
        self.r
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    /// Received-power factor, always `ptx * r^(-alpha)`.
    pub fn s(&self) -> T {
        self.s
    }

    fn mean_rx(&self) -> T {
        self.v * self.s
    }
}

/// Success probability with no concurrent transmitters: `exp(-gamma*eta/(v*s))`.
pub fn success_prob_solo<T: Real>(params: &ChannelParams<T>) -> T {
    success_prob_mpr(params, &[])
}

/// Success probability of `target` while every node in `interferers`
/// transmits in the same slot.
pub fn success_prob_mpr<T: Real>(target: &ChannelParams<T>, interferers: &[ChannelParams<T>]) -> T {
    let own = target.mean_rx();
    let noise_term = (-(target.gamma * target.eta) / own).exp();
    interferers
        .iter()
        .fold(noise_term, |p, k| p / (T::one() + target.gamma * k.mean_rx() / own))
}

/// Success probability of a tagged node indexed by the number of other
/// concurrent transmitters: `p[k]` for `k = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTable<T> {
    p: Vec<T>,
}

impl<T: Real> SuccessTable<T> {
    /// Wraps explicit values. They must lie in [0, 1] and be nonincreasing.
    pub fn from_values(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::domain("success table must have at least one entry"));
        }
        if let Some(x) = p.iter().find(|x| !crate::scalar::is_probability(**x)) {
            return Err(Error::domain(format!("success probability {x} outside [0, 1]")));
        }
        if p.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("success table must be nonincreasing in the interferer count"));
        }
        Ok(Self { p })
    }

    pub fn values(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Success probability with `others` concurrent transmitters.
    pub fn get(&self, others: usize) -> Option<T> {
        self.p.get(others).copied()
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> SuccessTable<U> {
        SuccessTable { p: self.p.iter().map(|&x| f(x)).collect() }
    }
}

/// Table for `n_nodes` identical nodes: `p[k] = p0 / (1 + gamma)^k`.
pub fn symmetric_success_table<T: Real>(params: &ChannelParams<T>, n_nodes: usize) -> Result<SuccessTable<T>> {
    symmetric_table_from_solo(success_prob_solo(params), params.gamma, n_nodes)
}

/// Same construction with an injected solo probability `p0`, e.g. a rounded
/// operating point.
pub fn symmetric_table_from_solo<T: Real>(p0: T, gamma: T, n_nodes: usize) -> Result<SuccessTable<T>> {
    if n_nodes == 0 {
        return Err(Error::domain("at least one node is required"));
    }
    if !crate::scalar::is_probability(p0) || !(gamma >= T::zero()) {
        return Err(Error::domain(format!("need p0 in [0, 1] and gamma >= 0, got p0 = {p0}, gamma = {gamma}")));
    }
    let step = T::one() + gamma;
    let mut p = Vec::with_capacity(n_nodes);
    let mut cur = p0;
    for _ in 0..n_nodes {
        p.push(cur);
        cur = cur / step;
    }
    Ok(SuccessTable { p })
}
