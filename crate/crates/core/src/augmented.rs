//! Augmented states and the reward/dynamics mapping of the reach formulation.
//!
//! A threshold-exceedance problem over states `s` becomes a reach problem over
//! pairs `(s, rho)`, where `rho` is the return still to be collected. The
//! augmented reward is binary: 1 on the terminal set, 0 elsewhere.

use crate::error::{Error, Result};

/// Closed interval `[lower, upper]` that the remaining threshold is clamped to.
///
/// For routing problems `lower = 0` and `upper = T`, the maximum time budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdBounds {
    lower: f64,
    upper: f64,
}

impl ThresholdBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::invalid(format!(
                "threshold bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if lower >= upper {
            return Err(Error::invalid(format!(
                "threshold bounds require lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `[0, horizon]`, the routing budget interval.
    pub fn budget(horizon: f64) -> Result<Self> {
        Self::new(0.0, horizon)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.lower && rho <= self.upper
    }
}

/// Which terminal set and augmented reward a problem uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// General form: terminal once the remaining threshold reaches the lower bound.
    Threshold,
    /// Routing form: terminal at the destination or when the budget is exhausted.
    Routing { destination: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState {
    pub base: usize,
    pub remaining: f64,
}

impl AugmentedState {
    pub fn new(base: usize, remaining: f64) -> Self {
        Self { base, remaining }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedTransition {
    pub from: AugmentedState,
    pub action: usize,
    /// Raw reward of the underlying problem (a link travel time in routing).
    pub observed_reward: f64,
    pub to: AugmentedState,
    pub terminal: bool,
    /// The step consumed more budget than was left. In routing this is a
    /// failure even when `to.base` is the destination.
    pub overrun: bool,
}

/// A probability-valued quantity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(format!("{value} is not a probability")));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `max(lower, min(upper, rho - reward))`.
pub fn clamp_threshold(rho: f64, reward: f64, bounds: ThresholdBounds) -> Result<f64> {
    if !rho.is_finite() || !reward.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite threshold update (rho={rho}, reward={reward})"
        )));
    }
    Ok((rho - reward).min(bounds.upper).max(bounds.lower))
}

/// Binary reward of the augmented formulation.
pub fn augmented_reward(state: AugmentedState, kind: ProblemKind, bounds: ThresholdBounds) -> u8 {
    let hit = match kind {
        ProblemKind::Threshold => state.remaining <= bounds.lower,
        ProblemKind::Routing { destination } => state.base == destination,
    };
    u8::from(hit)
}

/// Terminal test. Exact equality with the lower bound is reachable because
/// every update goes through [`clamp_threshold`].
pub fn is_terminal(state: AugmentedState, kind: ProblemKind, bounds: ThresholdBounds) -> bool {
    match kind {
        ProblemKind::Threshold => state.remaining == bounds.lower,
        ProblemKind::Routing { destination } => {
            state.base == destination || state.remaining == bounds.lower
        }
    }
}
