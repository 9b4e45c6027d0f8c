//! Environments over augmented states.

use rand::Rng;
use rand_distr::Gamma;

use crate::augmented::{
    clamp_threshold, is_terminal, AugmentedState, AugmentedTransition, ProblemKind, ThresholdBounds,
};
use crate::error::{Error, Result};
use crate::network::{draw, RoutingNetwork};
use crate::policy::PolicyMap;

/// Penalty time charged for a forbidden move in [`ForbiddenActions::Penalty`] mode.
pub const DEFAULT_FORBIDDEN_PENALTY: f64 = 100.0;

/// An episodic problem whose state has been augmented with the remaining threshold.
pub trait Environment {
    fn kind(&self) -> ProblemKind;

    fn bounds(&self) -> ThresholdBounds;

    fn state_count(&self) -> usize;

    fn action_count(&self) -> usize;

    /// Actions the learner may choose at `state`, ascending.
    fn allowed_actions(&self, state: usize) -> &[usize];

    /// Base states an episode may start from.
    fn start_states(&self) -> &[usize];

    /// Lattice spacing of the remaining threshold, when the environment keeps
    /// it on `lower + k * spacing`.
    fn threshold_grid(&self) -> Option<f64>;

    fn step<R: Rng + ?Sized>(
        &self,
        state: AugmentedState,
        action: usize,
        rng: &mut R,
    ) -> Result<AugmentedTransition>;
}

/// Round `rho` down onto the lattice `lower + k * spacing`.
pub(crate) fn snap_down(rho: f64, bounds: ThresholdBounds, spacing: f64) -> f64 {
    let k = ((rho - bounds.lower()) / spacing + 1e-9).floor().max(0.0);
    bounds.lower() + k * spacing
}

/// How moves toward non-existent successors are treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForbiddenActions {
    /// Only real successors are ever offered to the learner.
    Mask,
    /// Every action slot is offered; a missing successor keeps the agent in
    /// place and charges `penalty` time units.
    Penalty(f64),
}

/// Routing on a [`RoutingNetwork`]: the action is a successor slot, the
/// next node equals the chosen successor, and the remaining budget shrinks
/// by the sampled link travel time.
///
/// Action `k` at node `i` is the `k`-th successor of `i` in ascending node order.
#[derive(Debug, Clone)]
pub struct RoutingEnv {
    net: RoutingNetwork,
    bounds: ThresholdBounds,
    forbidden: ForbiddenActions,
    grid: Option<f64>,
    action_count: usize,
    allowed: Vec<Vec<usize>>,
    starts: Vec<usize>,
    // samplers[i][k] for the k-th successor of i
    samplers: Vec<Vec<Gamma<f64>>>,
}

impl RoutingEnv {
    /// Environment with continuous budgets and action masking.
    pub fn new(net: RoutingNetwork, horizon: f64) -> Result<Self> {
        let bounds = ThresholdBounds::budget(horizon)?;
        let action_count = net.max_out_degree().max(1);
        let samplers = (0..net.node_count())
            .map(|i| net.out_edges(i).map(|e| e.gamma().sampler()).collect())
            .collect();
        let starts = (0..net.node_count()).filter(|&i| i != net.destination()).collect();
        let mut env = Self {
            net,
            bounds,
            forbidden: ForbiddenActions::Mask,
            grid: None,
            action_count,
            allowed: Vec::new(),
            starts,
            samplers,
        };
        env.rebuild_allowed();
        Ok(env)
    }

    /// Keep budgets on the lattice `k * spacing`, rounding down after each step.
    pub fn with_budget_grid(mut self, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing <= self.bounds.upper()) {
            return Err(Error::invalid(format!("budget grid spacing {spacing} out of range")));
        }
        self.grid = Some(spacing);
        Ok(self)
    }

    pub fn with_forbidden_actions(mut self, mode: ForbiddenActions) -> Result<Self> {
        if let ForbiddenActions::Penalty(p) = mode {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("penalty must be finite and non-negative, got {p}")));
            }
        }
        self.forbidden = mode;
        self.rebuild_allowed();
        Ok(self)
    }

    fn rebuild_allowed(&mut self) {
        let d = self.net.destination();
        self.allowed = (0..self.net.node_count())
            .map(|i| match self.forbidden {
                ForbiddenActions::Mask => (0..self.net.out_degree(i)).collect(),
                ForbiddenActions::Penalty(_) if i == d && self.net.out_degree(i) == 0 => Vec::new(),
                ForbiddenActions::Penalty(_) => (0..self.action_count).collect(),
            })
            .collect();
    }

    pub fn network(&self) -> &RoutingNetwork {
        &self.net
    }

    pub fn horizon(&self) -> f64 {
        self.bounds.upper()
    }

    pub fn forbidden_actions(&self) -> ForbiddenActions {
        self.forbidden
    }

    /// Successor node reached by action `slot` at `node`, if it exists.
    pub fn successor(&self, node: usize, slot: usize) -> Option<usize> {
        self.net.out_edges(node).nth(slot).map(|e| e.to)
    }

    /// Translate an action-index policy into a successor-node policy.
    pub fn successor_policy(&self, policy: &PolicyMap) -> PolicyMap {
        let mut out = policy.clone();
        for node in 0..policy.node_count() {
            for bin in 0..policy.bin_count() {
                let choice = policy
                    .get(node, bin)
                    .map(|slot| self.successor(node, slot).unwrap_or(node));
                out.set(node, bin, choice);
            }
        }
        out
    }
}

impl Environment for RoutingEnv {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Routing {
            destination: self.net.destination(),
        }
    }

    fn bounds(&self) -> ThresholdBounds {
        self.bounds
    }

    fn state_count(&self) -> usize {
        self.net.node_count()
    }

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn allowed_actions(&self, state: usize) -> &[usize] {
        &self.allowed[state]
    }

    fn start_states(&self) -> &[usize] {
        &self.starts
    }

    fn threshold_grid(&self) -> Option<f64> {
        self.grid
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: AugmentedState,
        action: usize,
        rng: &mut R,
    ) -> Result<AugmentedTransition> {
        if state.base >= self.net.node_count() || !self.bounds.contains(state.remaining) {
            return Err(Error::invalid(format!("state {state:?} outside the environment")));
        }
        if is_terminal(state, self.kind(), self.bounds) {
            return Err(Error::invalid(format!("cannot step from terminal state {state:?}")));
        }
        let (next, w) = match self.samplers[state.base].get(action) {
            Some(dist) => (self.successor(state.base, action).expect("slot exists"), draw(dist, rng)),
            None => match self.forbidden {
                ForbiddenActions::Penalty(p) if action < self.action_count => (state.base, p),
                _ => {
                    return Err(Error::ForbiddenAction {
                        state: state.base,
                        action,
                    })
                }
            },
        };
        let mut remaining = clamp_threshold(state.remaining, w, self.bounds)?;
        if let Some(spacing) = self.grid {
            remaining = snap_down(remaining, self.bounds, spacing);
        }
        let to = AugmentedState::new(next, remaining);
        Ok(AugmentedTransition {
            from: state,
            action,
            observed_reward: w,
            to,
            terminal: is_terminal(to, self.kind(), self.bounds),
            overrun: state.remaining - w < 0.0,
        })
    }
}
