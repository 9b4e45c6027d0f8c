//! Finite MDPs with a discrete joint law over `(next state, reward)`, posed as
//! threshold-exceedance problems.

use rand::Rng;

use crate::augmented::{
    clamp_threshold, is_terminal, AugmentedState, AugmentedTransition, ProblemKind, ThresholdBounds,
};
use crate::env::{snap_down, Environment};
use crate::error::{Error, Result};
use crate::qtable::QTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    pub next_state: usize,
    pub reward: f64,
}

/// General-form environment: terminal once the remaining threshold hits the lower bound.
#[derive(Debug, Clone)]
pub struct ThresholdMdp {
    states: usize,
    actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    bounds: ThresholdBounds,
    grid: Option<f64>,
    allowed: Vec<Vec<usize>>,
    starts: Vec<usize>,
}

impl ThresholdMdp {
    /// `outcomes[s * actions + a]` lists the joint law of `(s', r)` after `(s, a)`.
    pub fn new(
        states: usize,
        actions: usize,
        outcomes: Vec<Vec<Outcome>>,
        bounds: ThresholdBounds,
    ) -> Result<Self> {
        if states == 0 || actions == 0 {
            return Err(Error::invalid("MDP needs at least one state and one action"));
        }
        if outcomes.len() != states * actions {
            return Err(Error::invalid(format!(
                "expected {} outcome lists, got {}",
                states * actions,
                outcomes.len()
            )));
        }
        for (k, list) in outcomes.iter().enumerate() {
            let total: f64 = list.iter().map(|o| o.probability).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("outcomes of pair {k} sum to {total}")));
            }
            if list
                .iter()
                .any(|o| o.probability < 0.0 || o.next_state >= states || !o.reward.is_finite())
            {
                return Err(Error::invalid(format!("malformed outcome for pair {k}")));
            }
        }
        Ok(Self {
            states,
            actions,
            outcomes,
            bounds,
            grid: None,
            allowed: vec![(0..actions).collect(); states],
            starts: (0..states).collect(),
        })
    }

    pub fn with_threshold_grid(mut self, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(format!("grid spacing {spacing} must be positive")));
        }
        self.grid = Some(spacing);
        Ok(self)
    }

    pub fn outcomes(&self, state: usize, action: usize) -> &[Outcome] {
        &self.outcomes[state * self.actions + action]
    }

    /// Value iteration on the augmented problem:
    /// `Q(s,a,rho) = gamma * Σ p(s',r | s,a) max_a' Q(s', a', clamp(rho - r))`,
    /// with `Q(·,·,lower) = 1`.
    pub fn solve_augmented(&self, bin_width: f64, gamma: f64, tol: f64, max_sweeps: usize) -> Result<QTable> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!("discount {gamma} outside (0, 1]")));
        }
        let mut q = QTable::new(
            ProblemKind::Threshold,
            self.bounds,
            bin_width,
            self.actions,
            self.allowed.clone(),
            0.0,
        )?;
        // successor bin of every (bin, outcome) pair is fixed; precompute it
        let bins = q.bin_count();
        let mut next_bins: Vec<Vec<usize>> = Vec::with_capacity(self.outcomes.len());
        for list in &self.outcomes {
            for o in list {
                let row = (0..bins)
                    .map(|b| {
                        let rho = clamp_threshold(q.bin_value(b), o.reward, self.bounds)?;
                        Ok(q.bin_of(rho))
                    })
                    .collect::<Result<Vec<_>>>()?;
                next_bins.push(row);
            }
        }
        let mut residual = f64::INFINITY;
        for _ in 0..max_sweeps {
            let prev = q.clone();
            residual = 0.0;
            let mut flat = 0;
            for s in 0..self.states {
                for a in 0..self.actions {
                    let list = self.outcomes(s, a);
                    #[allow(clippy::needless_range_loop)]
                    for b in 1..bins {
                        let mut acc = 0.0;
                        for (k, o) in list.iter().enumerate() {
                            acc += o.probability * prev.state_value(o.next_state, next_bins[flat + k][b]);
                        }
                        let v = gamma * acc;
                        residual = f64::max(residual, (v - prev.get(s, a, b)).abs());
                        q.set(s, a, b, v);
                    }
                    flat += list.len();
                }
            }
            if residual < tol {
                return Ok(q);
            }
        }
        Err(Error::NotConverged {
            sweeps: max_sweeps,
            residual,
        })
    }
}

impl Environment for ThresholdMdp {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Threshold
    }

    fn bounds(&self) -> ThresholdBounds {
        self.bounds
    }

    fn state_count(&self) -> usize {
        self.states
    }

    fn action_count(&self) -> usize {
        self.actions
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
        if state.base >= self.states || !self.bounds.contains(state.remaining) {
            return Err(Error::invalid(format!("state {state:?} outside the MDP")));
        }
        if action >= self.actions {
            return Err(Error::ForbiddenAction {
                state: state.base,
                action,
            });
        }
        if is_terminal(state, ProblemKind::Threshold, self.bounds) {
            return Err(Error::invalid(format!("cannot step from terminal state {state:?}")));
        }
        let list = self.outcomes(state.base, action);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = list[list.len() - 1];
        for o in list {
            acc += o.probability;
            if u < acc {
                pick = *o;
                break;
            }
        }
        let mut remaining = clamp_threshold(state.remaining, pick.reward, self.bounds)?;
        if let Some(spacing) = self.grid {
            remaining = snap_down(remaining, self.bounds, spacing);
        }
        let to = AugmentedState::new(pick.next_state, remaining);
        Ok(AugmentedTransition {
            from: state,
            action,
            observed_reward: pick.reward,
            to,
            terminal: is_terminal(to, ProblemKind::Threshold, self.bounds),
            overrun: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coin() -> ThresholdMdp {
        // one state, one action, reward 1 with probability 1/2, else 0
        let o = vec![vec![
            Outcome { probability: 0.5, next_state: 0, reward: 1.0 },
            Outcome { probability: 0.5, next_state: 0, reward: 0.0 },
        ]];
        ThresholdMdp::new(1, 1, o, ThresholdBounds::new(0.0, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn geometric_fixed_point() {
        // q(1) = g(0.5 + 0.5 q(1))  =>  q(1) = 0.5g / (1 - 0.5g)
        let g = 0.9;
        let q = coin().solve_augmented(1.0, g, 1e-13, 10_000).unwrap();
        let q1 = 0.5 * g / (1.0 - 0.5 * g);
        assert!((q.get(0, 0, 1) - q1).abs() < 1e-12);
        let q2 = 0.5 * g * q1 / (1.0 - 0.5 * g);
        assert!((q.get(0, 0, 2) - q2).abs() < 1e-12);
        assert_eq!(q.get(0, 0, 0), 1.0);
    }

    #[test]
    fn validation() {
        let bad = vec![vec![Outcome { probability: 0.7, next_state: 0, reward: 1.0 }]];
        assert!(ThresholdMdp::new(1, 1, bad, ThresholdBounds::new(0.0, 1.0).unwrap()).is_err());
        assert!(coin().solve_augmented(1.0, 1.5, 1e-9, 10).is_err());
        // undiscounted with a zero-reward self loop converges only in the limit
        assert!(matches!(coin().solve_augmented(1.0, 1.0, 1e-12, 5), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn step_reaches_lower_bound() {
        let mdp = coin();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = AugmentedState::new(0, 3.0);
        for _ in 0..1000 {
            let tr = mdp.step(s, 0, &mut rng).unwrap();
            assert_eq!(tr.to.remaining, (s.remaining - tr.observed_reward).max(0.0));
            s = tr.to;
            if tr.terminal {
                assert_eq!(s.remaining, 0.0);
                return;
            }
        }
        panic!("never terminated");
    }
}
