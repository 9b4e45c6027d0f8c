#![allow(dead_code)]

use std::collections::HashMap;

use r2l_core::*;

pub fn outcome(probability: f64, next_state: usize, reward: f64) -> Outcome {
    Outcome { probability, next_state, reward }
}

/// Two states, two actions, rewards in {0, 2}.
pub fn small_mdp_outcomes() -> Vec<Vec<Outcome>> {
    vec![
        vec![outcome(0.5, 1, 2.0), outcome(0.5, 0, 0.0)],
        vec![outcome(0.9, 1, 0.0), outcome(0.1, 0, 2.0)],
        vec![outcome(0.3, 1, 2.0), outcome(0.7, 0, 0.0)],
        vec![outcome(0.6, 0, 2.0), outcome(0.4, 1, 0.0)],
    ]
}

/// Direct evaluation of the threshold problem: walk trajectories, track the
/// accumulated reward and score `gamma^tau` for the first step `tau` at which
/// it reaches the threshold. Actions are chosen per history.
pub struct Enumerator {
    outcomes: Vec<Vec<Outcome>>,
    actions: usize,
    gamma: f64,
    threshold: f64,
    memo: HashMap<(usize, u64, usize), f64>,
}

impl Enumerator {
    pub fn new(outcomes: Vec<Vec<Outcome>>, actions: usize, gamma: f64, threshold: f64) -> Self {
        Self { outcomes, actions, gamma, threshold, memo: HashMap::new() }
    }

    fn best(&mut self, state: usize, gained: f64, left: usize) -> f64 {
        if gained >= self.threshold {
            return 1.0;
        }
        if left == 0 {
            return 0.0;
        }
        let key = (state, gained.to_bits(), left);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let mut best = 0.0f64;
        for a in 0..self.actions {
            let v = self.expand(state, a, gained, left);
            best = best.max(v);
        }
        self.memo.insert(key, best);
        best
    }

    fn expand(&mut self, state: usize, action: usize, gained: f64, left: usize) -> f64 {
        let branches = self.outcomes[state * self.actions + action].clone();
        let mut total = 0.0;
        for o in branches {
            total += o.probability * self.best(o.next_state, gained + o.reward, left - 1);
        }
        self.gamma * total
    }

    /// Value of taking `action` first, over trajectories of at most `horizon` steps.
    pub fn action_value(&mut self, state: usize, action: usize, horizon: usize) -> f64 {
        self.expand(state, action, 0.0, horizon)
    }
}

/// Sup-norm gap between augmented value iteration and enumeration on the
/// small MDP, with truncation below 1e-13.
pub fn equivalence_gap(gamma: f64) -> f64 {
    let bounds = ThresholdBounds::new(0.0, 6.0).unwrap();
    let mdp = ThresholdMdp::new(2, 2, small_mdp_outcomes(), bounds).unwrap();
    let q = mdp.solve_augmented(1.0, gamma, 1e-14, 10_000).unwrap();
    let horizon = (1e-13f64.ln() / gamma.ln()).ceil() as usize;
    let mut sup = 0.0f64;
    for bin in 1..q.bin_count() {
        let mut oracle = Enumerator::new(small_mdp_outcomes(), 2, gamma, q.bin_value(bin));
        for s in 0..2 {
            for a in 0..2 {
                sup = sup.max((q.get(s, a, bin) - oracle.action_value(s, a, horizon)).abs());
            }
        }
    }
    sup
}

/// Origin 0, destination 1. Path A is the direct link (short, noisy); path B
/// goes through node 2 (longer, nearly deterministic).
pub fn two_path() -> RoutingNetwork {
    let edges = vec![
        Edge { from: 0, to: 1, mean: 5.0, sd: 2.0 },
        Edge { from: 0, to: 2, mean: 3.0, sd: 0.1 },
        Edge { from: 2, to: 1, mean: 3.0, sd: 0.1 },
    ];
    RoutingNetwork::new(3, 1, edges).unwrap()
}

/// First bin from which `node` always picks `successor`.
pub fn switch_bin(policy: &PolicyMap, node: usize, successor: usize) -> Option<usize> {
    let bins = policy.bin_count();
    let mut k = bins;
    while k > 1 && policy.get(node, k - 1) == Some(successor) {
        k -= 1;
    }
    (k < bins).then_some(k)
}
