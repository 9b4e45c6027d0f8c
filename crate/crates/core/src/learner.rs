//! Tabular reliable Q-learning.
//!
//! The update carries no reward term:
//!
//! ```text
//! Q(s,a,rho) += alpha * (gamma * max_a' Q(s', a', rho') - Q(s,a,rho))
//! ```
//!
//! Success enters only through the pinned boundary cells of the table.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::error_norms;
use crate::augmented::{AugmentedState, AugmentedTransition};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::oracle::ValueTable;
use crate::policy::PolicyMap;
use crate::qtable::{init_q_table, QTable};

/// Step size per update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSchedule {
    /// `alpha` on every update.
    Constant,
    /// `alpha * n^(-power)` on the `n`-th update of a cell (`n` starts at 1).
    VisitCount { power: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerParams {
    pub alpha: f64,
    pub alpha_schedule: AlphaSchedule,
    pub gamma: f64,
    pub epsilon_start: f64,
    /// Value reached at the end of the linear decay and kept afterwards.
    pub epsilon_floor: f64,
    /// Fraction of the episodes over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub episodes: u64,
    pub max_steps: usize,
    /// Width of a threshold bin (the table resolution).
    pub bin_width: f64,
    /// Initial value of learnable cells.
    pub fill: f64,
    /// Episodes between log records; 0 picks `episodes / 200`.
    pub checkpoint_every: u64,
    pub seed: u64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            alpha_schedule: AlphaSchedule::Constant,
            gamma: 1.0,
            epsilon_start: 1.0,
            epsilon_floor: 0.01,
            epsilon_decay_fraction: 0.8,
            episodes: 100_000,
            max_steps: 30,
            bin_width: 1.0,
            fill: 0.0,
            checkpoint_every: 0,
            seed: 0,
        }
    }
}

impl LearnerParams {
    /// Published tabular settings for a 5x5 grid (`table1` preset).
    pub fn table1() -> Self {
        Self {
            alpha: 1e-4,
            gamma: 0.99,
            epsilon_start: 1.0,
            episodes: 20_000_000,
            max_steps: 30,
            bin_width: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if let AlphaSchedule::VisitCount { power } = self.alpha_schedule {
            if !(0.0..=1.0).contains(&power) {
                return bad(format!("alpha decay power must lie in [0, 1], got {power}"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_floor", self.epsilon_floor),
            ("epsilon_decay_fraction", self.epsilon_decay_fraction),
            ("fill", self.fill),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return bad(format!("bin width must be positive, got {}", self.bin_width));
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to the floor, then constant.
    pub fn epsilon_at(&self, episode: u64) -> f64 {
        let floor = self.epsilon_floor.min(self.epsilon_start);
        let span = self.epsilon_decay_fraction * self.episodes as f64;
        if span <= 0.0 {
            return floor;
        }
        let frac = (episode as f64 / span).min(1.0);
        self.epsilon_start + (floor - self.epsilon_start) * frac
    }

    fn checkpoint_interval(&self) -> u64 {
        if self.checkpoint_every > 0 {
            self.checkpoint_every
        } else {
            (self.episodes / 200).max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Episodes completed.
    pub episode: u64,
    pub sup_err: Option<f64>,
    pub l1_err: Option<f64>,
    /// Mean raw reward (link travel time) per step since the previous checkpoint.
    pub mean_reward: f64,
    /// Mean episode length since the previous checkpoint.
    pub mean_steps: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub checkpoints: Vec<Checkpoint>,
}

impl TrainingLog {
    /// CSV `episode,sup_err,l1_err,mean_reward,mean_steps`; error fields are
    /// empty when no reference was given.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "episode,sup_err,l1_err,mean_reward,mean_steps")?;
        let opt = |v: Option<f64>| v.map(|x| fmt_sig(x, 9)).unwrap_or_default();
        for c in &self.checkpoints {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.episode,
                opt(c.sup_err),
                opt(c.l1_err),
                fmt_sig(c.mean_reward, 9),
                fmt_sig(c.mean_steps, 9)
            )?;
        }
        Ok(())
    }
}

/// With probability `epsilon` a uniform draw from `allowed`, otherwise the
/// greedy action with smallest-index tie-break.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    q: &QTable,
    state: AugmentedState,
    allowed: &[usize],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if allowed.is_empty() {
        return Err(Error::invalid(format!("no action available at state {}", state.base)));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let explore = rng.random::<f64>() < epsilon;
    if explore {
        return Ok(allowed[rng.random_range(0..allowed.len())]);
    }
    let bin = q.bin_of(state.remaining);
    let mut best = allowed[0];
    let mut best_v = q.get(state.base, best, bin);
    for &a in &allowed[1..] {
        let v = q.get(state.base, a, bin);
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    Ok(best)
}

/// One reliable Q-learning update; returns the new entry.
///
/// A transition that overran the budget bootstraps from 0.
pub fn td_update(q: &mut QTable, tr: &AugmentedTransition, alpha: f64, gamma: f64) -> Result<f64> {
    let (s, a) = (tr.from.base, tr.action);
    let bin = q.bin_of(tr.from.remaining);
    if q.is_fixed(s, bin) {
        return Err(Error::ContractViolation(format!(
            "cell (state {s}, bin {bin}) is a fixed boundary value"
        )));
    }
    if !q.allowed(s).contains(&a) {
        return Err(Error::ForbiddenAction { state: s, action: a });
    }
    let target = if tr.overrun {
        0.0
    } else {
        gamma * q.state_value(tr.to.base, q.bin_of(tr.to.remaining))
    };
    let old = q.get(s, a, bin);
    let new = old + alpha * (target - old);
    q.set(s, a, bin, new);
    Ok(new)
}

/// Greedy action per `(state, bin)`; `None` on fixed boundary cells.
pub fn greedy_policy(q: &QTable) -> PolicyMap {
    let mut p = PolicyMap::new(q.state_count(), q.bin_count());
    for s in 0..q.state_count() {
        for b in 0..q.bin_count() {
            if !q.is_fixed(s, b) {
                p.set(s, b, q.greedy_action(s, b));
            }
        }
    }
    p
}

/// Run reliable Q-learning on `env`.
///
/// Episodes start at a uniformly drawn non-terminal base state with a budget
/// drawn uniformly from `(lower, upper]` (from the lattice points above
/// `lower` when the environment has a threshold grid). Fully determined by
/// `params.seed`.
pub fn train<E: Environment>(
    env: &E,
    params: &LearnerParams,
    reference: Option<&ValueTable>,
) -> Result<(QTable, TrainingLog)> {
    params.validate()?;
    if let Some(spacing) = env.threshold_grid() {
        if (spacing - params.bin_width).abs() > 1e-12 * spacing {
            return Err(Error::invalid(format!(
                "environment grid {spacing} differs from the table bin width {}",
                params.bin_width
            )));
        }
    }
    let mut q = init_q_table(env, params.bin_width, params.fill)?;
    if let Some(r) = reference {
        // fail fast rather than at the first checkpoint
        error_norms(&q, r)?;
    }
    if env.start_states().is_empty() {
        return Err(Error::invalid("environment has no non-terminal start state"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut visits = match params.alpha_schedule {
        AlphaSchedule::Constant => Vec::new(),
        AlphaSchedule::VisitCount { .. } => vec![0u32; q.entries().len()],
    };
    let bounds = env.bounds();
    let top_bin = q.bin_count() - 1;
    let interval = params.checkpoint_interval();
    let mut log = TrainingLog::default();
    let (mut win_episodes, mut win_steps, mut win_reward) = (0u64, 0u64, 0.0f64);

    for episode in 0..params.episodes {
        let epsilon = params.epsilon_at(episode);
        let starts = env.start_states();
        let base = starts[rng.random_range(0..starts.len())];
        let remaining = match env.threshold_grid() {
            Some(_) => q.bin_value(rng.random_range(1..=top_bin)),
            None => {
                let u: f64 = rng.random();
                bounds.upper() - u * (bounds.upper() - bounds.lower())
            }
        };
        let mut state = AugmentedState::new(base, remaining);

        let mut steps = 0;
        while steps < params.max_steps {
            let action = epsilon_greedy(&q, state, env.allowed_actions(state.base), epsilon, &mut rng)?;
            let tr = env.step(state, action, &mut rng)?;
            let alpha = match params.alpha_schedule {
                AlphaSchedule::Constant => params.alpha,
                AlphaSchedule::VisitCount { power } => {
                    let idx = q.index(state.base, action, q.bin_of(state.remaining));
                    visits[idx] = visits[idx].saturating_add(1);
                    params.alpha * f64::from(visits[idx]).powf(-power)
                }
            };
            td_update(&mut q, &tr, alpha, params.gamma)?;
            steps += 1;
            win_reward += tr.observed_reward;
            state = tr.to;
            if tr.terminal {
                break;
            }
        }
        win_episodes += 1;
        win_steps += steps as u64;

        let done = episode + 1;
        if done % interval == 0 || done == params.episodes {
            let (sup_err, l1_err) = match reference {
                Some(r) => {
                    let (s, l) = error_norms(&q, r)?;
                    (Some(s), Some(l))
                }
                None => (None, None),
            };
            log.checkpoints.push(Checkpoint {
                episode: done,
                sup_err,
                l1_err,
                mean_reward: if win_steps > 0 { win_reward / win_steps as f64 } else { 0.0 },
                mean_steps: win_steps as f64 / win_episodes as f64,
            });
            (win_episodes, win_steps, win_reward) = (0, 0, 0.0);
        }
    }
    Ok((q, log))
}
