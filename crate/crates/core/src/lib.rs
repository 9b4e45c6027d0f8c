//! Reliable reinforcement learning.
//!
//! Instead of the expected return, the objective is the probability that the
//! return exceeds a threshold. Augmenting the state with the remaining
//! threshold turns that objective into a reach problem with a 0/1 reward, so
//! ordinary Q-learning applies. The crate provides:
//!
//! - [`augmented`]: augmented states, threshold clamping, terminal sets.
//! - [`learner`]: tabular reliable Q-learning over any [`Environment`].
//! - [`network`] and [`env`]: stochastic grid networks with Gamma link times
//!   and the routing environment built on them.
//! - [`oracle`]: an exact discretized solver for on-time arrival
//!   probabilities, used as the reference for learned tables.
//! - [`mdp`]: small finite MDPs in the general threshold form.
//! - [`analysis`]: error norms, reliability curves, price of reliability,
//!   policy maps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod augmented;
pub mod env;
pub mod error;
pub mod format;
pub mod learner;
pub mod mdp;
pub mod network;
pub mod oracle;
pub mod policy;
pub mod qtable;
pub mod special;

pub use analysis::{
    error_norms, policy_map, price_of_reliability, reliability_curve, PriceOfReliability,
    ReliabilityCurve, ValueGrid,
};
pub use augmented::{
    augmented_reward, clamp_threshold, is_terminal, AugmentedState, AugmentedTransition,
    Probability, ProblemKind, ThresholdBounds,
};
pub use env::{Environment, ForbiddenActions, RoutingEnv, DEFAULT_FORBIDDEN_PENALTY};
pub use error::{Error, Result};
pub use learner::{
    epsilon_greedy, greedy_policy, td_update, train, AlphaSchedule, Checkpoint, LearnerParams,
    TrainingLog,
};
pub use mdp::{Outcome, ThresholdMdp};
pub use network::{
    gamma_from_mean_sd, generate_grid, sample_travel_time, Edge, GammaParams, GridSpec,
    RoutingNetwork,
};
pub use oracle::{
    convolve_value, discretize_pdf, evaluate_policy, solve_sota, DiscretePmf, SotaProblem,
    ValueTable,
};
pub use policy::PolicyMap;
pub use qtable::{init_q_table, QTable};
