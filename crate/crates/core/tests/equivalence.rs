//! The augmented fixed point against a direct evaluation of the original
//! threshold problem: enumerate trajectories, track the accumulated reward,
//! and score `gamma^tau` for the first step `tau` at which it reaches the
//! threshold.

mod common;

use common::{equivalence_gap, small_mdp_outcomes};
use r2l_core::*;

const GAMMA: f64 = 0.8;

#[test]
fn augmented_value_iteration_matches_trajectory_enumeration() {
    for gamma in [GAMMA, 0.5, 0.95] {
        let gap = equivalence_gap(gamma);
        assert!(gap < 1e-9, "gamma {gamma}: sup-norm gap {gap}");
    }
}

#[test]
fn augmented_table_is_a_complementary_cdf_in_rho() {
    let bounds = ThresholdBounds::new(0.0, 6.0).unwrap();
    let mdp = ThresholdMdp::new(2, 2, small_mdp_outcomes(), bounds).unwrap();
    let q = mdp.solve_augmented(1.0, GAMMA, 1e-14, 10_000).unwrap();
    for s in 0..2 {
        assert_eq!(q.state_value(s, 0), 1.0);
        for a in 0..2 {
            for bin in 1..q.bin_count() {
                assert!(q.get(s, a, bin) <= q.get(s, a, bin - 1) + 1e-12);
            }
        }
    }
}
