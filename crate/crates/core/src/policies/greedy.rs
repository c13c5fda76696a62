//! Epsilon-greedy baselines.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::{argmax_arm, EpsilonRule, GreedyRanking, PolicyError, PolicyState, Selection};
use crate::model::{ArmId, BudgetLedger};
use crate::streams::open_unit;

/// Empirically best affordable arm under `ranking`. Unpulled arms are skipped.
pub fn greedy_arm(
    state: &PolicyState,
    ledger: &BudgetLedger,
    costs: &[f64],
    ranking: GreedyRanking,
) -> Option<ArmId> {
    let pulled = ledger.feasible_arms().filter(|&a| state.pulls(a) > 0);
    argmax_arm(pulled, |arm| {
        let mean = state.empirical_mean(arm).expect("pulled arm has a mean");
        match ranking {
            GreedyRanking::UtilityCostRatio => mean.ln() / costs[arm.index()],
            GreedyRanking::RawMean => mean,
        }
    })
}

/// With probability `epsilon` a uniformly random affordable arm, otherwise the
/// greedy choice. One coin is drawn per call; the arm draw happens only when
/// exploring.
pub fn epsilon_greedy_select(
    state: &PolicyState,
    ledger: &BudgetLedger,
    costs: &[f64],
    rule: EpsilonRule,
    ranking: GreedyRanking,
    rng: &mut ChaCha8Rng,
) -> Result<Selection, PolicyError> {
    if let Some(arm) = state.first_unpulled() {
        return Err(PolicyError::NotInitialized(arm));
    }
    let feasible: Vec<ArmId> = ledger.feasible_arms().collect();
    if feasible.is_empty() {
        return Ok(Selection::Exhausted);
    }
    let epsilon = rule.probability(state.t() + 1);
    let arm = if open_unit(rng.next_u64()) < epsilon {
        feasible[rng.random_range(0..feasible.len())]
    } else {
        greedy_arm(state, ledger, costs, ranking).expect("feasible arms are initialized")
    };
    Ok(Selection::Arm(arm))
}
