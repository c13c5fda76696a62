//! Budgeted explore-then-commit.
//!
//! Exploration cycles the arms in index order until the next exploration pull
//! would push cumulative spend past `explore_fraction * B`; the first full sweep
//! is always completed so every arm has an estimate. After that the policy
//! commits permanently to the empirically best affordable arm.

use super::{greedy_arm, GreedyRanking, PolicyState, Selection};
use crate::model::{ArmId, BudgetLedger};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EtcProgress {
    next_in_cycle: usize,
    committed: bool,
    exploration_rounds: u64,
}

impl EtcProgress {
    pub fn committed(&self) -> bool {
        self.committed
    }

    pub fn exploration_rounds(&self) -> u64 {
        self.exploration_rounds
    }
}

pub fn etc_select(
    state: &PolicyState,
    ledger: &BudgetLedger,
    costs: &[f64],
    explore_fraction: f64,
    ranking: GreedyRanking,
    progress: &mut EtcProgress,
) -> Selection {
    let n = state.num_arms();
    if !progress.committed {
        let threshold = explore_fraction * ledger.initial();
        // next affordable arm in the cycle
        let candidate = (0..n)
            .map(|k| ArmId::from_index((progress.next_in_cycle + k) % n))
            .find(|&a| ledger.can_afford(a));
        match candidate {
            None => return Selection::Exhausted,
            Some(arm) => {
                let sweeping = state.first_unpulled().is_some();
                if sweeping || ledger.total_spent() + ledger.round_cost(arm) <= threshold {
                    progress.next_in_cycle = (arm.index() + 1) % n;
                    progress.exploration_rounds += 1;
                    return Selection::Arm(arm);
                }
                progress.committed = true;
            }
        }
    }
    greedy_arm(state, ledger, costs, ranking).map_or(Selection::Exhausted, Selection::Arm)
}
