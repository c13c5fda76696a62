//! Budgeted-UCB: pull every arm once, then repeatedly take the affordable arm
//! with the largest `ln(u_bar_i) / c_i`.

use super::{argmax_arm, ucb_bonus, PolicyError, PolicyState, Selection};
use crate::model::BudgetLedger;

/// Confidence radius `sqrt(2 ln t / (T_i M))`.
pub fn ucb_epsilon(t: u64, pulls: u64, num_users: usize) -> Result<f64, PolicyError> {
    assert!(t >= 1 && num_users >= 1);
    if pulls == 0 {
        return Err(PolicyError::ArmNeverPulled);
    }
    Ok(ucb_bonus(t, pulls, num_users))
}

/// Running mean after folding one batch of `M` feedbacks into a mean over
/// `prev_pulls * M` samples. `prev_mean` is ignored when `prev_pulls == 0`.
pub fn update_empirical_mean(prev_mean: f64, prev_pulls: u64, feedback: &[f64]) -> f64 {
    let m = feedback.len() as f64;
    let batch: f64 = feedback.iter().sum();
    if prev_pulls == 0 {
        return batch / m;
    }
    let seen = prev_pulls as f64 * m;
    (prev_mean * seen + batch) / (seen + m)
}

/// Initialization stage: the lowest-numbered arm not yet pulled.
pub fn bucb_initialize_step(state: &PolicyState, ledger: &BudgetLedger) -> Selection {
    match state.first_unpulled() {
        Some(arm) if ledger.can_afford(arm) => Selection::Arm(arm),
        _ => Selection::Exhausted,
    }
}

/// Arm-selection stage.
pub fn bucb_select(
    state: &PolicyState,
    ledger: &BudgetLedger,
    costs: &[f64],
) -> Result<Selection, PolicyError> {
    if let Some(arm) = state.first_unpulled() {
        return Err(PolicyError::NotInitialized(arm));
    }
    if !ledger.has_feasible_arm() {
        return Ok(Selection::Exhausted);
    }
    let best = argmax_arm(ledger.feasible_arms(), |arm| {
        state.ucb_index(arm).ln() / costs[arm.index()]
    });
    Ok(best.map_or(Selection::Exhausted, Selection::Arm))
}
