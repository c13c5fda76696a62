use super::{argmax_arm, Selection};
use crate::model::BudgetLedger;

/// Affordable arm with the largest true ratio `ln(U_i) / c_i`.
pub fn oracle_select(true_means: &[f64], ledger: &BudgetLedger, costs: &[f64]) -> Selection {
    argmax_arm(ledger.feasible_arms(), |arm| {
        true_means[arm.index()].ln() / costs[arm.index()]
    })
    .map_or(Selection::Exhausted, Selection::Arm)
}
