//! Budget-constrained bandit scheduling with a concave (logarithmic) utility.
//!
//! Each round a scheduler picks one of `N` resources ("arms"), serves all `M`
//! users with it, pays `M * c_i` from a fixed budget and earns
//! `ln(sum of user QoE)`. The crate provides:
//!
//! - [`model`]: arms, configuration, utility and budget accounting;
//! - [`env`]: the truncated-Gaussian QoE simulator;
//! - [`policies`]: Budgeted-UCB, the oracle, epsilon-greedy and
//!   explore-then-commit;
//! - [`analysis`]: regret estimators, gaps and analytic bounds;
//! - [`runner`]: seeded, parallel experiment sweeps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod env;
pub mod model;
pub mod policies;
pub mod runner;
pub mod streams;
pub mod trace;

pub use analysis::{
    compute_gaps, empirical_regret, fit_log_coefficient, theorem1_ti_bound, theorem2_tau_lower,
    theorem3_regret_upper, AnalysisError, BoundReport, GapProfile, LogFit,
};
pub use model::{
    validate_config, ArmId, ArmSpec, BudgetLedger, ConfigError, SystemConfig, UtilityFunction,
};
pub use policies::{PolicyKind, PolicyState};
pub use runner::{run_episode, run_plan, CostRegime, ExperimentPlan, PlanResult, RunError};
pub use trace::{EpisodeTrace, RoundRecord};
