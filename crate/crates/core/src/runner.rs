//! Experiment orchestration: realize an arm set, run every
//! (policy, budget, replication) episode against a shared oracle, and reduce
//! the results into per-cell means and standard errors.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{compute_gaps, proxy_oracle_reward, GapProfile};
use crate::env::Environment;
use crate::model::{
    initialization_cost, validate_arms, validate_config, ArmId, ArmSpec, BudgetLedger, ConfigError,
    SystemConfig, UtilityFunction, DEFAULT_NOISE_SIGMA, QOE_MAX, QOE_MIN,
};
use crate::policies::{run_policy_round, Agent, PolicyError, PolicyKind};
use crate::streams::{keyed_rng, open_unit, stream_tag, Domain, FeedbackStream};
use crate::trace::EpisodeTrace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid plan: {0}")]
    Plan(String),
}

/// Interval the unit costs are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostRegime {
    /// `[1.5, 2]`
    Low,
    /// `[1, 2]`
    #[default]
    Medium,
    /// `[1, 3]`
    High,
}

impl CostRegime {
    pub fn interval(self) -> (f64, f64) {
        match self {
            CostRegime::Low => (1.5, 2.0),
            CostRegime::Medium => (1.0, 2.0),
            CostRegime::High => (1.0, 3.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CostRegime::Low => "low",
            CostRegime::Medium => "medium",
            CostRegime::High => "high",
        }
    }
}

impl fmt::Display for CostRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(CostRegime::Low),
            "medium" => Ok(CostRegime::Medium),
            "high" => Ok(CostRegime::High),
            _ => Err(format!(
                "unknown cost regime `{s}` (expected low, medium or high)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub num_arms: usize,
    pub num_users: usize,
    pub cost_regime: CostRegime,
    /// Range the pre-truncation means are drawn from.
    pub qoe_range: (f64, f64),
    pub noise_sigma: f64,
    /// Fixed arm set; when present nothing is drawn.
    pub arms: Option<Vec<ArmSpec>>,
    pub budget_grid: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub replications: usize,
    pub base_seed: u64,
    pub utility: UtilityFunction,
    /// Draw a fresh arm set for every replication.
    pub redraw_arms: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            num_arms: 10,
            num_users: 5,
            cost_regime: CostRegime::Medium,
            qoe_range: (QOE_MIN, QOE_MAX),
            noise_sigma: DEFAULT_NOISE_SIGMA,
            arms: None,
            budget_grid: default_budget_grid(),
            policies: PolicyKind::standard_set(),
            replications: 50,
            base_seed: 2023,
            utility: UtilityFunction::NaturalLog,
            redraw_arms: false,
        }
    }
}

/// Roughly log-spaced budgets up to 50000.
pub fn default_budget_grid() -> Vec<f64> {
    vec![500.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0, 50000.0]
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), RunError> {
        let plan_err = |m: String| Err(RunError::Plan(m));
        if self.num_users == 0 {
            return Err(ConfigError::NoUsers.into());
        }
        if self.replications == 0 {
            return Err(ConfigError::NoReplications.into());
        }
        if self.policies.is_empty() {
            return plan_err("no policies".into());
        }
        for p in &self.policies {
            p.validate().map_err(RunError::Plan)?;
        }
        if self.budget_grid.is_empty() {
            return plan_err("empty budget grid".into());
        }
        if self.budget_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return plan_err("budget grid must be strictly increasing".into());
        }
        match &self.arms {
            Some(arms) => {
                if arms.len() < 2 {
                    return Err(ConfigError::TooFewArms(arms.len()).into());
                }
                validate_arms(arms)?;
            }
            None => {
                if self.num_arms < 2 {
                    return Err(ConfigError::TooFewArms(self.num_arms).into());
                }
                let (lo, hi) = self.qoe_range;
                if !(QOE_MIN <= lo && lo <= hi && hi <= QOE_MAX) {
                    return plan_err(format!("qoe range [{lo}, {hi}] must lie within [1, 2]"));
                }
                if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
                    return plan_err(format!("noise sigma {} must be positive", self.noise_sigma));
                }
            }
        }
        let reps: Vec<usize> = if self.redraw_arms {
            (0..self.replications).collect()
        } else {
            vec![0]
        };
        let smallest = self.budget_grid[0];
        for rep in reps {
            let arms = self.arms_for_replication(rep);
            let required = initialization_cost(&arms, self.num_users);
            if !(smallest >= required) {
                return Err(ConfigError::BudgetTooSmall {
                    budget: smallest,
                    required,
                }
                .into());
            }
        }
        Ok(())
    }

    /// The arm set shared by every cell (replication-independent).
    pub fn base_arms(&self) -> Vec<ArmSpec> {
        realize_arms(self, self.base_seed)
    }

    pub fn arms_for_replication(&self, replication: usize) -> Vec<ArmSpec> {
        match (&self.arms, self.redraw_arms) {
            (None, true) => draw_arms(self, self.base_seed, replication as u64 + 1),
            _ => self.base_arms(),
        }
    }
}

fn draw_arms(plan: &ExperimentPlan, seed: u64, key: u64) -> Vec<ArmSpec> {
    let mut rng = keyed_rng(seed, key, Domain::ArmRealization, 0);
    let (c_lo, c_hi) = plan.cost_regime.interval();
    let (u_lo, u_hi) = plan.qoe_range;
    (0..plan.num_arms)
        .map(|i| {
            let cost = c_lo + (c_hi - c_lo) * open_unit(rng.next_u64());
            let mu = u_lo + (u_hi - u_lo) * open_unit(rng.next_u64());
            ArmSpec::new(ArmId::from_index(i), mu, cost).with_noise(plan.noise_sigma)
        })
        .collect()
}

/// Costs uniform on the regime interval and pre-truncation means uniform on
/// the QoE range, deterministic in `seed`. Explicit arms are returned as-is.
pub fn realize_arms(plan: &ExperimentPlan, seed: u64) -> Vec<ArmSpec> {
    match &plan.arms {
        Some(arms) => arms.clone(),
        None => draw_arms(plan, seed, 0),
    }
}

/// Ground-truth `U_i` (truncated means) of an arm set.
pub fn true_means(arms: &[ArmSpec]) -> Vec<f64> {
    arms.iter()
        .map(|a| crate::env::make_arm_distribution(a).truncated_mean())
        .collect()
}

/// Runs one policy to budget exhaustion on an explicit feedback stream.
pub fn run_episode_on(
    policy: PolicyKind,
    arms: &[ArmSpec],
    num_users: usize,
    budget: f64,
    utility: UtilityFunction,
    stream: FeedbackStream,
) -> Result<EpisodeTrace, RunError> {
    let config = validate_config(SystemConfig {
        arms: arms.to_vec(),
        num_users,
        budget,
        utility,
        base_seed: stream.base_seed,
        replications: 1,
    })?;
    let env = Environment::new(&config.arms, stream);
    let costs = config.costs();
    let label = policy.label();
    let exploration = keyed_rng(
        stream.base_seed,
        stream.replication,
        Domain::Exploration,
        stream_tag(&label),
    );
    let mut agent = Agent::new(policy, &costs, num_users, &env.true_means(), exploration);
    let mut ledger = BudgetLedger::new(budget, &costs, num_users);
    let mut rounds = Vec::new();
    while let Some(record) = run_policy_round(&mut agent, &mut ledger, &env, utility)? {
        rounds.push(record);
    }
    Ok(EpisodeTrace {
        policy: label,
        budget,
        num_users,
        rounds,
        pull_counts: agent.state().pull_counts().to_vec(),
        remaining: ledger.remaining(),
    })
}

/// One episode with the feedback streams of `(seed, replication)`.
pub fn run_episode(
    policy: PolicyKind,
    arms: &[ArmSpec],
    num_users: usize,
    budget: f64,
    seed: u64,
    replication: u64,
) -> Result<EpisodeTrace, RunError> {
    run_episode_on(
        policy,
        arms,
        num_users,
        budget,
        UtilityFunction::NaturalLog,
        FeedbackStream::new(seed, replication),
    )
}

/// Sample mean and standard error (`sd / sqrt(n)`, zero for `n = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n > 0, "no samples");
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}

/// One (policy, budget, replication) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub policy: String,
    pub budget: f64,
    pub replication: usize,
    pub cumulative_utility: f64,
    pub tau: u64,
    pub remaining: f64,
    /// Against the oracle on the same feedback streams.
    pub regret_paired: f64,
    /// Against the oracle on independent feedback streams.
    pub regret_unpaired: f64,
    /// Against `(floor(B/(M c*)) + 1) ln(M U*)`.
    pub regret_proxy: f64,
    pub pull_counts: Vec<u64>,
}

/// Replication summary of one (policy, budget) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub policy: String,
    pub budget: f64,
    pub replications: usize,
    pub utility: Stat,
    pub regret_paired: Stat,
    pub regret_unpaired: Stat,
    pub regret_proxy: Stat,
    pub tau: Stat,
    pub pulls: Vec<Stat>,
    /// Only one replication: standard errors are meaningless.
    pub degenerate: bool,
}

impl AggregateResult {
    fn reduce(policy: &str, budget: f64, records: &[&ReplicationRecord]) -> Self {
        let col = |f: &dyn Fn(&ReplicationRecord) -> f64| -> Stat {
            Stat::from_samples(&records.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        let num_arms = records[0].pull_counts.len();
        Self {
            policy: policy.to_string(),
            budget,
            replications: records.len(),
            utility: col(&|r| r.cumulative_utility),
            regret_paired: col(&|r| r.regret_paired),
            regret_unpaired: col(&|r| r.regret_unpaired),
            regret_proxy: col(&|r| r.regret_proxy),
            tau: col(&|r| r.tau as f64),
            pulls: (0..num_arms)
                .map(|i| col(&|r| r.pull_counts[i] as f64))
                .collect(),
            degenerate: records.len() == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub arms: Vec<ArmSpec>,
    pub true_means: Vec<f64>,
    pub gaps: GapProfile,
    /// Ordered by policy (plan order), then budget.
    pub cells: Vec<AggregateResult>,
    /// Ordered by policy, budget, replication.
    pub records: Vec<ReplicationRecord>,
}

impl PlanResult {
    pub fn cell(&self, policy: &str, budget: f64) -> Option<&AggregateResult> {
        self.cells
            .iter()
            .find(|c| c.policy == policy && c.budget == budget)
    }
}

fn run_block(
    plan: &ExperimentPlan,
    budget: f64,
    replication: usize,
) -> Result<Vec<ReplicationRecord>, RunError> {
    let arms = plan.arms_for_replication(replication);
    let means = true_means(&arms);
    let costs: Vec<f64> = arms.iter().map(|a| a.unit_cost).collect();
    let gaps = compute_gaps(&means, &costs);
    let star = gaps.i_star.index();
    let proxy = proxy_oracle_reward(budget, plan.num_users, costs[star], means[star]);
    let stream = FeedbackStream::new(plan.base_seed, replication as u64);
    let run = |policy, stream| {
        run_episode_on(policy, &arms, plan.num_users, budget, plan.utility, stream)
    };
    let oracle = run(PolicyKind::Oracle, stream)?;
    let oracle_utility = oracle.cumulative_utility();
    let independent_utility = run(PolicyKind::Oracle, stream.independent())?.cumulative_utility();
    plan.policies
        .iter()
        .map(|&policy| {
            let trace = if policy.is_oracle() {
                oracle.clone()
            } else {
                run(policy, stream)?
            };
            let utility = trace.cumulative_utility();
            Ok(ReplicationRecord {
                policy: trace.policy,
                budget,
                replication,
                cumulative_utility: utility,
                tau: trace.rounds.len() as u64,
                remaining: trace.remaining,
                regret_paired: oracle_utility - utility,
                regret_unpaired: independent_utility - utility,
                regret_proxy: proxy - utility,
                pull_counts: trace.pull_counts,
            })
        })
        .collect()
}

/// Runs every cell of the plan. `parallel` only changes scheduling; the
/// result is identical either way.
pub fn run_plan_with(plan: &ExperimentPlan, parallel: bool) -> Result<PlanResult, RunError> {
    plan.validate()?;
    let tasks: Vec<(f64, usize)> = plan
        .budget_grid
        .iter()
        .flat_map(|&b| (0..plan.replications).map(move |r| (b, r)))
        .collect();
    let blocks: Vec<Vec<ReplicationRecord>> = if parallel {
        tasks
            .par_iter()
            .map(|&(b, r)| run_block(plan, b, r))
            .collect::<Result<_, _>>()?
    } else {
        tasks
            .iter()
            .map(|&(b, r)| run_block(plan, b, r))
            .collect::<Result<_, _>>()?
    };

    // canonical order: policy, budget, replication
    let mut records = Vec::with_capacity(tasks.len() * plan.policies.len());
    let mut cells = Vec::with_capacity(plan.policies.len() * plan.budget_grid.len());
    for (p, policy) in plan.policies.iter().enumerate() {
        let label = policy.label();
        for (g, &budget) in plan.budget_grid.iter().enumerate() {
            let cell: Vec<&ReplicationRecord> = (0..plan.replications)
                .map(|r| &blocks[g * plan.replications + r][p])
                .collect();
            cells.push(AggregateResult::reduce(&label, budget, &cell));
            records.extend(cell.into_iter().cloned());
        }
    }

    let arms = plan.base_arms();
    let means = true_means(&arms);
    let costs: Vec<f64> = arms.iter().map(|a| a.unit_cost).collect();
    let gaps = compute_gaps(&means, &costs);
    Ok(PlanResult {
        arms,
        true_means: means,
        gaps,
        cells,
        records,
    })
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanResult, RunError> {
    run_plan_with(plan, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::arms_from_pairs;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            num_arms: 3,
            num_users: 2,
            budget_grid: vec![50.0, 200.0],
            replications: 4,
            base_seed: 11,
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn realization_is_deterministic() {
        let plan = small_plan();
        assert_eq!(realize_arms(&plan, 5), realize_arms(&plan, 5));
        assert_ne!(realize_arms(&plan, 5), realize_arms(&plan, 6));
    }

    #[test]
    fn low_regime_support() {
        let plan = ExperimentPlan {
            num_arms: 200,
            cost_regime: CostRegime::Low,
            ..small_plan()
        };
        for arm in realize_arms(&plan, 1) {
            assert!((1.5..=2.0).contains(&arm.unit_cost));
            assert!((1.0..=2.0).contains(&arm.expected_qoe));
            assert_eq!(arm.noise_sigma, 0.1);
        }
    }

    #[test]
    fn boundary_budget_plays_only_initialization() {
        let arms = arms_from_pairs(&[(1.3, 1.0), (1.6, 1.5), (1.9, 2.0)]);
        let trace = run_episode(PolicyKind::BudgetedUcb, &arms, 2, 9.0, 1, 0).unwrap();
        assert_eq!(trace.tau(), 3);
        assert_eq!(trace.remaining, 0.0);
    }

    #[test]
    fn uniform_costs_fix_round_count() {
        // every round costs 2c: B = 2Nc + 20c leaves exactly 10 extra rounds
        let c = 1.25;
        let arms = arms_from_pairs(&[(1.3, c), (1.6, c), (1.9, c), (1.1, c)]);
        let budget = 2.0 * 4.0 * c + 20.0 * c;
        for policy in PolicyKind::standard_set() {
            let trace = run_episode(policy, &arms, 2, budget, 3, 1).unwrap();
            assert_eq!(trace.tau(), 14, "{}", trace.policy);
        }
    }

    #[test]
    fn oracle_always_plays_optimal_arm_when_affordable() {
        let arms = arms_from_pairs(&[(1.3, 1.0), (1.9, 1.2), (1.5, 1.9)]);
        let trace = run_episode(PolicyKind::Oracle, &arms, 3, 500.0, 9, 0).unwrap();
        let star = compute_gaps(&true_means(&arms), &[1.0, 1.2, 1.9]).i_star;
        for r in &trace.rounds {
            if r.remaining + r.cost >= 3.0 * 1.2 {
                assert_eq!(r.arm, star);
            }
        }
    }

    #[test]
    fn single_replication_is_flagged() {
        let plan = ExperimentPlan {
            replications: 1,
            ..small_plan()
        };
        let res = run_plan(&plan).unwrap();
        assert!(res
            .cells
            .iter()
            .all(|c| c.degenerate && c.utility.stderr == 0.0));
    }

    #[test]
    fn oracle_only_plan_has_zero_regret() {
        let plan = ExperimentPlan {
            policies: vec![PolicyKind::Oracle],
            ..small_plan()
        };
        let res = run_plan(&plan).unwrap();
        assert!(res.records.iter().all(|r| r.regret_paired == 0.0));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let plan = small_plan();
        assert_eq!(
            run_plan_with(&plan, false).unwrap(),
            run_plan_with(&plan, true).unwrap()
        );
    }

    #[test]
    fn redraw_changes_arms_per_replication() {
        let plan = ExperimentPlan {
            redraw_arms: true,
            ..small_plan()
        };
        assert_ne!(plan.arms_for_replication(0), plan.arms_for_replication(1));
        assert!(run_plan(&plan).is_ok());
    }

    #[test]
    fn plan_validation() {
        let mut plan = small_plan();
        plan.budget_grid = vec![200.0, 50.0];
        assert!(matches!(plan.validate(), Err(RunError::Plan(_))));
        plan.budget_grid = vec![1.0, 50.0];
        assert!(matches!(
            plan.validate(),
            Err(RunError::Config(ConfigError::BudgetTooSmall { .. }))
        ));
    }

    #[test]
    fn stat_stderr() {
        let s = Stat::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
