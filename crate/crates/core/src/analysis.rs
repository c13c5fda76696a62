//! Regret estimators, utility-cost gaps and the analytic bounds on pull
//! counts, stopping round and regret of Budgeted-UCB.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{cost_range, ArmId};
use crate::trace::EpisodeTrace;

/// `pi^2 / 3`, the tail sum `sum_t 2 t^-2`.
pub const PI_SQUARED_OVER_3: f64 = PI * PI / 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("utility-cost gap is zero (optimal arm not unique); bound is undefined")]
    ZeroGap,
    #[error("traces were generated with different budgets ({0} vs {1})")]
    BudgetMismatch(f64, f64),
    #[error("degenerate regression input: {0}")]
    DegenerateInput(&'static str),
}

/// Gaps of every arm against the ratio-optimal arm `I*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub i_star: ArmId,
    /// `delta_i = c_i - c_{I*}`
    pub delta_cost: Vec<f64>,
    /// `Delta_i = ln(U_{I*})/c_{I*} - ln(U_i)/c_i`
    pub delta_ratio: Vec<f64>,
    /// Smallest `Delta_i` over `i != I*`; `None` for a single arm.
    pub delta_min: Option<f64>,
}

impl GapProfile {
    /// Every other arm is strictly worse than `I*`.
    pub fn is_unique(&self) -> bool {
        self.delta_min.is_none_or(|d| d > 0.0)
    }

    pub fn suboptimal_arms(&self) -> impl Iterator<Item = ArmId> + '_ {
        (0..self.delta_ratio.len())
            .map(ArmId::from_index)
            .filter(move |&a| a != self.i_star)
    }
}

pub fn utility_cost_ratio(mean: f64, cost: f64) -> f64 {
    mean.ln() / cost
}

pub fn compute_gaps(true_means: &[f64], costs: &[f64]) -> GapProfile {
    assert_eq!(true_means.len(), costs.len());
    assert!(!costs.is_empty());
    let ratios: Vec<f64> = true_means
        .iter()
        .zip(costs)
        .map(|(&u, &c)| utility_cost_ratio(u, c))
        .collect();
    let mut best = 0;
    for (i, &r) in ratios.iter().enumerate() {
        if r > ratios[best] {
            best = i;
        }
    }
    let delta_ratio: Vec<f64> = ratios.iter().map(|&r| ratios[best] - r).collect();
    let delta_min = delta_ratio
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &d)| d)
        .reduce(f64::min);
    GapProfile {
        i_star: ArmId::from_index(best),
        delta_cost: costs.iter().map(|&c| c - costs[best]).collect(),
        delta_ratio,
        delta_min,
    }
}

/// Paired regret `R_B(oracle) - R_B(policy)` on shared feedback streams.
/// Can be negative for a single replication.
pub fn empirical_regret(
    oracle: &EpisodeTrace,
    policy: &EpisodeTrace,
) -> Result<f64, AnalysisError> {
    if oracle.budget != policy.budget {
        return Err(AnalysisError::BudgetMismatch(oracle.budget, policy.budget));
    }
    Ok(oracle.cumulative_utility() - policy.cumulative_utility())
}

/// Deterministic oracle reward `(floor(B/(M c*)) + 1) ln(M U*)`, the
/// upper estimate used by the proxy regret estimator.
pub fn proxy_oracle_reward(budget: f64, num_users: usize, cost_star: f64, mean_star: f64) -> f64 {
    let m = num_users as f64;
    ((budget / (m * cost_star)).floor() + 1.0) * (m * mean_star).ln()
}

/// `8 ln(x) / (M c^2 Delta^2) + 1 + pi^2/3`
fn pull_bound_term(log_arg: f64, num_users: usize, cost: f64, gap: f64) -> f64 {
    8.0 * log_arg.ln() / (num_users as f64 * cost * cost * gap * gap) + 1.0 + PI_SQUARED_OVER_3
}

/// Upper bound on `E[T_i | tau]` for a suboptimal arm.
pub fn theorem1_ti_bound(
    tau: f64,
    num_users: usize,
    cost: f64,
    gap: f64,
) -> Result<f64, AnalysisError> {
    assert!(tau >= 1.0, "tau must be at least 1");
    if !(gap > 0.0) {
        return Err(AnalysisError::ZeroGap);
    }
    let v = pull_bound_term(tau, num_users, cost, gap);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AnalysisError::ZeroGap)
    }
}

/// The common per-arm term with `ln(B/(M c_min))` in place of `ln tau`.
fn budget_pull_term(
    budget: f64,
    num_users: usize,
    c_min: f64,
    cost: f64,
    gap: f64,
) -> Result<f64, AnalysisError> {
    if !(gap > 0.0) {
        return Err(AnalysisError::ZeroGap);
    }
    let v = pull_bound_term(budget / (num_users as f64 * c_min), num_users, cost, gap);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AnalysisError::ZeroGap)
    }
}

/// Sum over arms costlier than `I*` of `(delta_i / c*) * term_i`.
fn costlier_arm_penalty(
    budget: f64,
    num_users: usize,
    costs: &[f64],
    gaps: &GapProfile,
) -> Result<f64, AnalysisError> {
    let (c_min, _) = cost_range(costs);
    let c_star = costs[gaps.i_star.index()];
    let mut total = 0.0;
    for arm in gaps.suboptimal_arms() {
        let delta = gaps.delta_cost[arm.index()];
        if delta > 0.0 {
            let term = budget_pull_term(
                budget,
                num_users,
                c_min,
                costs[arm.index()],
                gaps.delta_ratio[arm.index()],
            )?;
            total += delta / c_star * term;
        }
    }
    Ok(total)
}

/// Lower bound on `E[tau(B)]`. May be non-positive for small budgets.
pub fn theorem2_tau_lower(
    budget: f64,
    num_users: usize,
    costs: &[f64],
    gaps: &GapProfile,
) -> Result<f64, AnalysisError> {
    if !gaps.is_unique() {
        return Err(AnalysisError::ZeroGap);
    }
    let (c_min, _) = cost_range(costs);
    let c_star = costs[gaps.i_star.index()];
    let m = num_users as f64;
    Ok(budget / (m * c_star)
        - c_min / c_star
        - costlier_arm_penalty(budget, num_users, costs, gaps)?)
}

/// Upper bound on the expected regret.
///
/// The trailing `N * (...)` factor is written with a single free arm index;
/// it is evaluated at the suboptimal arm with the largest term, which makes
/// the value an upper envelope of every per-arm reading. With no suboptimal
/// arm the factor reduces to `1 + pi^2/3`.
pub fn theorem3_regret_upper(
    budget: f64,
    num_users: usize,
    costs: &[f64],
    true_means: &[f64],
    u_min: f64,
    gaps: &GapProfile,
) -> Result<f64, AnalysisError> {
    assert!(u_min >= 1.0, "u_min must be at least 1");
    if !gaps.is_unique() {
        return Err(AnalysisError::ZeroGap);
    }
    let (c_min, _) = cost_range(costs);
    let star = gaps.i_star.index();
    let c_star = costs[star];
    let u_star = true_means[star];
    let m = num_users as f64;
    let first = (m * u_star).ln()
        * (1.0 + c_min / c_star + costlier_arm_penalty(budget, num_users, costs, gaps)?);
    let mut worst = 1.0 + PI_SQUARED_OVER_3;
    for arm in gaps.suboptimal_arms() {
        let term = budget_pull_term(
            budget,
            num_users,
            c_min,
            costs[arm.index()],
            gaps.delta_ratio[arm.index()],
        )?;
        worst = worst.max(term);
    }
    let second = (u_star / u_min).ln() * costs.len() as f64 * worst;
    Ok(first + second)
}

/// Analytic bounds for one configuration next to their empirical
/// counterparts (when episodes were run).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub budget: f64,
    /// `tau` plugged into the pull-count bound.
    pub tau_for_ti: f64,
    /// Pull-count bound per arm; `None` for `I*`.
    pub ti_bound: Vec<Option<f64>>,
    pub tau_lower: f64,
    pub regret_upper: f64,
    pub empirical: Option<EmpiricalSummary>,
}

/// Replication means with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    pub ti: Vec<(f64, f64)>,
    pub tau: (f64, f64),
    pub regret: (f64, f64),
}

impl BoundReport {
    /// Evaluates all three bounds. Without an empirical `tau`, the pull-count
    /// bound uses the largest possible round count `B / (M c_min)`.
    pub fn compute(
        budget: f64,
        num_users: usize,
        costs: &[f64],
        true_means: &[f64],
        u_min: f64,
        empirical: Option<EmpiricalSummary>,
    ) -> Result<Self, AnalysisError> {
        let gaps = compute_gaps(true_means, costs);
        if !gaps.is_unique() {
            return Err(AnalysisError::ZeroGap);
        }
        let (c_min, _) = cost_range(costs);
        let tau_for_ti = match &empirical {
            Some(e) => e.tau.0.max(1.0),
            None => (budget / (num_users as f64 * c_min)).max(1.0),
        };
        let ti_bound = (0..costs.len())
            .map(|i| {
                if i == gaps.i_star.index() {
                    Ok(None)
                } else {
                    theorem1_ti_bound(tau_for_ti, num_users, costs[i], gaps.delta_ratio[i])
                        .map(Some)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            budget,
            tau_for_ti,
            ti_bound,
            tau_lower: theorem2_tau_lower(budget, num_users, costs, &gaps)?,
            regret_upper: theorem3_regret_upper(
                budget, num_users, costs, true_means, u_min, &gaps,
            )?,
            empirical,
        })
    }
}

/// Least-squares fit of `regret ~ m ln(B)` through the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub m: f64,
    /// `1 - SS_res / sum(r^2)`, the no-intercept coefficient of determination;
    /// 1 for an all-zero response.
    pub r2: f64,
}

pub fn fit_log_coefficient(points: &[(f64, f64)]) -> Result<LogFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::DegenerateInput("need at least 3 points"));
    }
    if points.iter().any(|&(b, r)| !(b > 1.0) || !r.is_finite()) {
        return Err(AnalysisError::DegenerateInput(
            "budgets must exceed 1 and regrets be finite",
        ));
    }
    let b0 = points[0].0;
    if points.iter().all(|&(b, _)| b == b0) {
        return Err(AnalysisError::DegenerateInput("all budgets are equal"));
    }
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(b, r)| {
        let x = b.ln();
        (sxy + r * x, sxx + x * x)
    });
    let m = sxy / sxx;
    let ss_res: f64 = points.iter().map(|&(b, r)| (r - m * b.ln()).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|&(_, r)| r * r).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LogFit { m, r2 })
}
