//! Arm-selection policies.
//!
//! All policies share one [`PolicyState`] (round counter, pull counts,
//! empirical means and UCB indices) and one round driver,
//! [`run_policy_round`]. They differ only in how they choose the next arm.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::Environment;
use crate::model::{ArmId, BudgetLedger, UtilityFunction};
use crate::trace::RoundRecord;

mod etc;
mod greedy;
mod oracle;
mod ucb;

pub use etc::{etc_select, EtcProgress};
pub use greedy::{epsilon_greedy_select, greedy_arm};
pub use oracle::oracle_select;
pub use ucb::{bucb_initialize_step, bucb_select, ucb_epsilon, update_empirical_mean};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("confidence radius is undefined for an arm that was never pulled")]
    ArmNeverPulled,
    #[error("initialization stage incomplete: arm {0} has not been pulled")]
    NotInitialized(ArmId),
    #[error("utility evaluation failed: {0}")]
    Utility(#[from] crate::model::DomainError),
}

/// Outcome of a selection step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Arm(ArmId),
    /// No arm is affordable any more.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    Fixed(f64),
    /// `epsilon = 1/t` for the round being selected.
    OneOverT,
}

impl EpsilonRule {
    pub fn probability(self, t: u64) -> f64 {
        match self {
            EpsilonRule::Fixed(eps) => eps,
            EpsilonRule::OneOverT => 1.0 / t.max(1) as f64,
        }
    }
}

/// What "empirically best" means for the greedy baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyRanking {
    /// `ln(u_hat_i) / c_i`
    #[default]
    UtilityCostRatio,
    /// `u_hat_i`, ignoring cost.
    RawMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    BudgetedUcb,
    Oracle,
    EpsilonGreedy {
        rule: EpsilonRule,
        ranking: GreedyRanking,
    },
    ExploreThenCommit {
        explore_fraction: f64,
        ranking: GreedyRanking,
    },
}

impl PolicyKind {
    pub const fn epsilon_greedy(rule: EpsilonRule) -> Self {
        PolicyKind::EpsilonGreedy {
            rule,
            ranking: GreedyRanking::UtilityCostRatio,
        }
    }

    pub const fn explore_then_commit(explore_fraction: f64) -> Self {
        PolicyKind::ExploreThenCommit {
            explore_fraction,
            ranking: GreedyRanking::UtilityCostRatio,
        }
    }

    /// Budgeted-UCB, the oracle and the six baselines.
    pub fn standard_set() -> Vec<PolicyKind> {
        [
            "oracle", "bucb", "ep1", "ep5", "epx", "etc15", "etc20", "etc25",
        ]
        .iter()
        .map(|s| s.parse().expect("built-in policy label"))
        .collect()
    }

    pub fn with_ranking(self, ranking: GreedyRanking) -> Self {
        match self {
            PolicyKind::EpsilonGreedy { rule, .. } => PolicyKind::EpsilonGreedy { rule, ranking },
            PolicyKind::ExploreThenCommit {
                explore_fraction, ..
            } => PolicyKind::ExploreThenCommit {
                explore_fraction,
                ranking,
            },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            PolicyKind::EpsilonGreedy {
                rule: EpsilonRule::Fixed(eps),
                ..
            } if !(eps > 0.0 && eps < 1.0) => Err(format!("epsilon {eps} must lie in (0, 1)")),
            PolicyKind::ExploreThenCommit {
                explore_fraction, ..
            } if !(explore_fraction > 0.0 && explore_fraction < 1.0) => Err(format!(
                "explore fraction {explore_fraction} must lie in (0, 1)"
            )),
            _ => Ok(()),
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, PolicyKind::Oracle)
    }

    /// Short label: `bucb`, `oracle`, `ep1`, `ep5`, `epx`, `etc15`, ...
    pub fn label(&self) -> String {
        self.to_string()
    }
}

fn percent(x: f64) -> String {
    let p = x * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}", p.round() as i64)
    } else {
        format!("{p}")
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (base, ranking) = match *self {
            PolicyKind::BudgetedUcb => return f.write_str("bucb"),
            PolicyKind::Oracle => return f.write_str("oracle"),
            PolicyKind::EpsilonGreedy { rule, ranking } => {
                let base = match rule {
                    EpsilonRule::OneOverT => "epx".to_string(),
                    EpsilonRule::Fixed(eps) => format!("ep{}", percent(eps)),
                };
                (base, ranking)
            }
            PolicyKind::ExploreThenCommit {
                explore_fraction,
                ranking,
            } => (format!("etc{}", percent(explore_fraction)), ranking),
        };
        match ranking {
            GreedyRanking::UtilityCostRatio => f.write_str(&base),
            GreedyRanking::RawMean => write!(f, "{base}-raw"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy `{0}` (expected bucb, oracle, ep<percent>, epx or etc<percent>, optionally with -raw)")]
pub struct ParsePolicyError(pub String);

impl FromStr for PolicyKind {
    type Err = ParsePolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePolicyError(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (base, ranking) = match lower.strip_suffix("-raw") {
            Some(b) => (b, GreedyRanking::RawMean),
            None => (lower.as_str(), GreedyRanking::UtilityCostRatio),
        };
        let pct = |digits: &str| -> Result<f64, ParsePolicyError> {
            let v: f64 = digits.parse().map_err(|_| err())?;
            Ok(v / 100.0)
        };
        let kind = match base {
            "bucb" | "budgeted-ucb" if ranking == GreedyRanking::UtilityCostRatio => {
                PolicyKind::BudgetedUcb
            }
            "oracle" if ranking == GreedyRanking::UtilityCostRatio => PolicyKind::Oracle,
            "epx" => PolicyKind::EpsilonGreedy {
                rule: EpsilonRule::OneOverT,
                ranking,
            },
            _ if base.starts_with("etc") => PolicyKind::ExploreThenCommit {
                explore_fraction: pct(&base[3..])?,
                ranking,
            },
            _ if base.starts_with("ep") => PolicyKind::EpsilonGreedy {
                rule: EpsilonRule::Fixed(pct(&base[2..])?),
                ranking,
            },
            _ => return Err(err()),
        };
        kind.validate().map_err(|_| err())?;
        Ok(kind)
    }
}

/// Coarse stage of a policy's lifecycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Some arm has not been pulled yet.
    Initializing,
    Selecting,
    Exhausted,
}

/// Per-episode learning state: `t`, `T_i`, `u_hat_i` and `u_bar_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    t: u64,
    num_users: usize,
    pull_counts: Vec<u64>,
    empirical_means: Vec<f64>,
    ucb_indices: Vec<f64>,
    exhausted: bool,
}

impl PolicyState {
    pub fn new(num_arms: usize, num_users: usize) -> Self {
        assert!(num_users >= 1);
        Self {
            t: 0,
            num_users,
            pull_counts: vec![0; num_arms],
            empirical_means: vec![f64::NAN; num_arms],
            ucb_indices: vec![f64::INFINITY; num_arms],
            exhausted: false,
        }
    }

    /// Rounds completed so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn num_arms(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn pulls(&self, arm: ArmId) -> u64 {
        self.pull_counts[arm.index()]
    }

    /// `u_hat_i`; `None` until the arm has been pulled.
    pub fn empirical_mean(&self, arm: ArmId) -> Option<f64> {
        (self.pulls(arm) > 0).then(|| self.empirical_means[arm.index()])
    }

    /// `u_bar_i`; infinite for unpulled arms.
    pub fn ucb_index(&self, arm: ArmId) -> f64 {
        self.ucb_indices[arm.index()]
    }

    pub fn phase(&self) -> Phase {
        if self.exhausted {
            Phase::Exhausted
        } else if self.pull_counts.contains(&0) {
            Phase::Initializing
        } else {
            Phase::Selecting
        }
    }

    pub fn mark_exhausted(&mut self) {
        self.exhausted = true;
    }

    /// Smallest arm id that has never been pulled.
    pub fn first_unpulled(&self) -> Option<ArmId> {
        self.pull_counts
            .iter()
            .position(|&n| n == 0)
            .map(ArmId::from_index)
    }

    pub fn arms(&self) -> impl Iterator<Item = ArmId> {
        (0..self.num_arms()).map(ArmId::from_index)
    }

    /// Records one round: advance `t`, fold the feedback into `u_hat`,
    /// bump `T_arm`, then refresh every arm's UCB index at the new `t`.
    pub fn observe(&mut self, arm: ArmId, feedback: &[f64]) {
        debug_assert_eq!(feedback.len(), self.num_users);
        let i = arm.index();
        self.t += 1;
        let prev = self.pull_counts[i];
        let prev_mean = if prev == 0 {
            0.0
        } else {
            self.empirical_means[i]
        };
        self.empirical_means[i] = update_empirical_mean(prev_mean, prev, feedback);
        self.pull_counts[i] = prev + 1;
        for (k, idx) in self.ucb_indices.iter_mut().enumerate() {
            let n = self.pull_counts[k];
            *idx = if n == 0 {
                f64::INFINITY
            } else {
                self.empirical_means[k] + ucb_bonus(self.t, n, self.num_users)
            };
        }
    }
}

#[inline]
fn ucb_bonus(t: u64, pulls: u64, num_users: usize) -> f64 {
    (2.0 * (t as f64).ln() / (pulls as f64 * num_users as f64)).sqrt()
}

/// First arm (lowest id) with the largest score.
pub(crate) fn argmax_arm(
    arms: impl Iterator<Item = ArmId>,
    mut score: impl FnMut(ArmId) -> f64,
) -> Option<ArmId> {
    let mut best: Option<(ArmId, f64)> = None;
    for arm in arms {
        let s = score(arm);
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((arm, s)),
        }
    }
    best.map(|(a, _)| a)
}

/// A runnable policy: its kind plus the private state it needs.
#[derive(Debug, Clone)]
pub struct Agent {
    kind: PolicyKind,
    state: PolicyState,
    costs: Vec<f64>,
    true_means: Vec<f64>,
    exploration: ChaCha8Rng,
    etc: EtcProgress,
}

impl Agent {
    /// `true_means` is only consulted by the oracle; `exploration` only by
    /// the epsilon-greedy baselines.
    pub fn new(
        kind: PolicyKind,
        costs: &[f64],
        num_users: usize,
        true_means: &[f64],
        exploration: ChaCha8Rng,
    ) -> Self {
        assert_eq!(costs.len(), true_means.len());
        Self {
            kind,
            state: PolicyState::new(costs.len(), num_users),
            costs: costs.to_vec(),
            true_means: true_means.to_vec(),
            exploration,
            etc: EtcProgress::default(),
        }
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    pub fn select(&mut self, ledger: &BudgetLedger) -> Result<Selection, PolicyError> {
        let selection = match self.kind {
            PolicyKind::Oracle => oracle_select(&self.true_means, ledger, &self.costs),
            PolicyKind::BudgetedUcb => match self.state.phase() {
                Phase::Initializing => bucb_initialize_step(&self.state, ledger),
                _ => bucb_select(&self.state, ledger, &self.costs)?,
            },
            PolicyKind::EpsilonGreedy { rule, ranking } => match self.state.phase() {
                Phase::Initializing => bucb_initialize_step(&self.state, ledger),
                _ => epsilon_greedy_select(
                    &self.state,
                    ledger,
                    &self.costs,
                    rule,
                    ranking,
                    &mut self.exploration,
                )?,
            },
            PolicyKind::ExploreThenCommit {
                explore_fraction,
                ranking,
            } => etc_select(
                &self.state,
                ledger,
                &self.costs,
                explore_fraction,
                ranking,
                &mut self.etc,
            ),
        };
        if selection == Selection::Exhausted {
            self.state.mark_exhausted();
        }
        Ok(selection)
    }

    pub fn observe(&mut self, arm: ArmId, feedback: &[f64]) {
        self.state.observe(arm, feedback);
    }
}

/// Plays one round: select, collect `M` feedbacks, debit `M*c_arm`, update.
/// Returns `None` once no arm is affordable.
pub fn run_policy_round(
    agent: &mut Agent,
    ledger: &mut BudgetLedger,
    env: &Environment,
    utility: UtilityFunction,
) -> Result<Option<RoundRecord>, PolicyError> {
    let arm = match agent.select(ledger)? {
        Selection::Arm(arm) => arm,
        Selection::Exhausted => return Ok(None),
    };
    let mut feedback = vec![0.0; agent.state.num_users()];
    let pull_index = agent.state.pulls(arm) + 1;
    env.sample(arm, pull_index, &mut feedback);
    let utility = utility.evaluate(feedback.iter().sum())?;
    let cost = ledger.debit(arm);
    agent.observe(arm, &feedback);
    Ok(Some(RoundRecord {
        t: agent.state.t(),
        arm,
        feedback,
        cost,
        utility,
        remaining: ledger.remaining(),
    }))
}
