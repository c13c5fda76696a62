//! Domain types shared by every other module: arms, system configuration,
//! the concave utility and the per-episode budget ledger.

use std::fmt;

use thiserror::Error;

/// Lower edge of the QoE support.
pub const QOE_MIN: f64 = 1.0;
/// Upper edge of the QoE support.
pub const QOE_MAX: f64 = 2.0;
/// Relative tolerance for budget conservation checks.
pub const CONSERVATION_TOL: f64 = 1e-9;
/// Noise scale used when an arm does not specify one.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("budget {budget} is below the initialization cost {required} (sum of M*c_i)")]
    BudgetTooSmall { budget: f64, required: f64 },
    #[error("arm {arm}: expected QoE {value} is outside [1, 2]")]
    QoeOutOfRange { arm: ArmId, value: f64 },
    #[error("arm {arm}: unit cost {value} must be positive")]
    NonPositiveCost { arm: ArmId, value: f64 },
    #[error("arm {arm}: noise sigma {value} must be positive and finite")]
    InvalidNoise { arm: ArmId, value: f64 },
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("number of users must be at least 1")]
    NoUsers,
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("arm at position {position} has id {found}; ids must be 1..=N in order")]
    NonContiguousIds { position: usize, found: ArmId },
}

/// Utility evaluated outside its domain.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("utility argument {0} is outside the domain (must be > 0)")]
pub struct DomainError(pub f64);

/// Arm identifier. Stored zero-based, displayed one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArmId(usize);

impl ArmId {
    pub const fn from_index(index: usize) -> Self {
        Self(index)
    }

    /// One-based arm number.
    pub const fn from_number(number: usize) -> Self {
        assert!(number >= 1);
        Self(number - 1)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    pub const fn number(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One meta computer.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub id: ArmId,
    /// Pre-truncation mean of the QoE feedback.
    pub expected_qoe: f64,
    /// Pre-truncation standard deviation.
    pub noise_sigma: f64,
    /// Cost per user per round.
    pub unit_cost: f64,
}

impl ArmSpec {
    pub fn new(id: ArmId, expected_qoe: f64, unit_cost: f64) -> Self {
        Self {
            id,
            expected_qoe,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            unit_cost,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }
}

/// Builds arms with ids `1..=N` from `(expected_qoe, unit_cost)` pairs.
pub fn arms_from_pairs(pairs: &[(f64, f64)]) -> Vec<ArmSpec> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(u, c))| ArmSpec::new(ArmId::from_index(i), u, c))
        .collect()
}

/// Increasing concave utility of the total QoE of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UtilityFunction {
    #[default]
    NaturalLog,
}

impl UtilityFunction {
    pub fn evaluate(self, total_qoe: f64) -> Result<f64, DomainError> {
        if !(total_qoe > 0.0) {
            return Err(DomainError(total_qoe));
        }
        Ok(match self {
            UtilityFunction::NaturalLog => total_qoe.ln(),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UtilityFunction::NaturalLog => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub arms: Vec<ArmSpec>,
    pub num_users: usize,
    pub budget: f64,
    pub utility: UtilityFunction,
    pub base_seed: u64,
    pub replications: usize,
}

impl SystemConfig {
    pub fn new(arms: Vec<ArmSpec>, num_users: usize, budget: f64) -> Self {
        Self {
            arms,
            num_users,
            budget,
            utility: UtilityFunction::NaturalLog,
            base_seed: 0,
            replications: 1,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.unit_cost).collect()
    }

    /// Budget consumed by pulling every arm once.
    pub fn initialization_cost(&self) -> f64 {
        initialization_cost(&self.arms, self.num_users)
    }
}

pub fn initialization_cost(arms: &[ArmSpec], num_users: usize) -> f64 {
    arms.iter().map(|a| num_users as f64 * a.unit_cost).sum()
}

/// Smallest and largest unit cost of an arm set.
pub fn cost_range(costs: &[f64]) -> (f64, f64) {
    costs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
            (lo.min(c), hi.max(c))
        })
}

/// Checks the arm-level invariants only.
pub fn validate_arms(arms: &[ArmSpec]) -> Result<(), ConfigError> {
    for (position, arm) in arms.iter().enumerate() {
        if arm.id.index() != position {
            return Err(ConfigError::NonContiguousIds {
                position: position + 1,
                found: arm.id,
            });
        }
        if !(QOE_MIN..=QOE_MAX).contains(&arm.expected_qoe) {
            return Err(ConfigError::QoeOutOfRange {
                arm: arm.id,
                value: arm.expected_qoe,
            });
        }
        if !(arm.unit_cost > 0.0) || !arm.unit_cost.is_finite() {
            return Err(ConfigError::NonPositiveCost {
                arm: arm.id,
                value: arm.unit_cost,
            });
        }
        if !(arm.noise_sigma > 0.0) || !arm.noise_sigma.is_finite() {
            return Err(ConfigError::InvalidNoise {
                arm: arm.id,
                value: arm.noise_sigma,
            });
        }
    }
    Ok(())
}

pub fn validate_config(config: SystemConfig) -> Result<SystemConfig, ConfigError> {
    if config.arms.len() < 2 {
        return Err(ConfigError::TooFewArms(config.arms.len()));
    }
    if config.num_users == 0 {
        return Err(ConfigError::NoUsers);
    }
    if config.replications == 0 {
        return Err(ConfigError::NoReplications);
    }
    validate_arms(&config.arms)?;
    let required = config.initialization_cost();
    if !(config.budget >= required) {
        return Err(ConfigError::BudgetTooSmall {
            budget: config.budget,
            required,
        });
    }
    Ok(config)
}

/// Spend accounting for one episode.
///
/// Spend is kept as per-arm debit counts and re-derived as `sum(count_i * M*c_i)`
/// after every debit, so the remaining budget never accumulates subtraction
/// drift and the stopping round is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    initial: f64,
    round_costs: Vec<f64>,
    debits: Vec<u64>,
    rounds_elapsed: u64,
    total_spent: f64,
}

impl BudgetLedger {
    pub fn new(initial: f64, unit_costs: &[f64], num_users: usize) -> Self {
        Self {
            initial,
            round_costs: unit_costs.iter().map(|c| num_users as f64 * c).collect(),
            debits: vec![0; unit_costs.len()],
            rounds_elapsed: 0,
            total_spent: 0.0,
        }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn remaining(&self) -> f64 {
        self.initial - self.total_spent
    }

    pub fn total_spent(&self) -> f64 {
        self.total_spent
    }

    pub fn rounds_elapsed(&self) -> u64 {
        self.rounds_elapsed
    }

    /// `M * c_i` for the given arm.
    pub fn round_cost(&self, arm: ArmId) -> f64 {
        self.round_costs[arm.index()]
    }

    pub fn min_round_cost(&self) -> f64 {
        self.round_costs
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn can_afford(&self, arm: ArmId) -> bool {
        self.round_cost(arm) <= self.remaining()
    }

    /// True while the cheapest arm is still affordable.
    pub fn has_feasible_arm(&self) -> bool {
        self.remaining() >= self.min_round_cost()
    }

    pub fn feasible_arms(&self) -> impl Iterator<Item = ArmId> + '_ {
        let remaining = self.remaining();
        self.round_costs
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c <= remaining)
            .map(|(i, _)| ArmId::from_index(i))
    }

    /// Debits one round on `arm` and returns the amount charged.
    ///
    /// Panics if the arm is not affordable; callers filter by feasibility first.
    pub fn debit(&mut self, arm: ArmId) -> f64 {
        let cost = self.round_cost(arm);
        assert!(
            cost <= self.remaining(),
            "debit of {cost} exceeds remaining budget {}",
            self.remaining()
        );
        self.debits[arm.index()] += 1;
        self.rounds_elapsed += 1;
        self.total_spent = self
            .debits
            .iter()
            .zip(&self.round_costs)
            .map(|(&n, &c)| n as f64 * c)
            .sum();
        cost
    }

    pub fn debits(&self) -> &[u64] {
        &self.debits
    }

    /// `|sum(T_i * M*c_i) + remaining - B|`, the conservation residual.
    pub fn conservation_error(&self) -> f64 {
        let spent: f64 = self
            .debits
            .iter()
            .zip(&self.round_costs)
            .map(|(&n, &c)| n as f64 * c)
            .sum();
        (spent + self.remaining() - self.initial).abs()
    }
}
