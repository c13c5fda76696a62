//! JSON experiment configuration.
//!
//! Every field is optional and falls back to the runner defaults:
//!
//! ```json
//! {
//!   "num_arms": 10,
//!   "num_users": 5,
//!   "cost_regime": "medium",
//!   "qoe_range": [1.0, 2.0],
//!   "noise_sigma": 0.1,
//!   "arms": [{ "qoe": 1.5, "cost": 1.2, "noise_sigma": 0.1 }],
//!   "budget_grid": [500, 1000, 2000, 5000, 10000, 20000, 50000],
//!   "policies": ["oracle", "bucb", "ep1", "ep5", "epx", "etc15", "etc20", "etc25"],
//!   "greedy_ranking": "ratio",
//!   "replications": 50,
//!   "base_seed": 2023,
//!   "redraw_arms": false,
//!   "utility": "ln",
//!   "output_dir": "results",
//!   "verbosity": 1
//! }
//! ```
//!
//! `arms`, when given, replaces the random draw and makes `num_arms`,
//! `cost_regime` and `qoe_range` irrelevant.

use std::path::{Path, PathBuf};

use bucb_core::model::{initialization_cost, ArmId, ArmSpec, QOE_MAX, QOE_MIN};
use bucb_core::policies::GreedyRanking;
use bucb_core::runner::{CostRegime, ExperimentPlan};
use bucb_core::{PolicyKind, UtilityFunction};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeName {
    Low,
    Medium,
    High,
}

impl From<RegimeName> for CostRegime {
    fn from(r: RegimeName) -> Self {
        match r {
            RegimeName::Low => CostRegime::Low,
            RegimeName::Medium => CostRegime::Medium,
            RegimeName::High => CostRegime::High,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingName {
    Ratio,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum UtilityName {
    #[serde(rename = "ln")]
    NaturalLog,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmEntry {
    /// Pre-truncation mean QoE.
    pub qoe: f64,
    pub cost: f64,
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub num_arms: usize,
    pub num_users: usize,
    pub cost_regime: RegimeName,
    pub qoe_range: [f64; 2],
    pub noise_sigma: f64,
    pub arms: Option<Vec<ArmEntry>>,
    pub budget_grid: Vec<f64>,
    pub policies: Vec<String>,
    pub greedy_ranking: RankingName,
    pub replications: usize,
    pub base_seed: u64,
    pub redraw_arms: bool,
    pub utility: UtilityName,
    pub output_dir: PathBuf,
    pub verbosity: u8,
}

impl Default for CliConfig {
    fn default() -> Self {
        let plan = ExperimentPlan::default();
        Self {
            num_arms: plan.num_arms,
            num_users: plan.num_users,
            cost_regime: RegimeName::Medium,
            qoe_range: [plan.qoe_range.0, plan.qoe_range.1],
            noise_sigma: plan.noise_sigma,
            arms: None,
            budget_grid: plan.budget_grid,
            policies: plan.policies.iter().map(PolicyKind::label).collect(),
            greedy_ranking: RankingName::Ratio,
            replications: plan.replications,
            base_seed: plan.base_seed,
            redraw_arms: false,
            utility: UtilityName::NaturalLog,
            output_dir: PathBuf::from("results"),
            verbosity: 1,
        }
    }
}

/// Command-line and environment values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub replications: Option<usize>,
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl CliConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let key = if key == "." {
                "config".to_string()
            } else {
                key
            };
            invalid(key, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.base_seed = seed;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(r) = o.replications {
            self.replications = r;
        }
    }

    fn policy_kinds(&self) -> Result<Vec<PolicyKind>, CliError> {
        if self.policies.is_empty() {
            return Err(invalid("policies", "at least one policy is required"));
        }
        let mut kinds = Vec::with_capacity(self.policies.len());
        for (i, label) in self.policies.iter().enumerate() {
            let key = format!("policies[{i}]");
            let mut kind: PolicyKind = label.parse().map_err(|e| invalid(&key, format!("{e}")))?;
            if self.greedy_ranking == RankingName::Raw {
                kind = kind.with_ranking(GreedyRanking::RawMean);
            }
            let label = kind.label();
            if kinds.iter().any(|k: &PolicyKind| k.label() == label) {
                return Err(invalid(key, format!("duplicate policy `{label}`")));
            }
            kinds.push(kind);
        }
        Ok(kinds)
    }

    fn explicit_arms(&self) -> Result<Option<Vec<ArmSpec>>, CliError> {
        let Some(entries) = &self.arms else {
            return Ok(None);
        };
        if entries.len() < 2 {
            return Err(invalid(
                "arms",
                format!("need at least 2 arms, got {}", entries.len()),
            ));
        }
        let mut arms = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if !(QOE_MIN..=QOE_MAX).contains(&e.qoe) {
                return Err(invalid(
                    format!("arms[{i}].qoe"),
                    format!("{} is outside [1, 2]", e.qoe),
                ));
            }
            if !(e.cost > 0.0 && e.cost.is_finite()) {
                return Err(invalid(
                    format!("arms[{i}].cost"),
                    format!("{} is not a positive cost", e.cost),
                ));
            }
            let sigma = e.noise_sigma.unwrap_or(self.noise_sigma);
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(invalid(
                    format!("arms[{i}].noise_sigma"),
                    format!("{sigma} is not positive"),
                ));
            }
            arms.push(ArmSpec::new(ArmId::from_index(i), e.qoe, e.cost).with_noise(sigma));
        }
        Ok(Some(arms))
    }

    /// Checks every field and builds the runner plan. Errors name the key.
    pub fn to_plan(&self) -> Result<ExperimentPlan, CliError> {
        if self.num_users == 0 {
            return Err(invalid("num_users", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid(
                "noise_sigma",
                format!("{} is not positive", self.noise_sigma),
            ));
        }
        let arms = self.explicit_arms()?;
        if arms.is_none() {
            if self.num_arms < 2 {
                return Err(invalid(
                    "num_arms",
                    format!("need at least 2 arms, got {}", self.num_arms),
                ));
            }
            let [lo, hi] = self.qoe_range;
            if !(QOE_MIN <= lo && lo <= hi && hi <= QOE_MAX) {
                return Err(invalid(
                    "qoe_range",
                    format!("[{lo}, {hi}] must lie within [1, 2]"),
                ));
            }
        }
        if self.budget_grid.is_empty() {
            return Err(invalid("budget_grid", "must contain at least one budget"));
        }
        if self.budget_grid.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(invalid(
                "budget_grid",
                "budgets must be positive and finite",
            ));
        }
        if self.budget_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "budget_grid",
                "budgets must be strictly increasing",
            ));
        }
        let plan = ExperimentPlan {
            num_arms: arms.as_ref().map_or(self.num_arms, Vec::len),
            num_users: self.num_users,
            cost_regime: self.cost_regime.into(),
            qoe_range: (self.qoe_range[0], self.qoe_range[1]),
            noise_sigma: self.noise_sigma,
            arms,
            budget_grid: self.budget_grid.clone(),
            policies: self.policy_kinds()?,
            replications: self.replications,
            base_seed: self.base_seed,
            utility: match self.utility {
                UtilityName::NaturalLog => UtilityFunction::NaturalLog,
            },
            redraw_arms: self.redraw_arms,
        };
        let reps = if plan.redraw_arms && plan.arms.is_none() {
            plan.replications
        } else {
            1
        };
        for rep in 0..reps {
            let required = initialization_cost(&plan.arms_for_replication(rep), plan.num_users);
            if self.budget_grid[0] < required {
                return Err(invalid(
                    "budget_grid",
                    format!(
                        "smallest budget {} cannot pull every arm once (needs {required})",
                        self.budget_grid[0]
                    ),
                ));
            }
        }
        plan.validate()
            .map_err(|e| invalid("config", e.to_string()))?;
        Ok(plan)
    }
}
