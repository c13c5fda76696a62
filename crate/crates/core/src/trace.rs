use crate::model::ArmId;

/// One executed round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Round index, starting at 1.
    pub t: u64,
    pub arm: ArmId,
    pub feedback: Vec<f64>,
    /// `M * c_arm`.
    pub cost: f64,
    /// `g(sum of feedback)`.
    pub utility: f64,
    /// Budget left after this round.
    pub remaining: f64,
}

/// Everything one policy did during one budgeted episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub policy: String,
    pub budget: f64,
    pub num_users: usize,
    pub rounds: Vec<RoundRecord>,
    /// Final `T_i` per arm.
    pub pull_counts: Vec<u64>,
    pub remaining: f64,
}

impl EpisodeTrace {
    /// Number of rounds played, `tau(B)`.
    pub fn tau(&self) -> u64 {
        self.rounds.len() as u64
    }

    /// Realized reward `R_B`: the summed utility over all rounds.
    pub fn cumulative_utility(&self) -> f64 {
        self.rounds.iter().map(|r| r.utility).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.rounds.iter().map(|r| r.cost).sum()
    }

    pub fn actions(&self) -> Vec<ArmId> {
        self.rounds.iter().map(|r| r.arm).collect()
    }
}
