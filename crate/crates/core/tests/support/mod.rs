//! Step-by-step transcription of Budgeted-UCB used as a reference.
//!
//! Shares nothing with the library except the environment, so the two can
//! be compared action by action on the same feedback streams.

use bucb_core::env::Environment;
use bucb_core::model::ArmSpec;
use bucb_core::streams::FeedbackStream;
use bucb_core::ArmId;

pub fn reference_actions(
    arms: &[ArmSpec],
    m: usize,
    budget: f64,
    seed: u64,
    rep: u64,
) -> Vec<usize> {
    let env = Environment::new(arms, FeedbackStream::new(seed, rep));
    let n = arms.len();
    let c: Vec<f64> = arms.iter().map(|a| a.unit_cost).collect();
    let mf = m as f64;
    let mut u_hat = vec![0.0f64; n];
    let mut u_bar = vec![0.0f64; n];
    let mut pulls = vec![0u64; n];
    let mut remaining = budget;
    let mut actions = Vec::new();
    let mut t = 0u64;
    let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut feedback = vec![0.0; m];
    loop {
        let arm = if t < n as u64 {
            t as usize
        } else {
            if remaining < mf * c_min {
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for i in 0..n {
                if mf * c[i] > remaining {
                    continue;
                }
                let score = u_bar[i].ln() / c[i];
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((i, score));
                }
            }
            match best {
                Some((i, _)) => i,
                None => break,
            }
        };
        t += 1;
        env.sample(ArmId::from_index(arm), pulls[arm] + 1, &mut feedback);
        let sum: f64 = feedback.iter().sum();
        let seen = pulls[arm] as f64 * mf;
        u_hat[arm] = (u_hat[arm] * seen + sum) / (seen + mf);
        pulls[arm] += 1;
        remaining -= mf * c[arm];
        actions.push(arm);
        for i in 0..n {
            if pulls[i] > 0 {
                u_bar[i] = u_hat[i] + (2.0 * (t as f64).ln() / (pulls[i] as f64 * mf)).sqrt();
            }
        }
    }
    actions
}
