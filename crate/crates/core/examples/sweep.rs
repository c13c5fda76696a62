//! Runs the default N=10, M=5 medium-cost sweep and prints the regret table.
//!
//! `cargo run --release -p bucb-core --example sweep -- [seed] [replications] [policies]`
//!
//! `policies` is a comma-separated label list such as `bucb,ep1-raw,epx`.

use bucb_core::analysis::fit_log_coefficient;
use bucb_core::runner::{run_plan, ExperimentPlan};
use bucb_core::PolicyKind;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(2023, |s| s.parse().expect("seed"));
    let replications = args.next().map_or(50, |s| s.parse().expect("replications"));
    let mut policies = PolicyKind::standard_set();
    if let Some(list) = args.next() {
        policies = list
            .split(',')
            .map(|l| l.parse().expect("policy label"))
            .collect();
        if !policies.iter().any(PolicyKind::is_oracle) {
            policies.insert(0, PolicyKind::Oracle);
        }
    }
    let plan = ExperimentPlan {
        policies,
        budget_grid: vec![5000.0, 10000.0, 20000.0, 50000.0],
        replications,
        base_seed: seed,
        ..ExperimentPlan::default()
    };
    let start = std::time::Instant::now();
    let result = run_plan(&plan).expect("plan runs");
    println!("I* = {}  ({:?})", result.gaps.i_star, result.gaps.delta_min);
    for cell in &result.cells {
        println!(
            "{:>7} B={:>6} utility={:>10.2} regret={:>8.2} ± {:>6.2}  unpaired={:>8.2}  proxy={:>8.2}  tau={:.1}",
            cell.policy,
            cell.budget,
            cell.utility.mean,
            cell.regret_paired.mean,
            cell.regret_paired.stderr,
            cell.regret_unpaired.mean,
            cell.regret_proxy.mean,
            cell.tau.mean,
        );
    }
    for policy in &plan.policies {
        let label = policy.label();
        let points: Vec<(f64, f64)> = result
            .cells
            .iter()
            .filter(|c| c.policy == label)
            .map(|c| (c.budget, c.regret_paired.mean))
            .collect();
        if let Ok(fit) = fit_log_coefficient(&points) {
            println!("{label:>7}: m = {:.3}, r2 = {:.3}", fit.m, fit.r2);
        }
    }
    eprintln!("elapsed {:?}", start.elapsed());
}
