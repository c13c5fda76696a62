//! `bucb run` and `bucb bounds`.

use std::path::Path;

use bucb_core::analysis::{compute_gaps, BoundReport, EmpiricalSummary, GapProfile};
use bucb_core::model::QOE_MIN;
use bucb_core::runner::{run_plan, true_means, ExperimentPlan, PlanResult};
use bucb_core::{fit_log_coefficient, AnalysisError, PolicyKind};

use crate::config::CliConfig;
use crate::output;
use crate::CliError;

const TABLES: [&str; 5] = [
    "results.csv",
    "aggregate.csv",
    "arms.csv",
    "bounds.csv",
    "logfit.csv",
];

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn csv_err(name: &str) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("cannot write {name}: {e}"))
}

fn prepare_output_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config {
        key: "output_dir".into(),
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn tie_message(gaps: &GapProfile) -> String {
    let tied: Vec<String> = gaps
        .delta_ratio
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0.0)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    format!(
        "arms {} share the best utility-cost ratio; the bounds need a unique optimal arm",
        tied.join(", ")
    )
}

fn bound_error(e: AnalysisError, gaps: &GapProfile) -> CliError {
    match e {
        AnalysisError::ZeroGap => CliError::ZeroGap(tie_message(gaps)),
        other => CliError::Runtime(other.to_string()),
    }
}

/// Empirical counterparts of the bounds, taken from the `bucb` cell.
fn empirical_for(result: &PlanResult, budget: f64) -> Option<EmpiricalSummary> {
    let cell = result.cell(&PolicyKind::BudgetedUcb.label(), budget)?;
    Some(EmpiricalSummary {
        ti: cell.pulls.iter().map(|s| (s.mean, s.stderr)).collect(),
        tau: (cell.tau.mean, cell.tau.stderr),
        regret: (cell.regret_paired.mean, cell.regret_paired.stderr),
    })
}

fn write_arms(dir: &Path, plan: &ExperimentPlan, result: &PlanResult) -> Result<(), CliError> {
    let path = dir.join("arms.csv");
    let mut w = output::create(dir, "arms.csv").map_err(io_err(&path))?;
    output::arms_header(&mut w).map_err(csv_err("arms.csv"))?;
    if plan.redraw_arms && plan.arms.is_none() {
        for rep in 0..plan.replications {
            let arms = plan.arms_for_replication(rep);
            let means = true_means(&arms);
            let costs: Vec<f64> = arms.iter().map(|a| a.unit_cost).collect();
            let gaps = compute_gaps(&means, &costs);
            output::write_arm_set(&mut w, Some(rep), &arms, &means, &gaps)
                .map_err(csv_err("arms.csv"))?;
        }
    } else {
        output::write_arm_set(&mut w, None, &result.arms, &result.true_means, &result.gaps)
            .map_err(csv_err("arms.csv"))?;
    }
    w.flush().map_err(io_err(&path))
}

/// Bound rows for the shared arm set; empty when arms are redrawn or the
/// best arm is tied, since the bounds are then undefined.
fn write_run_bounds(
    dir: &Path,
    plan: &ExperimentPlan,
    result: &PlanResult,
    verbosity: u8,
) -> Result<(), CliError> {
    let path = dir.join("bounds.csv");
    let mut w = output::create(dir, "bounds.csv").map_err(io_err(&path))?;
    output::bounds_header(&mut w).map_err(csv_err("bounds.csv"))?;
    let shared = !(plan.redraw_arms && plan.arms.is_none());
    if shared && result.gaps.is_unique() {
        let costs: Vec<f64> = result.arms.iter().map(|a| a.unit_cost).collect();
        for &budget in &plan.budget_grid {
            let report = BoundReport::compute(
                budget,
                plan.num_users,
                &costs,
                &result.true_means,
                QOE_MIN,
                empirical_for(result, budget),
            )
            .map_err(|e| bound_error(e, &result.gaps))?;
            output::write_bound_report(&mut w, &report).map_err(csv_err("bounds.csv"))?;
        }
    } else if verbosity > 0 {
        let why = if shared {
            tie_message(&result.gaps)
        } else {
            "arms are redrawn per replication".into()
        };
        eprintln!("bounds.csv left empty: {why}");
    }
    w.flush().map_err(io_err(&path))
}

fn write_logfits(dir: &Path, plan: &ExperimentPlan, result: &PlanResult) -> Result<(), CliError> {
    let path = dir.join("logfit.csv");
    let mut w = output::create(dir, "logfit.csv").map_err(io_err(&path))?;
    output::logfit_header(&mut w).map_err(csv_err("logfit.csv"))?;
    for policy in &plan.policies {
        let label = policy.label();
        let cells: Vec<_> = result.cells.iter().filter(|c| c.policy == label).collect();
        for estimator in ["paired", "unpaired", "proxy"] {
            let points: Vec<(f64, f64)> = cells
                .iter()
                .map(|c| {
                    let s = match estimator {
                        "paired" => c.regret_paired,
                        "unpaired" => c.regret_unpaired,
                        _ => c.regret_proxy,
                    };
                    (c.budget, s.mean)
                })
                .collect();
            // fewer than three budgets: nothing to fit
            if let Ok(fit) = fit_log_coefficient(&points) {
                output::write_logfit(&mut w, &label, estimator, &fit, points.len())
                    .map_err(csv_err("logfit.csv"))?;
            }
        }
    }
    w.flush().map_err(io_err(&path))
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn summary(plan: &ExperimentPlan, result: &PlanResult) -> String {
    use std::fmt::Write;
    let budget = *plan.budget_grid.last().expect("validated grid");
    let mut s = String::new();
    let star = result.gaps.i_star;
    let _ = match result.gaps.delta_min {
        Some(d) => writeln!(s, "optimal arm {star} (smallest ratio gap {d:.6})"),
        None => writeln!(s, "optimal arm {star} (no suboptimal arm)"),
    };
    let _ = writeln!(s, "B = {budget}");
    let _ = writeln!(
        s,
        "{:<10} {:>14} {:>22}",
        "policy", "utility", "regret (paired)"
    );
    for policy in &plan.policies {
        let label = policy.label();
        if let Some(c) = result.cell(&label, budget) {
            let _ = writeln!(
                s,
                "{:<10} {:>14.3} {:>12.3} ± {:.3}",
                label, c.utility.mean, c.regret_paired.mean, c.regret_paired.stderr
            );
        }
    }
    s
}

fn bounds_text(star: bucb_core::ArmId, reports: &[BoundReport]) -> String {
    use std::fmt::Write;
    let mut s = format!("optimal arm {star}\n");
    for r in reports {
        let _ = writeln!(
            s,
            "B = {}: tau >= {:.6}, regret <= {:.6}",
            r.budget, r.tau_lower, r.regret_upper
        );
        for (i, b) in r.ti_bound.iter().enumerate() {
            if let Some(b) = b {
                let _ = writeln!(s, "  T_{} <= {:.6} (tau = {:.3})", i + 1, b, r.tau_for_ti);
            }
        }
    }
    s
}

/// Runs the plan and writes the five tables into the output directory.
pub fn cmd_run(config: &CliConfig) -> Result<PlanResult, CliError> {
    let plan = config.to_plan()?;
    let dir = config.output_dir.as_path();
    prepare_output_dir(dir)?;
    let result = run_plan(&plan).map_err(|e| CliError::Runtime(e.to_string()))?;

    let path = dir.join(TABLES[0]);
    let mut w = output::create(dir, TABLES[0]).map_err(io_err(&path))?;
    output::write_results(&mut w, plan.num_arms, &result.records).map_err(csv_err(TABLES[0]))?;
    let path = dir.join(TABLES[1]);
    let mut w = output::create(dir, TABLES[1]).map_err(io_err(&path))?;
    output::write_aggregate(&mut w, &result.cells).map_err(csv_err(TABLES[1]))?;
    write_arms(dir, &plan, &result)?;
    write_run_bounds(dir, &plan, &result, config.verbosity)?;
    write_logfits(dir, &plan, &result)?;

    if config.verbosity > 0 {
        emit(&summary(&plan, &result));
    }
    if config.verbosity > 1 {
        for t in TABLES {
            eprintln!("wrote {}", dir.join(t).display());
        }
    }
    Ok(result)
}

/// Evaluates the bounds for the realized arm set without running episodes.
pub fn cmd_bounds(config: &CliConfig) -> Result<Vec<BoundReport>, CliError> {
    let plan = config.to_plan()?;
    let arms = plan.base_arms();
    let means = true_means(&arms);
    let costs: Vec<f64> = arms.iter().map(|a| a.unit_cost).collect();
    let gaps = compute_gaps(&means, &costs);
    let reports = plan
        .budget_grid
        .iter()
        .map(|&b| BoundReport::compute(b, plan.num_users, &costs, &means, QOE_MIN, None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bound_error(e, &gaps))?;

    let dir = config.output_dir.as_path();
    prepare_output_dir(dir)?;
    let path = dir.join("bounds.csv");
    let mut w = output::create(dir, "bounds.csv").map_err(io_err(&path))?;
    output::bounds_header(&mut w).map_err(csv_err("bounds.csv"))?;
    for r in &reports {
        output::write_bound_report(&mut w, r).map_err(csv_err("bounds.csv"))?;
    }
    w.flush().map_err(io_err(&path))?;

    emit(&bounds_text(gaps.i_star, &reports));
    Ok(reports)
}
