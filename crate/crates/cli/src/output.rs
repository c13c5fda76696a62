//! CSV tables. Floats are written with 17 significant digits so that every
//! value parses back to the same `f64`; missing values are empty fields.
//!
//! | file | columns |
//! |------|---------|
//! | `results.csv` | policy, budget, replication, cumulative_utility, tau, remaining, regret_paired, regret_unpaired, regret_proxy, pulls_1 .. pulls_N |
//! | `aggregate.csv` | policy, budget, replications, then `<metric>_mean`, `<metric>_stderr` for utility, regret_paired, regret_unpaired, regret_proxy, tau, then degenerate |
//! | `arms.csv` | replication, arm, mu, noise_sigma, unit_cost, true_qoe, ratio, delta_cost, delta_ratio, optimal |
//! | `bounds.csv` | budget, quantity, arm, bound, empirical_mean, empirical_stderr |
//! | `logfit.csv` | policy, estimator, m, r2, points |
//!
//! `replication` in `arms.csv` is empty when one arm set is shared by all
//! replications. `quantity` in `bounds.csv` is `ti` (per suboptimal arm),
//! `tau` (lower bound) or `regret` (upper bound).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use bucb_core::analysis::{utility_cost_ratio, BoundReport, GapProfile, LogFit};
use bucb_core::model::ArmSpec;
use bucb_core::runner::{AggregateResult, ReplicationRecord};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn create(dir: &Path, name: &str) -> std::io::Result<csv::Writer<File>> {
    Ok(writer(File::create(dir.join(name))?))
}

pub fn write_results<W: Write>(
    w: &mut csv::Writer<W>,
    num_arms: usize,
    records: &[ReplicationRecord],
) -> csv::Result<()> {
    let mut header: Vec<String> = [
        "policy",
        "budget",
        "replication",
        "cumulative_utility",
        "tau",
        "remaining",
        "regret_paired",
        "regret_unpaired",
        "regret_proxy",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=num_arms).map(|i| format!("pulls_{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.policy.clone(),
            fmt_f64(r.budget),
            r.replication.to_string(),
            fmt_f64(r.cumulative_utility),
            r.tau.to_string(),
            fmt_f64(r.remaining),
            fmt_f64(r.regret_paired),
            fmt_f64(r.regret_unpaired),
            fmt_f64(r.regret_proxy),
        ];
        row.extend(r.pull_counts.iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate<W: Write>(
    w: &mut csv::Writer<W>,
    cells: &[AggregateResult],
) -> csv::Result<()> {
    let metrics = [
        "utility",
        "regret_paired",
        "regret_unpaired",
        "regret_proxy",
        "tau",
    ];
    let mut header = vec!["policy".to_string(), "budget".into(), "replications".into()];
    for m in metrics {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_stderr"));
    }
    header.push("degenerate".into());
    w.write_record(&header)?;
    for c in cells {
        let mut row = vec![
            c.policy.clone(),
            fmt_f64(c.budget),
            c.replications.to_string(),
        ];
        for s in [
            c.utility,
            c.regret_paired,
            c.regret_unpaired,
            c.regret_proxy,
            c.tau,
        ] {
            row.push(fmt_f64(s.mean));
            row.push(fmt_f64(s.stderr));
        }
        row.push(c.degenerate.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn arms_header<W: Write>(w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record([
        "replication",
        "arm",
        "mu",
        "noise_sigma",
        "unit_cost",
        "true_qoe",
        "ratio",
        "delta_cost",
        "delta_ratio",
        "optimal",
    ])
}

pub fn write_arm_set<W: Write>(
    w: &mut csv::Writer<W>,
    replication: Option<usize>,
    arms: &[ArmSpec],
    true_means: &[f64],
    gaps: &GapProfile,
) -> csv::Result<()> {
    for (i, a) in arms.iter().enumerate() {
        w.write_record([
            replication.map(|r| r.to_string()).unwrap_or_default(),
            a.id.number().to_string(),
            fmt_f64(a.expected_qoe),
            fmt_f64(a.noise_sigma),
            fmt_f64(a.unit_cost),
            fmt_f64(true_means[i]),
            fmt_f64(utility_cost_ratio(true_means[i], a.unit_cost)),
            fmt_f64(gaps.delta_cost[i]),
            fmt_f64(gaps.delta_ratio[i]),
            (gaps.i_star.index() == i).to_string(),
        ])?;
    }
    Ok(())
}

pub fn bounds_header<W: Write>(w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record([
        "budget",
        "quantity",
        "arm",
        "bound",
        "empirical_mean",
        "empirical_stderr",
    ])
}

pub fn write_bound_report<W: Write>(w: &mut csv::Writer<W>, r: &BoundReport) -> csv::Result<()> {
    let budget = fmt_f64(r.budget);
    let emp = r.empirical.as_ref();
    for (i, bound) in r.ti_bound.iter().enumerate() {
        if let Some(b) = bound {
            let e = emp.map(|e| e.ti[i]);
            w.write_record([
                budget.clone(),
                "ti".into(),
                (i + 1).to_string(),
                fmt_f64(*b),
                opt(e.map(|x| x.0)),
                opt(e.map(|x| x.1)),
            ])?;
        }
    }
    w.write_record([
        budget.clone(),
        "tau".into(),
        String::new(),
        fmt_f64(r.tau_lower),
        opt(emp.map(|e| e.tau.0)),
        opt(emp.map(|e| e.tau.1)),
    ])?;
    w.write_record([
        budget,
        "regret".into(),
        String::new(),
        fmt_f64(r.regret_upper),
        opt(emp.map(|e| e.regret.0)),
        opt(emp.map(|e| e.regret.1)),
    ])
}

pub fn logfit_header<W: Write>(w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(["policy", "estimator", "m", "r2", "points"])
}

pub fn write_logfit<W: Write>(
    w: &mut csv::Writer<W>,
    policy: &str,
    estimator: &str,
    fit: &LogFit,
    points: usize,
) -> csv::Result<()> {
    w.write_record([
        policy.to_string(),
        estimator.to_string(),
        fmt_f64(fit.m),
        fmt_f64(fit.r2),
        points.to_string(),
    ])
}
