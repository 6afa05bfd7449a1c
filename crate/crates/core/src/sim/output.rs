use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{BoundReport, BoundStatus};
use crate::error::Result;
use crate::phy::RateModel;

use super::config::{ExperimentConfig, Policy};
use super::sweep::{Aggregate, Stat, SweepResult};

/// One named assertion in the run report. Only gating checks decide the
/// overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub gating: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub run: String,
    pub policy: Policy,
    pub rate_model: RateModel,
    pub snr_db: f64,
    pub v: Option<f64>,
    pub sum_rate: Stat,
    pub min_rate: Stat,
    pub bounds: Vec<BoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub points: Vec<PointReport>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Queue-bound checks for every queue-based point, plus sum-rate orderings
/// of each new policy against the baseline.
pub fn build_checks(result: &SweepResult) -> Vec<Check> {
    let mut checks = Vec::new();
    for p in &result.points {
        if p.bounds.is_empty() {
            continue;
        }
        let inconclusive = p.bounds.iter().filter(|b| b.status == BoundStatus::Inconclusive).count();
        let failed = p.bound_failures();
        let worst = p
            .bounds
            .iter()
            .filter(|b| b.queue_bound.is_finite())
            .map(|b| b.queue_lhs / b.queue_bound)
            .fold(0.0f64, f64::max);
        checks.push(Check {
            name: format!("queue_bound/{}", p.run_name()),
            passed: failed == 0,
            gating: true,
            detail: format!(
                "{} trials: {failed} violated, {inconclusive} inconclusive, max lhs/bound {worst:.4}",
                p.bounds.len()
            ),
        });
        let hfs: Vec<bool> = p.bounds.iter().filter_map(|b| b.hfs_holds).collect();
        if !hfs.is_empty() {
            checks.push(Check {
                name: format!("hfs_measured_bound/{}", p.run_name()),
                passed: hfs.iter().all(|&x| x),
                gating: false,
                detail: format!("{} of {} trials within C + V·min R̄", hfs.iter().filter(|&&x| x).count(), hfs.len()),
            });
        }
    }

    for base in result.points.iter().filter(|p| p.policy == Policy::MismatchedPfs) {
        for p in result.points.iter().filter(|p| {
            p.policy != Policy::MismatchedPfs && p.rate_model == base.rate_model && p.snr_db == base.snr_db
        }) {
            let gap = p.sum_rate.mean - base.sum_rate.mean;
            let se = (p.sum_rate.se.powi(2) + base.sum_rate.se.powi(2)).sqrt();
            checks.push(Check {
                name: format!("ordering/{}_ge_mismatched", p.run_name()),
                passed: gap >= 0.0,
                gating: false,
                detail: format!(
                    "sum rate {:.4} vs {:.4} (ratio {:.3}, gap {:.2} SE)",
                    p.sum_rate.mean,
                    base.sum_rate.mean,
                    p.sum_rate.mean / base.sum_rate.mean,
                    if se > 0.0 { gap / se } else { f64::INFINITY }
                ),
            });
        }
    }
    checks
}

pub fn build_report(cfg: &ExperimentConfig, result: &SweepResult) -> Report {
    let checks = build_checks(result);
    let passed = checks.iter().filter(|c| c.gating).all(|c| c.passed);
    Report {
        config: cfg.clone(),
        points: result
            .points
            .iter()
            .map(|p| PointReport {
                run: p.run_name(),
                policy: p.policy,
                rate_model: p.rate_model,
                snr_db: p.snr_db,
                v: p.v,
                sum_rate: p.sum_rate,
                min_rate: p.min_rate,
                bounds: p.bounds.clone(),
            })
            .collect(),
        checks,
        passed,
    }
}

/// Header of `summary.csv` for `k` users.
pub fn summary_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "policy",
        "rate_model",
        "snr_db",
        "v",
        "trials",
        "slots",
        "sum_rate",
        "sum_rate_se",
        "sum_log_rate",
        "sum_log_rate_se",
        "min_rate",
        "min_rate_se",
        "sm_fraction",
        "stc_fraction",
        "idle_fraction",
        "settle_slot",
        "queue_bound_violations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for prefix in ["rate", "activity"] {
        for i in 1..=k {
            h.push(format!("{prefix}_{i}"));
            h.push(format!("{prefix}_{i}_se"));
        }
    }
    h
}

fn summary_row(p: &Aggregate) -> Vec<String> {
    let f = |x: f64| x.to_string();
    let mut row = vec![
        p.policy.name().to_string(),
        p.rate_model.name().to_string(),
        f(p.snr_db),
        p.v.map(f).unwrap_or_default(),
        p.trials.to_string(),
        p.slots.to_string(),
        f(p.sum_rate.mean),
        f(p.sum_rate.se),
        f(p.sum_log_rate.mean),
        f(p.sum_log_rate.se),
        f(p.min_rate.mean),
        f(p.min_rate.se),
        f(p.sm_fraction.mean),
        f(p.stc_fraction.mean),
        f(p.idle_fraction.mean),
        f(p.settle_slot.mean),
        p.bound_failures().to_string(),
    ];
    for stats in [&p.rates, &p.activity] {
        for s in stats {
            row.push(f(s.mean));
            row.push(f(s.se));
        }
    }
    row
}

fn write_summary(path: &Path, result: &SweepResult, k: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(summary_header(k))?;
    for p in &result.points {
        w.write_record(summary_row(p))?;
    }
    w.flush()?;
    Ok(())
}

fn write_trace(path: &Path, p: &Aggregate, k: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["slot".to_string()];
    header.extend((1..=k).map(|i| format!("Q_{i}")));
    header.push("min_avg_rate".into());
    w.write_record(&header)?;
    for t in &p.trace {
        let mut row = vec![t.slot.to_string()];
        if t.q.is_empty() {
            row.extend(std::iter::repeat(String::new()).take(k));
        } else {
            row.extend(t.q.iter().map(|x| x.to_string()));
        }
        row.push(t.min_avg_rate.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `summary.csv`, one `trace_<run>.csv` per sweep point and
/// `report.json` into `out_dir`.
///
/// Everything is first written to a staging directory inside `out_dir` and
/// then renamed into place, so an interrupted run leaves no half-written
/// file behind.
pub fn write_outputs(out_dir: &Path, report: &Report, result: &SweepResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let staging = tempfile::Builder::new().prefix(".staging-").tempdir_in(out_dir)?;
    let k = report.config.users;
    let mut names = vec!["summary.csv".to_string()];
    write_summary(&staging.path().join("summary.csv"), result, k)?;
    for p in &result.points {
        let name = format!("trace_{}.csv", p.run_name());
        write_trace(&staging.path().join(&name), p, k)?;
        names.push(name);
    }
    let json = serde_json::to_string_pretty(report)?;
    fs::write(staging.path().join("report.json"), json)?;
    names.push("report.json".into());

    let mut written = Vec::with_capacity(names.len());
    for n in names {
        let dest = out_dir.join(&n);
        fs::rename(staging.path().join(&n), &dest)?;
        written.push(dest);
    }
    Ok(written)
}
