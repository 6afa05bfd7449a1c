use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{BoundReport, BoundStatus, DriftConstant};
use crate::error::{Error, Result};
use crate::phy::RateModel;

use super::config::{ExperimentConfig, Policy};
use super::run::{drift_for, run_seed, run_with, RunMetrics, RunSpec, TracePoint};

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, se: (var / n).sqrt() }
    }
}

/// Trial statistics for one (policy, rate model, SNR, V) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub policy: Policy,
    pub rate_model: RateModel,
    pub snr_db: f64,
    /// `None` for the baseline.
    pub v: Option<f64>,
    pub trials: usize,
    pub slots: usize,
    pub sum_rate: Stat,
    pub sum_log_rate: Stat,
    pub min_rate: Stat,
    pub rates: Vec<Stat>,
    pub activity: Vec<Stat>,
    pub sm_fraction: Stat,
    pub stc_fraction: Stat,
    pub idle_fraction: Stat,
    pub settle_slot: Stat,
    pub final_queue_ratio: Stat,
    /// Queue traces averaged pointwise over trials.
    pub trace: Vec<TracePoint>,
    pub bounds: Vec<BoundReport>,
}

impl Aggregate {
    /// Trial count whose queue bound was violated.
    pub fn bound_failures(&self) -> usize {
        self.bounds.iter().filter(|b| b.status == BoundStatus::Fail).count()
    }

    pub fn run_name(&self) -> String {
        let mut s = format!("{}_{}_snr{}", self.policy.name(), self.rate_model.name(), self.snr_db);
        if let Some(v) = self.v {
            s.push_str(&format!("_v{v}"));
        }
        s
    }
}

pub fn aggregate_trials(runs: &[RunMetrics]) -> Result<Aggregate> {
    let first = runs.first().ok_or(Error::Empty("no trials to aggregate"))?;
    let k = first.rates.len();
    let col = |f: &dyn Fn(&RunMetrics) -> f64| Stat::of(runs.iter().map(f));
    let per_user = |f: &dyn Fn(&RunMetrics, usize) -> f64| -> Vec<Stat> {
        (0..k).map(|i| Stat::of(runs.iter().map(|r| f(r, i)))).collect()
    };

    let points = runs.iter().map(|r| r.trace.len()).min().unwrap_or(0);
    let n = runs.len() as f64;
    let trace = (0..points)
        .map(|p| {
            let qlen = first.trace[p].q.len();
            TracePoint {
                slot: first.trace[p].slot,
                q: (0..qlen).map(|i| runs.iter().map(|r| r.trace[p].q[i]).sum::<f64>() / n).collect(),
                min_avg_rate: runs.iter().map(|r| r.trace[p].min_avg_rate).sum::<f64>() / n,
            }
        })
        .collect();

    Ok(Aggregate {
        policy: first.spec.policy,
        rate_model: first.spec.rate_model,
        snr_db: first.spec.snr_db,
        v: (first.spec.policy != Policy::MismatchedPfs).then_some(first.spec.v),
        trials: runs.len(),
        slots: first.slots,
        sum_rate: col(&|r| r.sum_rate),
        sum_log_rate: col(&|r| r.sum_log_rate),
        min_rate: col(&|r| r.min_rate),
        rates: per_user(&|r, i| r.rates[i]),
        activity: per_user(&|r, i| r.activity[i]),
        sm_fraction: col(&|r| r.modes.sm),
        stc_fraction: col(&|r| r.modes.stc),
        idle_fraction: col(&|r| r.modes.idle),
        settle_slot: col(&|r| r.settle_slot as f64),
        final_queue_ratio: col(&|r| r.final_queue_ratio),
        trace,
        bounds: runs.iter().filter_map(|r| r.bound.clone()).collect(),
    })
}

/// Every run of a sweep in a fixed order: SNR, policy, rate model, V, then
/// trial. The baseline ignores V and is listed once per SNR and rate model.
pub fn plan(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for (snr_index, &snr_db) in cfg.snr_db.iter().enumerate() {
        for &policy in &cfg.policies {
            for &rate_model in &cfg.rate_models {
                let vs: &[f64] = if policy == Policy::MismatchedPfs { &cfg.v[..1] } else { &cfg.v };
                for &v in vs {
                    for trial in 0..cfg.trials {
                        out.push(RunSpec { policy, rate_model, v, snr_db, snr_index, trial });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<Aggregate>,
    /// Individual trial metrics, in the order of [`plan`].
    pub runs: Vec<RunMetrics>,
}

/// Run the whole sweep, farming runs over `threads` workers (all available
/// when `None`). Results do not depend on the thread count.
pub fn snr_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let specs = plan(cfg);

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            b = b.num_threads(t.max(1));
        }
        b.build().map_err(|e| Error::InvalidConfig(format!("threads: {e}")))?
    };

    let runs: Vec<RunMetrics> = pool.install(|| {
        // Drift constants depend only on (trial, SNR); compute each once.
        let keys: Vec<(usize, usize)> = cfg
            .snr_db
            .iter()
            .enumerate()
            .flat_map(|(s, _)| (0..cfg.trials).map(move |t| (t, s)))
            .collect();
        let needs_drift = cfg.policies.iter().any(|p| *p != Policy::MismatchedPfs);
        let drifts: Vec<Option<DriftConstant>> = keys
            .par_iter()
            .map(|&(t, s)| -> Result<Option<DriftConstant>> {
                if !needs_drift {
                    return Ok(None);
                }
                let seed = run_seed(cfg.seed, t, s);
                drift_for(cfg, seed, ExperimentConfig::power(cfg.snr_db[s])).map(Some)
            })
            .collect::<Result<_>>()?;

        specs
            .par_iter()
            .map(|spec| {
                let seed = run_seed(cfg.seed, spec.trial, spec.snr_index);
                let power = ExperimentConfig::power(spec.snr_db);
                let drift = match spec.policy {
                    Policy::MismatchedPfs => None,
                    _ => drifts[spec.snr_index * cfg.trials + spec.trial].as_ref(),
                };
                run_with(cfg, spec, seed, power, drift, &mut |_, _, _, r| r)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let points = runs
        .chunks(cfg.trials)
        .map(aggregate_trials)
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { points, runs })
}
