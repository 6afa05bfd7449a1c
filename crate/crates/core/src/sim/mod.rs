//! Experiment driver: the slot loop, trial farming over SNR points and
//! policies, aggregation, and the CSV / JSON artifacts.
//!
//! Noise power is fixed at 1, so the transmit power is `10^(snr_db/10)`.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{ChannelConfig, CsiConfig, ExperimentConfig, Policy, ScmConfig, ScmUserConfig};
pub use output::{build_checks, build_report, summary_header, write_outputs, Check, PointReport, Report};
pub use run::{
    drift_for, run_experiment, run_seed, scm_processes, ModeFractions, RunMetrics, RunSpec, TracePoint,
};
pub use sweep::{aggregate_trials, plan, snr_sweep, Aggregate, Stat, SweepResult};
