//! Command-line front end: config assembly, presets, and the run driver.
//!
//! Settings are layered in a fixed order, later layers winning: built-in
//! defaults, then `--preset`, then the `--config` JSON file, then the
//! dedicated flags, then `--set` overrides.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use mimosched::chanmodel::CsiModel;
use mimosched::phy::RateModel;
use mimosched::predictor::RlsConfig;
use mimosched::sim::{
    build_report, snr_sweep, write_outputs, ChannelConfig, CsiConfig, ExperimentConfig, Policy, Report, ScmConfig,
    SweepResult,
};
use serde_json::Value;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "fig1-hfs-V", alias = "fig1-hfs-v")]
    Fig1HfsV,
    #[value(name = "fig2-sumrate")]
    Fig2SumRate,
    #[value(name = "fig3-sumlog")]
    Fig3SumLog,
    #[value(name = "fig4-activity")]
    Fig4Activity,
    #[value(name = "fig5-scm")]
    Fig5Scm,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        match self {
            Preset::Fig1HfsV => ExperimentConfig {
                policies: vec![Policy::NewHfs],
                rate_models: vec![RateModel::Outage],
                v: vec![100.0, 1000.0],
                a_max: 100.0,
                snr_db: vec![20.0],
                slots: 200_000,
                trials: 1,
                ..base
            },
            Preset::Fig2SumRate | Preset::Fig3SumLog => base,
            Preset::Fig4Activity => ExperimentConfig { snr_db: vec![20.0], ..base },
            Preset::Fig5Scm => ExperimentConfig {
                channel: ChannelConfig::Scm(ScmConfig::two_tables(8, &[0, 1], 75.0)),
                csi: CsiConfig::Predictor { rls: RlsConfig::default(), threshold: 0.1 },
                rate_models: vec![RateModel::Optimistic],
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateModelArg {
    Outage,
    Optimistic,
    Both,
}

impl RateModelArg {
    fn models(self) -> Vec<RateModel> {
        match self {
            RateModelArg::Outage => vec![RateModel::Outage],
            RateModelArg::Optimistic => vec![RateModel::Optimistic],
            RateModelArg::Both => vec![RateModel::Outage, RateModel::Optimistic],
        }
    }
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    Policy::parse(s).ok_or_else(|| format!("unknown policy '{s}' (new_pfs, new_hfs, mismatched_pfs)"))
}

/// Multiuser MIMO downlink scheduling simulator.
#[derive(Debug, Parser)]
#[command(name = "mimosched", version, arg_required_else_help = true)]
pub struct Cli {
    /// JSON config file; may be partial.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub slots: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated SNR values in dB.
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    /// Comma-separated policies.
    #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
    pub policy: Option<Vec<Policy>>,
    #[arg(long = "rate-model", value_enum)]
    pub rate_model: Option<RateModelArg>,
    /// Output directory.
    #[arg(long, env = "MMS_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Override any config field by dotted path, e.g. `channel.users.0.speed_kmh=5`.
    /// Values are read as JSON, falling back to a plain string.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
    /// Print the merged config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Schema(_) => EXIT_SCHEMA,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Schema(m) => m,
        }
    }
}

fn merge(dst: &mut Value, src: Value) {
    match (dst, src) {
        (Value::Object(d), Value::Object(s)) => {
            for (k, v) in s {
                match d.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        d.insert(k, v);
                    }
                }
            }
        }
        (d, s) => *d = s,
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    for part in path.split('.') {
        cur = match cur {
            Value::Object(m) => m
                .get_mut(part)
                .ok_or_else(|| CliError::Schema(format!("{path}: no field '{part}'")))?,
            Value::Array(a) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| CliError::Schema(format!("{path}: '{part}' is not an index")))?;
                let len = a.len();
                a.get_mut(i)
                    .ok_or_else(|| CliError::Schema(format!("{path}: index {i} out of range ({len})")))?
            }
            _ => return Err(CliError::Schema(format!("{path}: '{part}' is below a leaf"))),
        };
    }
    *cur = value;
    Ok(())
}

fn from_value(v: Value) -> Result<ExperimentConfig, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema(format!("{path}: {}", e.into_inner()))
    })
}

/// Build and validate the experiment config from parsed arguments.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = cli.preset.map(Preset::config).unwrap_or_default();

    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        if !file.is_object() {
            return Err(CliError::Schema(format!("{}: top level must be an object", path.display())));
        }
        let mut v = serde_json::to_value(&cfg).expect("config serializes");
        merge(&mut v, file);
        cfg = from_value(v)?;
    }

    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = cli.slots {
        cfg.slots = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = &cli.snr_db {
        cfg.snr_db = s.clone();
    }
    if let Some(p) = &cli.policy {
        cfg.policies = p.clone();
    }
    if let Some(r) = cli.rate_model {
        cfg.rate_models = r.models();
    }

    if !cli.set.is_empty() {
        let mut v = serde_json::to_value(&cfg).expect("config serializes");
        for kv in &cli.set {
            let (path, raw) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set {kv}: expected PATH=VALUE")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, path.trim(), value)?;
        }
        cfg = from_value(v)?;
    }

    cfg.validate().map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(cfg)
}

/// Per-user CSI models in short form for the digest.
fn csi_summary(cfg: &ExperimentConfig) -> String {
    match &cfg.csi {
        CsiConfig::PerUser { models } => models
            .iter()
            .map(|m| match m {
                CsiModel::Perfect => "P".to_string(),
                CsiModel::Unknown => "U".to_string(),
                CsiModel::GaussianError { sigma2 } => format!("e{sigma2}"),
            })
            .collect::<Vec<_>>()
            .join(""),
        CsiConfig::Predictor { threshold, .. } => format!("RLS-predicted, threshold {threshold}"),
    }
}

pub fn write_digest(w: &mut dyn Write, cfg: &ExperimentConfig, report: &Report, result: &SweepResult) -> std::io::Result<()> {
    let channel = match cfg.channel {
        ChannelConfig::Rayleigh => "rayleigh",
        ChannelConfig::Scm(_) => "scm",
    };
    writeln!(
        w,
        "M={} K={} channel={} csi={} slots={} trials={} seed={}",
        cfg.antennas,
        cfg.users,
        channel,
        csi_summary(cfg),
        cfg.slots,
        cfg.trials,
        cfg.seed
    )?;
    writeln!(w, "{:<42} {:>16} {:>16} {:>10} {:>6}", "run", "sum_rate", "min_rate", "sum_log", "idle")?;
    for p in &result.points {
        writeln!(
            w,
            "{:<42} {:>9.4}±{:<6.4} {:>9.4}±{:<6.4} {:>10.3} {:>6.3}",
            p.run_name(),
            p.sum_rate.mean,
            p.sum_rate.se,
            p.min_rate.mean,
            p.min_rate.se,
            p.sum_log_rate.mean,
            p.idle_fraction.mean
        )?;
    }
    let gating = report.checks.iter().filter(|c| c.gating).count();
    for c in report.checks.iter().filter(|c| !c.passed) {
        writeln!(w, "{} {}: {}", if c.gating { "FAILED" } else { "note" }, c.name, c.detail)?;
    }
    writeln!(
        w,
        "{} ({} gating checks)",
        if report.passed { "all checks passed" } else { "gating checks failed" },
        gating
    )
}

/// Run the sweep described by `cfg` and write its artifacts. Returns the
/// process exit code.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>, out: &mut dyn Write) -> Result<i32, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let result = snr_sweep(cfg, threads).map_err(|e| CliError::Schema(e.to_string()))?;
    let report = build_report(cfg, &result);
    write_outputs(out_dir, &report, &result).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    write_digest(out, cfg, &report, &result).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(if report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

/// Full command-line entry point.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            // A bare invocation shows help but is still a usage error.
            return if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                EXIT_USAGE
            } else {
                code
            };
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| {
        if cli.print_config {
            let json = serde_json::to_string_pretty(&cfg).expect("config serializes");
            writeln!(out, "{json}").map_err(|e| CliError::Io(e.to_string()))?;
            return Ok(EXIT_PASS);
        }
        execute(&cfg, &cli.out, cli.threads, out)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
