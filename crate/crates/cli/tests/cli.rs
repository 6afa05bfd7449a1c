use std::fs;
use std::path::Path;
use std::process::Command;

use mimosched::phy::RateModel;
use mimosched::sim::{ChannelConfig, CsiConfig, ExperimentConfig, Policy};
use mimosched_cli::{main_with, resolve_config, Cli, Preset};

use clap::Parser;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mimosched").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn config_of(args: &[&str]) -> ExperimentConfig {
    let cli = Cli::try_parse_from(std::iter::once("mimosched").chain(args.iter().copied())).unwrap();
    resolve_config(&cli).unwrap()
}

fn tiny(dir: &Path) -> String {
    let path = dir.join("tiny.json");
    fs::write(
        &path,
        r#"{"slots": 100, "trials": 1, "snr_db": [10.0], "mc_samples": 10000, "rate_models": ["outage"]}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn bare_invocation_is_a_usage_error() {
    let status = Command::new(env!("CARGO_BIN_EXE_mimosched")).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("Usage"));
    assert_eq!(run(&["--no-such-flag"]).0, 2);
    assert_eq!(run(&["--rate-model", "pessimistic"]).0, 2);
}

#[test]
fn tiny_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run(&["--config", &tiny(dir.path()), "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("all checks passed"));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("policy,rate_model,snr_db,v,trials,slots,sum_rate,sum_rate_se,sum_log_rate"));
    assert_eq!(summary.lines().count(), 4);
    assert!(out.join("report.json").exists());
    assert!(out.join("trace_new_hfs_outage_snr10_v100.csv").exists());
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_mimosched"))
        .args(["--config", &tiny(dir.path()), "--policy", "new_pfs"])
        .env("MMS_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(out.join("summary.csv").exists());
}

#[test]
fn unwritable_out_dir_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("out");
    let (code, _, stderr) = run(&["--config", &tiny(dir.path()), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries.len(), 2);

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["--config", missing.to_str().unwrap()]).0, 3);
}

#[test]
fn schema_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"slots": 100, "colour": 3}"#, "colour"),
        (r#"{"slots": "many"}"#, "slots"),
        (r#"{"slots": 0}"#, "slots"),
        (r#"[1, 2]"#, "object"),
        (r#"{"slots": "#, "tiny"),
        (r#"{"channel": {"kind": "scm", "users": [], "carrier_hz": 2.6e9}}"#, "channel"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        fs::write(&path, text).unwrap();
        let (code, _, stderr) = run(&["--config", path.to_str().unwrap(), "--out", "/nonexistent/never"]);
        assert_eq!(code, 4, "{text}: {stderr}");
        assert!(stderr.contains(needle) || (needle == &"tiny" && !stderr.is_empty()), "{text}: {stderr}");
    }
    let (code, _, stderr) = run(&["--preset", "fig2-sumrate", "--set", "csi.kind=predictor"]);
    assert_eq!(code, 4, "{stderr}");
    let (code, _, stderr) = run(&["--preset", "fig2-sumrate", "--set", "nothing.here=1"]);
    assert_eq!(code, 4);
    assert!(stderr.contains("nothing"));
}

#[test]
fn fig2_preset_matches_the_rayleigh_setup() {
    let cfg = config_of(&["--preset", "fig2-sumrate", "--seed", "7", "--out", "out/"]);
    assert_eq!(cfg.seed, 7);
    assert_eq!((cfg.antennas, cfg.users), (4, 8));
    assert_eq!(cfg.snr_db, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
    assert_eq!(cfg.policies, vec![Policy::NewPfs, Policy::NewHfs, Policy::MismatchedPfs]);
    assert_eq!(cfg.rate_models.len(), 2);
    let CsiConfig::PerUser { models } = &cfg.csi else { panic!("per-user CSI expected") };
    let unknown: Vec<usize> = models
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == mimosched::chanmodel::CsiModel::Unknown)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(unknown, vec![0, 1]);
}

#[test]
fn fig5_preset_uses_the_scm_tables() {
    let cfg = config_of(&["--preset", "fig5-scm"]);
    let ChannelConfig::Scm(scm) = &cfg.channel else { panic!("SCM expected") };
    assert_eq!(scm.symbol_rate_hz, 15e3);
    assert_eq!(scm.carrier_hz, 2.6e9);
    assert_eq!((scm.pilot_count, scm.pilot_spacing), (200, 20));
    assert_eq!(scm.users.len(), 8);
    assert!(scm.users.iter().all(|u| u.speed_kmh == 75.0));
    assert_eq!(scm.users[0].aoas, scm.users[1].aoas);
    assert_ne!(scm.users[0].aoas, scm.users[2].aoas);
    assert!(scm.users[2..].iter().all(|u| u.aoas == scm.users[2].aoas));
    assert!(matches!(cfg.csi, CsiConfig::Predictor { .. }));
}

#[test]
fn fig1_preset() {
    let cfg = config_of(&["--preset", "fig1-hfs-V"]);
    assert_eq!(cfg.policies, vec![Policy::NewHfs]);
    assert_eq!(cfg.v, vec![100.0, 1000.0]);
    assert_eq!((cfg.a_max, cfg.slots, cfg.trials), (100.0, 200_000, 1));
}

#[test]
fn layers_apply_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, r#"{"slots": 500, "trials": 3, "csi": {"kind": "per_user", "models": [{"kind": "perfect"}, {"kind": "perfect"}, {"kind": "perfect"}, {"kind": "perfect"}, {"kind": "perfect"}, {"kind": "perfect"}, {"kind": "perfect"}, {"kind": "gaussian_error", "sigma2": 0.2}]}}"#).unwrap();
    let p = path.to_str().unwrap();
    let cfg = config_of(&[
        "--preset", "fig4-activity", "--config", p, "--trials", "4", "--rate-model", "optimistic", "--set",
        "trials=5", "--set", "csi.models.0.kind=unknown", "--snr-db", "-5,0",
    ]);
    assert_eq!(cfg.slots, 500);
    assert_eq!(cfg.trials, 5);
    assert_eq!(cfg.snr_db, vec![-5.0, 0.0]);
    assert_eq!(cfg.rate_models, vec![RateModel::Optimistic]);
    let CsiConfig::PerUser { models } = &cfg.csi else { panic!() };
    assert_eq!(models[0], mimosched::chanmodel::CsiModel::Unknown);
    assert_eq!(models[7], mimosched::chanmodel::CsiModel::GaussianError { sigma2: 0.2 });
}

#[test]
fn serialized_configs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    for preset in [Preset::Fig1HfsV, Preset::Fig2SumRate, Preset::Fig3SumLog, Preset::Fig4Activity, Preset::Fig5Scm] {
        let mut cfg = preset.config();
        cfg.seed = 0xdead_beef;
        cfg.backoff = 0.1 + 0.2;
        let path = dir.path().join("cfg.json");
        fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(config_of(&["--config", path.to_str().unwrap()]), cfg);
        let (code, printed, _) = run(&["--config", path.to_str().unwrap(), "--print-config"]);
        assert_eq!(code, 0);
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&printed).unwrap(), cfg);
    }
}
