use serde::{Deserialize, Serialize};

use crate::analysis::{drift_constant_c, performance_bounds, BoundReport, DriftConstant};
use crate::chanmodel::{
    apply_csi_model, gen_rayleigh_slot, ChannelMatrix, CsiMatrix, CsiModel, ScmProcess, ScmUserParams,
    UserClass,
};
use crate::error::{Error, Result};
use crate::phy::{realized_rates, GainDistribution, Mode, RateModel};
use crate::predictor::{classify_users, VectorPredictor};
use crate::rng::{complex_normal, derive_seed, stream, Tag};
use crate::scheduler::{
    mismatched_pfs_slot, schedule_slot, MismatchedPfsState, NprLink, QueueState, SmParams, UtilitySpec,
};
use crate::C64;

use super::config::{ChannelConfig, CsiConfig, ExperimentConfig, Policy, ScmConfig};

/// Which run of a sweep to execute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub policy: Policy,
    pub rate_model: RateModel,
    /// Control weight; ignored by the baseline.
    pub v: f64,
    pub snr_db: f64,
    /// Position of `snr_db` in the sweep; keys the random streams.
    pub snr_index: usize,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub slot: usize,
    /// Empty for the baseline, which keeps no queues.
    pub q: Vec<f64>,
    pub min_avg_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeFractions {
    pub sm: f64,
    pub stc: f64,
    pub idle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub spec: RunSpec,
    pub slots: usize,
    /// Time-averaged delivered rate per user (bits/channel use).
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    /// `Σ_k ln R̄_k`.
    pub sum_log_rate: f64,
    pub min_rate: f64,
    /// Standard error of `min_rate` from 20 batch means.
    pub min_rate_se: f64,
    pub activity: Vec<f64>,
    /// Time-averaged virtual arrivals; empty for the baseline.
    pub admitted: Vec<f64>,
    /// Time-averaged virtual queues; empty for the baseline.
    pub mean_queues: Vec<f64>,
    /// `max_k Q_k(t)/t` at the end of the run.
    pub final_queue_ratio: f64,
    pub modes: ModeFractions,
    /// First slot from which the running minimum average rate stays at or
    /// above 90% of its final value.
    pub settle_slot: usize,
    pub trace: Vec<TracePoint>,
    pub classes: Vec<UserClass>,
    /// Prediction MSE per user at classification time (SCM only).
    pub prediction_mse: Vec<f64>,
    pub bound: Option<BoundReport>,
}

/// Per-(trial, SNR) seed; independent of the policy so that every policy
/// sees the same channels.
pub fn run_seed(master: u64, trial: usize, snr_index: usize) -> u64 {
    derive_seed(master, &[trial as u64, snr_index as u64])
}

/// Source of true channels and transmitter CSI, slot by slot.
enum Environment {
    Rayleigh {
        models: Vec<CsiModel>,
    },
    Scm {
        procs: Vec<ScmProcess>,
        predictors: Vec<VectorPredictor>,
        spacing: u64,
        pilot_noise: f64,
        /// Absolute slot index of the first scheduled slot.
        offset: u64,
        class: Vec<UserClass>,
    },
}

struct Setup {
    env: Environment,
    links: Vec<Option<NprLink>>,
    classes: Vec<UserClass>,
    prediction_mse: Vec<f64>,
}

impl Environment {
    fn slot(&mut self, cfg: &ExperimentConfig, seed: u64, t: u64) -> Result<(ChannelMatrix, CsiMatrix)> {
        match self {
            Environment::Rayleigh { models } => {
                let mut h = gen_rayleigh_slot(&mut stream(seed, Tag::Channel, &[t]), cfg.antennas, cfg.users)?;
                h.slot = t;
                let csi = apply_csi_model(&h, models, &mut stream(seed, Tag::Csi, &[t]))?;
                Ok((h, csi))
            }
            Environment::Scm { procs, predictors, spacing, pilot_noise, offset, class } => {
                let abs = *offset + t;
                let (mut h, mut csi, _) =
                    scm_step(procs, predictors, cfg.antennas, *spacing, *pilot_noise, seed, abs)?;
                csi.class = class.clone();
                for (k, p) in predictors.iter().enumerate() {
                    csi.sigma2[k] = p.running_mse().unwrap_or(1.0).min(1.0);
                }
                h.slot = t;
                Ok((h, csi))
            }
        }
    }
}

/// Channel at absolute slot `abs` and the prediction made for it; the pilot
/// observations of that slot are then fed to the predictors and returned.
fn scm_step(
    procs: &[ScmProcess],
    predictors: &mut [VectorPredictor],
    m: usize,
    spacing: u64,
    pilot_noise: f64,
    seed: u64,
    abs: u64,
) -> Result<(ChannelMatrix, CsiMatrix, Vec<Vec<C64>>)> {
    let cols: Vec<Vec<C64>> = procs.iter().map(|p| p.vector(m, abs * spacing)).collect();
    let h = ChannelMatrix::from_columns(&cols)?;
    let preds: Vec<Vec<C64>> = predictors.iter().map(|p| p.latest()).collect();
    let est = ChannelMatrix::from_columns(&preds)?;
    let mut rng = stream(seed, Tag::Pilot, &[abs]);
    let mut all_obs = Vec::with_capacity(procs.len());
    for (k, p) in predictors.iter_mut().enumerate() {
        let obs: Vec<C64> = cols[k].iter().map(|&x| x + complex_normal(&mut rng, pilot_noise)).collect();
        p.push(&obs, Some(&cols[k]));
        all_obs.push(obs);
    }
    let k = procs.len();
    let csi = CsiMatrix { estimate: est, sigma2: vec![0.0; k], class: vec![UserClass::Predictable; k] };
    Ok((h, csi, all_obs))
}

fn setup(cfg: &ExperimentConfig, seed: u64, power: f64) -> Result<Setup> {
    let m = cfg.antennas;
    let n0 = 1.0;
    match (&cfg.channel, &cfg.csi) {
        (ChannelConfig::Rayleigh, CsiConfig::PerUser { models }) => {
            let erlang = GainDistribution::erlang(m as u32);
            let link = NprLink::new(&erlang, power, m, n0);
            let classes: Vec<UserClass> = models
                .iter()
                .map(|md| match md {
                    CsiModel::Unknown => UserClass::NonPredictable,
                    _ => UserClass::Predictable,
                })
                .collect();
            let links = classes
                .iter()
                .map(|c| (*c == UserClass::NonPredictable).then_some(link))
                .collect();
            Ok(Setup {
                env: Environment::Rayleigh { models: models.clone() },
                links,
                classes,
                prediction_mse: Vec::new(),
            })
        }
        (ChannelConfig::Scm(scm), CsiConfig::Predictor { rls, threshold }) => {
            let procs = scm_processes(scm, seed)?;
            let mut predictors = (0..cfg.users)
                .map(|_| VectorPredictor::new(m, *rls))
                .collect::<Result<Vec<_>>>()?;
            let spacing = scm.pilot_spacing as u64;
            let pilot_noise = n0 / power;
            let mut gains = vec![Vec::with_capacity(scm.warmup_slots); cfg.users];
            for abs in 0..scm.warmup_slots as u64 {
                let (_, _, obs) = scm_step(&procs, &mut predictors, m, spacing, pilot_noise, seed, abs)?;
                // Received pilot power as the users would report it.
                for (g, o) in gains.iter_mut().zip(&obs) {
                    g.push(o.iter().map(|z| z.norm_sqr()).sum());
                }
            }
            let mse: Vec<f64> =
                predictors.iter().map(|p| p.running_mse().unwrap_or(f64::INFINITY)).collect();
            let classes = classify_users(&mse, *threshold);
            let links = classes
                .iter()
                .zip(gains)
                .map(|(c, g)| -> Result<Option<NprLink>> {
                    if *c == UserClass::NonPredictable {
                        Ok(Some(NprLink::new(&GainDistribution::empirical(g)?, power, m, n0)))
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Setup {
                env: Environment::Scm {
                    procs,
                    predictors,
                    spacing,
                    pilot_noise,
                    offset: scm.warmup_slots as u64,
                    class: classes.clone(),
                },
                links,
                classes,
                prediction_mse: mse,
            })
        }
        _ => Err(Error::InvalidConfig("csi: does not match the channel model".into())),
    }
}

/// Per-user sum-of-sinusoids processes with amplitude phases keyed by the
/// run seed.
pub fn scm_processes(scm: &ScmConfig, seed: u64) -> Result<Vec<ScmProcess>> {
    scm.users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let mut rng = stream(seed, Tag::Amplitude, &[k as u64]);
            let mut p = ScmUserParams::with_random_phases(&u.aoas, u.travel_azimuth, u.speed_kmh / 3.6, &mut rng);
            p.carrier = scm.carrier_hz;
            p.symbol_interval = 1.0 / scm.symbol_rate_hz;
            p.antenna_spacing_wavelengths = scm.antenna_spacing_wavelengths;
            p.validate()?;
            Ok(ScmProcess::new(p))
        })
        .collect()
}

/// Drift constant for the run's channel, the largest over users when their
/// statistics differ.
pub fn drift_for(cfg: &ExperimentConfig, seed: u64, power: f64) -> Result<DriftConstant> {
    let m = cfg.antennas;
    let mut rng = stream(seed, Tag::DriftConstant, &[]);
    match &cfg.channel {
        ChannelConfig::Rayleigh => drift_constant_c(cfg.users, cfg.a_max, power, cfg.mc_samples, || {
            (0..m).map(|_| complex_normal(&mut rng, 1.0).norm_sqr()).sum()
        }),
        ChannelConfig::Scm(scm) => {
            use rand::Rng;
            let procs = scm_processes(scm, seed)?;
            let mut best: Option<DriftConstant> = None;
            for p in &procs {
                let d = drift_constant_c(cfg.users, cfg.a_max, power, cfg.mc_samples, || {
                    let i: u64 = rng.random_range(0..1u64 << 40);
                    p.vector(m, i).iter().map(|z| z.norm_sqr()).sum()
                })?;
                if best.as_ref().map_or(true, |b| d.c > b.c) {
                    best = Some(d);
                }
            }
            best.ok_or(Error::Empty("SCM users"))
        }
    }
}

/// Run one policy for `cfg.slots` slots. Fully determined by `cfg.seed` and
/// `spec`.
pub fn run_experiment(cfg: &ExperimentConfig, spec: &RunSpec) -> Result<RunMetrics> {
    cfg.validate()?;
    let seed = run_seed(cfg.seed, spec.trial, spec.snr_index);
    let power = ExperimentConfig::power(spec.snr_db);
    let drift = match spec.policy {
        Policy::MismatchedPfs => None,
        _ => Some(drift_for(cfg, seed, power)?),
    };
    run_with(cfg, spec, seed, power, drift.as_ref(), &mut |_, _, _, r| r)
}

/// The slot loop. `realize` may replace the delivered rates; it receives the
/// slot, true channel and decision, and the rates computed from them.
pub(crate) fn run_with(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    seed: u64,
    power: f64,
    drift: Option<&DriftConstant>,
    realize: &mut dyn FnMut(usize, &ChannelMatrix, Mode, Vec<f64>) -> Vec<f64>,
) -> Result<RunMetrics> {
    let k = cfg.users;
    let n0 = 1.0;
    let slots = cfg.slots;
    let mut st = setup(cfg, seed, power)?;

    let utility = spec.policy.utility_kind().map(|kind| UtilitySpec { kind, v: spec.v, a_max: cfg.a_max });
    if let Some(u) = &utility {
        u.validate()?;
    }
    let mut queues = QueueState::new(k);
    let mut tbar = MismatchedPfsState::new(k, cfg.t_c)?;
    let sm = SmParams { power, n0, backoff: cfg.backoff, gain_mode: Default::default() };
    let sm_mismatched = SmParams { gain_mode: cfg.mismatched_gain, ..sm };

    let mut rate_sum = vec![0.0; k];
    let mut active_count = vec![0usize; k];
    let mut arrival_sum = vec![0.0; k];
    let mut queue_sum = vec![0.0; k];
    let mut modes = [0usize; 3];
    let batches = 20.min(slots);
    let batch_len = slots / batches;
    let mut batch_sum = vec![0.0; k];
    let mut batch_mins = Vec::with_capacity(batches);
    let mut min_avg = Vec::with_capacity(slots);
    let mut trace = Vec::with_capacity(slots / cfg.trace_every + 1);

    for t in 0..slots {
        let (h, csi) = st.env.slot(cfg, seed, t as u64)?;
        let scored = match spec.policy {
            Policy::MismatchedPfs => mismatched_pfs_slot(&tbar, &csi, &sm_mismatched)?,
            _ => schedule_slot(&queues.q, &csi, &st.links, spec.rate_model, &sm)?,
        };
        let d = &scored.decision;
        let r = realize(t, &h, d.mode, realized_rates(&h, d, spec.rate_model, n0));

        match d.mode {
            Mode::SpatialMultiplexing => modes[0] += 1,
            Mode::SpaceTimeCoding => modes[1] += 1,
            Mode::Idle => modes[2] += 1,
        }
        for &u in &d.active {
            active_count[u] += 1;
        }
        for (i, &x) in r.iter().enumerate() {
            rate_sum[i] += x;
            batch_sum[i] += x;
        }
        if let Some(u) = &utility {
            for (s, q) in queue_sum.iter_mut().zip(&queues.q) {
                *s += q;
            }
            let a = queues.step(u, &r);
            for (s, x) in arrival_sum.iter_mut().zip(&a) {
                *s += x;
            }
        } else {
            tbar.update(&r);
        }

        let done = (t + 1) as f64;
        let cur_min = rate_sum.iter().fold(f64::INFINITY, |a, &b| a.min(b)) / done;
        min_avg.push(cur_min);
        if (t + 1) % batch_len == 0 && batch_mins.len() < batches {
            batch_mins.push(batch_sum.iter().fold(f64::INFINITY, |a, &b| a.min(b)) / batch_len as f64);
            batch_sum.iter_mut().for_each(|x| *x = 0.0);
        }
        if (t + 1) % cfg.trace_every == 0 || t + 1 == slots {
            trace.push(TracePoint {
                slot: t + 1,
                q: if utility.is_some() { queues.q.clone() } else { Vec::new() },
                min_avg_rate: cur_min,
            });
        }
    }

    let n = slots as f64;
    let rates: Vec<f64> = rate_sum.iter().map(|x| x / n).collect();
    let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let final_min = *min_avg.last().expect("at least one slot");
    let settle_slot = min_avg
        .iter()
        .rposition(|&x| x < 0.9 * final_min)
        .map_or(1, |i| i + 2);
    let min_rate_se = if batch_mins.len() >= 2 {
        let bm = batch_mins.len() as f64;
        let mean = batch_mins.iter().sum::<f64>() / bm;
        (batch_mins.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (bm - 1.0) / bm).sqrt()
    } else {
        0.0
    };

    let (admitted, mean_queues, final_queue_ratio, bound) = match &utility {
        Some(u) => {
            let mean_q: Vec<f64> = queue_sum.iter().map(|x| x / n).collect();
            let ratio = queues.q.iter().fold(0.0f64, |a, &b| a.max(b)) / n;
            let bound = match drift {
                Some(dc) => Some(performance_bounds(dc, u, power, &rates, &mean_q)?),
                None => None,
            };
            (arrival_sum.iter().map(|x| x / n).collect(), mean_q, ratio, bound)
        }
        None => (Vec::new(), Vec::new(), 0.0, None),
    };

    Ok(RunMetrics {
        spec: *spec,
        slots,
        sum_rate: rates.iter().sum(),
        sum_log_rate: rates.iter().map(|r| r.ln()).sum(),
        min_rate,
        min_rate_se,
        activity: active_count.iter().map(|&c| c as f64 / n).collect(),
        admitted,
        mean_queues,
        final_queue_ratio,
        modes: ModeFractions {
            sm: modes[0] as f64 / n,
            stc: modes[1] as f64 / n,
            idle: modes[2] as f64 / n,
        },
        settle_slot,
        trace,
        classes: st.classes,
        prediction_mse: st.prediction_mse,
        bound,
        rates,
    })
}
