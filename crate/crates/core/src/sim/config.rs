use serde::{Deserialize, Serialize};

use crate::chanmodel::{
    CsiModel, AOA_PACKED, AOA_SEPARATED, AZIMUTH_PACKED, AZIMUTH_SEPARATED, CARRIER_HZ, D_MIN_M,
    PILOT_COUNT, PILOT_SPACING, SYMBOL_RATE_HZ,
};
use crate::error::{Error, Result};
use crate::phy::RateModel;
use crate::predictor::RlsConfig;
use crate::scheduler::{GainMode, UtilityKind, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    NewPfs,
    NewHfs,
    MismatchedPfs,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::NewPfs, Policy::NewHfs, Policy::MismatchedPfs];

    pub fn name(self) -> &'static str {
        match self {
            Policy::NewPfs => "new_pfs",
            Policy::NewHfs => "new_hfs",
            Policy::MismatchedPfs => "mismatched_pfs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|p| p.name() == norm)
    }

    /// Utility driving the virtual queues; `None` for the baseline.
    pub fn utility_kind(self) -> Option<UtilityKind> {
        match self {
            Policy::NewPfs => Some(UtilityKind::Pfs),
            Policy::NewHfs => Some(UtilityKind::Hfs),
            Policy::MismatchedPfs => None,
        }
    }
}

/// One user of the sum-of-sinusoids channel. Amplitude phases are redrawn
/// every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmUserConfig {
    /// Angles of arrival (rad).
    pub aoas: Vec<f64>,
    /// Direction of travel (rad).
    pub travel_azimuth: f64,
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmConfig {
    pub users: Vec<ScmUserConfig>,
    pub carrier_hz: f64,
    pub symbol_rate_hz: f64,
    /// Symbols per slot; one pilot per slot.
    pub pilot_spacing: usize,
    pub pilot_count: usize,
    pub antenna_spacing_wavelengths: f64,
    /// Kept for reference; the flat sum-of-sinusoids model does not use it.
    pub d_min_m: f64,
    /// Slots of pilots observed before scheduling starts. Classification and
    /// the non-predictable gain distributions come from this period.
    pub warmup_slots: usize,
}

impl ScmConfig {
    /// Users `packed` use the clustered angle table, the rest the separated one.
    pub fn two_tables(users: usize, packed: &[usize], speed_kmh: f64) -> Self {
        let users = (0..users)
            .map(|k| {
                if packed.contains(&k) {
                    ScmUserConfig {
                        aoas: AOA_PACKED.to_vec(),
                        travel_azimuth: AZIMUTH_PACKED,
                        speed_kmh,
                    }
                } else {
                    ScmUserConfig {
                        aoas: AOA_SEPARATED.to_vec(),
                        travel_azimuth: AZIMUTH_SEPARATED,
                        speed_kmh,
                    }
                }
            })
            .collect();
        Self {
            users,
            carrier_hz: CARRIER_HZ,
            symbol_rate_hz: SYMBOL_RATE_HZ,
            pilot_spacing: PILOT_SPACING,
            pilot_count: PILOT_COUNT,
            antenna_spacing_wavelengths: 0.5,
            d_min_m: D_MIN_M,
            warmup_slots: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelConfig {
    Rayleigh,
    Scm(ScmConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsiConfig {
    /// A fixed corruption model per user (block-fading channels only).
    PerUser { models: Vec<CsiModel> },
    /// RLS prediction from pilots, users classified by prediction MSE.
    Predictor { rls: RlsConfig, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub antennas: usize,
    pub users: usize,
    pub snr_db: Vec<f64>,
    pub slots: usize,
    pub trials: usize,
    pub seed: u64,
    pub policies: Vec<Policy>,
    pub rate_models: Vec<RateModel>,
    /// Control weights; every value is run for the queue-based policies.
    pub v: Vec<f64>,
    pub a_max: f64,
    pub channel: ChannelConfig,
    pub csi: CsiConfig,
    /// Averaging window of the baseline's throughput estimate (slots).
    pub t_c: f64,
    /// Monte-Carlo draws for the drift constant.
    pub mc_samples: usize,
    /// Keep one queue-trace point every this many slots.
    pub trace_every: usize,
    /// Multiplier on allocated rates of predictable users.
    pub backoff: f64,
    /// Gain used by the baseline for power and rate allocation.
    pub mismatched_gain: GainMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut models = vec![CsiModel::Perfect; 8];
        models[0] = CsiModel::Unknown;
        models[1] = CsiModel::Unknown;
        Self {
            antennas: 4,
            users: 8,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            slots: 20_000,
            trials: 10,
            seed: 1,
            policies: Policy::ALL.to_vec(),
            rate_models: vec![RateModel::Outage, RateModel::Optimistic],
            v: vec![100.0],
            a_max: 100.0,
            channel: ChannelConfig::Rayleigh,
            csi: CsiConfig::PerUser { models },
            t_c: 1000.0,
            mc_samples: 100_000,
            trace_every: 100,
            backoff: 1.0,
            mismatched_gain: GainMode::Effective,
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(bad("antennas", "must be ≥ 1"));
        }
        if self.users == 0 {
            return Err(bad("users", "must be ≥ 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(bad("snr_db", "needs at least one finite value"));
        }
        if self.slots == 0 {
            return Err(bad("slots", "must be ≥ 1"));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be ≥ 1"));
        }
        if self.policies.is_empty() {
            return Err(bad("policies", "needs at least one policy"));
        }
        if self.rate_models.is_empty() {
            return Err(bad("rate_models", "needs at least one rate model"));
        }
        if self.v.is_empty() {
            return Err(bad("v", "needs at least one value"));
        }
        for &v in &self.v {
            UtilitySpec { kind: UtilityKind::Pfs, v, a_max: self.a_max }
                .validate()
                .map_err(|e| bad("v/a_max", e))?;
        }
        if !(self.t_c >= 1.0) {
            return Err(bad("t_c", "must be ≥ 1"));
        }
        if self.mc_samples < 10_000 {
            return Err(bad("mc_samples", "must be ≥ 10000"));
        }
        if self.trace_every == 0 {
            return Err(bad("trace_every", "must be ≥ 1"));
        }
        if !(self.backoff > 0.0 && self.backoff <= 1.0) {
            return Err(bad("backoff", "must be in (0, 1]"));
        }
        match (&self.channel, &self.csi) {
            (ChannelConfig::Rayleigh, CsiConfig::PerUser { models }) => {
                if models.len() != self.users {
                    return Err(bad("csi.models", format!("{} models for {} users", models.len(), self.users)));
                }
                for m in models {
                    m.validate().map_err(|e| bad("csi.models", e))?;
                }
            }
            (ChannelConfig::Scm(scm), CsiConfig::Predictor { rls, threshold }) => {
                if scm.users.len() != self.users {
                    return Err(bad(
                        "channel.users",
                        format!("{} SCM users for {} users", scm.users.len(), self.users),
                    ));
                }
                for (k, u) in scm.users.iter().enumerate() {
                    if u.aoas.is_empty() {
                        return Err(bad(&format!("channel.users[{k}].aoas"), "needs at least one ray"));
                    }
                    if !(u.speed_kmh >= 0.0) {
                        return Err(bad(&format!("channel.users[{k}].speed_kmh"), "must be ≥ 0"));
                    }
                }
                if scm.pilot_spacing == 0 || scm.pilot_count == 0 {
                    return Err(bad("channel.pilot_spacing", "pilot spacing and count must be ≥ 1"));
                }
                if !(scm.carrier_hz > 0.0 && scm.symbol_rate_hz > 0.0) {
                    return Err(bad("channel.carrier_hz", "carrier and symbol rate must be > 0"));
                }
                let needed = scm.pilot_count.max(1000).max(rls.order + rls.horizon + 1);
                if scm.warmup_slots < needed {
                    return Err(bad("channel.warmup_slots", format!("must be ≥ {needed}")));
                }
                rls.validate().map_err(|e| bad("csi.rls", e))?;
                if !(*threshold > 0.0) {
                    return Err(bad("csi.threshold", "must be > 0"));
                }
            }
            (ChannelConfig::Rayleigh, CsiConfig::Predictor { .. }) => {
                return Err(bad("csi", "the predictor needs the SCM channel (block fading is unpredictable)"));
            }
            (ChannelConfig::Scm(_), CsiConfig::PerUser { .. }) => {
                return Err(bad("csi", "per-user CSI models apply to block fading only; use the predictor with SCM"));
            }
        }
        Ok(())
    }

    /// Linear transmit power for an SNR in dB (noise power is 1).
    pub fn power(snr_db: f64) -> f64 {
        10f64.powf(snr_db / 10.0)
    }
}
