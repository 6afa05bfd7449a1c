use serde::{Deserialize, Serialize};

use crate::chanmodel::ChannelMatrix;
use crate::C64;

use super::inner;

/// How allocated rates turn into delivered rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// The allocated rate is delivered iff it is strictly below the realized
    /// mutual information.
    Outage,
    /// The realized mutual information is delivered.
    Optimistic,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            RateModel::Outage => "outage",
            RateModel::Optimistic => "optimistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SpatialMultiplexing,
    SpaceTimeCoding,
    Idle,
}

/// One slot's transmit strategy.
///
/// Spatial multiplexing serves `active[i]` with unit beam `beams[i]` at power
/// `powers[i]`. Space-time coding serves the single `active[0]` with
/// isotropic covariance `(powers[0]/M)·I` and no beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingDecision {
    pub mode: Mode,
    pub active: Vec<usize>,
    pub beams: Vec<Vec<C64>>,
    pub powers: Vec<f64>,
    /// Allocated rate per active user (bits/channel use).
    pub rates: Vec<f64>,
}

impl SignalingDecision {
    pub fn idle() -> Self {
        Self { mode: Mode::Idle, active: vec![], beams: vec![], powers: vec![], rates: vec![] }
    }

    pub fn stc(user: usize, power: f64, rate: f64) -> Self {
        Self {
            mode: Mode::SpaceTimeCoding,
            active: vec![user],
            beams: vec![],
            powers: vec![power],
            rates: vec![rate],
        }
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn position(&self, user: usize) -> Option<usize> {
        self.active.iter().position(|&k| k == user)
    }
}

/// SINR and mutual information of user `k` under decision `d`.
///
/// A user not served by `d` has zero signal and therefore zero SINR.
pub fn sinr_and_mi(h: &ChannelMatrix, d: &SignalingDecision, n0: f64, k: usize) -> (f64, f64) {
    let hk = h.column(k);
    let sinr = match d.mode {
        Mode::Idle => 0.0,
        Mode::SpaceTimeCoding => {
            if d.active.first() == Some(&k) {
                h.gain(k) * d.powers[0] / (h.antennas() as f64 * n0)
            } else {
                0.0
            }
        }
        Mode::SpatialMultiplexing => {
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (i, &j) in d.active.iter().enumerate() {
                let g = inner(hk, &d.beams[i]).norm_sqr() * d.powers[i];
                if j == k {
                    signal += g;
                } else {
                    interference += g;
                }
            }
            signal / (n0 + interference)
        }
    };
    (sinr, (1.0 + sinr).log2())
}

/// Delivered rate of every user for one slot.
pub fn realized_rates(
    h: &ChannelMatrix,
    d: &SignalingDecision,
    model: RateModel,
    n0: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; h.users()];
    for (i, &k) in d.active.iter().enumerate() {
        let (_, mi) = sinr_and_mi(h, d, n0, k);
        out[k] = match model {
            RateModel::Optimistic => mi,
            RateModel::Outage => {
                let r = d.rates[i];
                if r < mi {
                    r
                } else {
                    0.0
                }
            }
        };
    }
    out
}
