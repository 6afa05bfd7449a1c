//! Pilot-rate channel prediction with recursive least squares, and the
//! predictable / non-predictable user split derived from it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::chanmodel::UserClass;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlsConfig {
    /// Number of taps.
    pub order: usize,
    /// Forgetting factor in (0, 1].
    pub forgetting: f64,
    /// Initial inverse-correlation diagonal.
    pub init_diag: f64,
    /// Prediction distance in pilot steps.
    pub horizon: usize,
}

impl Default for RlsConfig {
    fn default() -> Self {
        Self { order: 8, forgetting: 0.99, init_diag: 100.0, horizon: 1 }
    }
}

impl RlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidConfig("RLS order must be ≥ 1".into()));
        }
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "RLS forgetting factor {} outside (0, 1]",
                self.forgetting
            )));
        }
        if !(self.init_diag > 0.0) {
            return Err(Error::InvalidConfig("RLS init_diag must be > 0".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("RLS horizon must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Number of observations needed before the first training update.
    fn min_samples(&self) -> usize {
        self.order + self.horizon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    /// Per-antenna prediction `horizon` pilot steps past the last observation.
    pub predicted: Vec<C64>,
    /// Exponentially-weighted prediction MSE normalized by channel power.
    pub running_mse: f64,
    pub samples_used: usize,
}

/// Scalar `horizon`-step linear predictor `ŷ[n+h] = wᴴ (y[n], …, y[n−p+1])`
/// with weights adapted by exponentially-weighted RLS.
#[derive(Debug, Clone)]
pub struct RlsPredictor {
    cfg: RlsConfig,
    /// Most recent observation first.
    history: VecDeque<C64>,
    weights: Vec<C64>,
    /// Inverse correlation matrix, row-major `order × order`.
    inv_corr: Vec<C64>,
    /// Outstanding predictions, oldest (soonest due) first.
    pending: VecDeque<C64>,
    seen: usize,
    mse: Option<f64>,
    power_sum: f64,
    power_count: usize,
}

impl RlsPredictor {
    pub fn new(cfg: RlsConfig) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.order;
        let mut inv_corr = vec![C64::new(0.0, 0.0); p * p];
        for i in 0..p {
            inv_corr[i * p + i] = C64::new(cfg.init_diag, 0.0);
        }
        Ok(Self {
            cfg,
            history: VecDeque::with_capacity(cfg.min_samples() + 1),
            weights: vec![C64::new(0.0, 0.0); p],
            inv_corr,
            pending: VecDeque::with_capacity(cfg.horizon + 1),
            seen: 0,
            mse: None,
            power_sum: 0.0,
            power_count: 0,
        })
    }

    pub fn config(&self) -> &RlsConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn samples_used(&self) -> usize {
        self.seen
    }

    /// Feed one pilot observation. `truth`, when known, is the noiseless
    /// channel at the same instant and is what prediction errors are scored
    /// against; otherwise the observation itself is the reference.
    ///
    /// Returns the prediction for `horizon` steps ahead once enough history
    /// has accumulated.
    pub fn push(&mut self, obs: C64, truth: Option<C64>) -> Option<C64> {
        let reference = truth.unwrap_or(obs);
        let p = self.cfg.order;
        let h = self.cfg.horizon;
        let n = self.seen;

        self.power_sum += reference.norm_sqr();
        self.power_count += 1;

        // Score the prediction that was made for this index, if any.
        if self.pending.len() == h {
            let pred = self.pending.pop_front().expect("pending is non-empty");
            if n >= 2 * p + h {
                let e2 = (reference - pred).norm_sqr();
                let lambda = self.cfg.forgetting;
                self.mse = Some(match self.mse {
                    Some(prev) => lambda * prev + (1.0 - lambda) * e2,
                    None => e2,
                });
            }
        }

        // Train on (y[n−h], …, y[n−h−p+1]) → y[n].
        if self.history.len() >= p + h - 1 {
            let x: Vec<C64> = self.history.iter().skip(h - 1).take(p).copied().collect();
            self.update(&x, obs);
        }

        self.history.push_front(obs);
        self.history.truncate(p + h - 1);
        self.seen += 1;

        if self.history.len() >= p {
            let pred = dot_h(&self.weights, self.history.iter().take(p).copied());
            self.pending.push_back(pred);
            Some(pred)
        } else {
            None
        }
    }

    fn update(&mut self, x: &[C64], desired: C64) {
        let p = self.cfg.order;
        let lambda = self.cfg.forgetting;
        let px: Vec<C64> = (0..p)
            .map(|i| (0..p).map(|j| self.inv_corr[i * p + j] * x[j]).sum())
            .collect();
        let denom = lambda + x.iter().zip(&px).map(|(xi, pi)| xi.conj() * pi).sum::<C64>().re;
        let gain: Vec<C64> = px.iter().map(|v| v / denom).collect();
        let err = desired - dot_h(&self.weights, x.iter().copied());
        for (w, g) in self.weights.iter_mut().zip(&gain) {
            *w += g * err.conj();
        }
        for i in 0..p {
            for j in 0..p {
                let idx = i * p + j;
                self.inv_corr[idx] = (self.inv_corr[idx] - gain[i] * px[j].conj()) / lambda;
            }
        }
        // Re-symmetrize P.
        for i in 0..p {
            for j in i..p {
                let a = self.inv_corr[i * p + j];
                let b = self.inv_corr[j * p + i];
                let s = 0.5 * (a + b.conj());
                self.inv_corr[i * p + j] = s;
                self.inv_corr[j * p + i] = s.conj();
            }
        }
    }

    /// The most recent prediction.
    pub fn latest(&self) -> Option<C64> {
        self.pending.back().copied()
    }

    /// Raw (unnormalized) exponentially-weighted squared error.
    pub fn raw_mse(&self) -> Option<f64> {
        self.mse
    }

    /// Running MSE divided by the mean reference power.
    pub fn normalized_mse(&self) -> Option<f64> {
        let power = self.power_sum / self.power_count.max(1) as f64;
        self.mse.map(|m| if power > 0.0 { m / power } else { m })
    }
}

/// `Σ conj(w_i) x_i`.
fn dot_h(w: &[C64], x: impl Iterator<Item = C64>) -> C64 {
    w.iter().zip(x).map(|(w, x)| w.conj() * x).sum()
}

/// One [`RlsPredictor`] per antenna.
#[derive(Debug, Clone)]
pub struct VectorPredictor {
    antennas: Vec<RlsPredictor>,
}

impl VectorPredictor {
    pub fn new(antennas: usize, cfg: RlsConfig) -> Result<Self> {
        Ok(Self { antennas: (0..antennas).map(|_| RlsPredictor::new(cfg)).collect::<Result<_>>()? })
    }

    /// Feed one observed channel vector; returns the predicted vector (zeros
    /// until the predictors have warmed up).
    pub fn push(&mut self, obs: &[C64], truth: Option<&[C64]>) -> Vec<C64> {
        self.antennas
            .iter_mut()
            .enumerate()
            .map(|(m, p)| p.push(obs[m], truth.map(|t| t[m])).unwrap_or_default())
            .collect()
    }

    pub fn latest(&self) -> Vec<C64> {
        self.antennas.iter().map(|p| p.latest().unwrap_or_default()).collect()
    }

    /// Mean normalized MSE over antennas; `None` before any error was scored.
    pub fn running_mse(&self) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.antennas.iter().map(|p| p.normalized_mse()).collect();
        vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Run a predictor over each antenna's pilot sequence.
///
/// With `truth` the error is measured against the noiseless channel at each
/// pilot instant; without it, against the next noisy observation.
pub fn rls_predict(
    observations: &[Vec<C64>],
    truth: Option<&[Vec<C64>]>,
    cfg: &RlsConfig,
) -> Result<PredictionReport> {
    cfg.validate()?;
    if observations.is_empty() {
        return Err(Error::Empty("no antenna sequences"));
    }
    let needed = cfg.order + cfg.horizon + 1;
    for seq in observations {
        if seq.len() < needed {
            return Err(Error::InsufficientData { needed, got: seq.len() });
        }
    }
    if let Some(t) = truth {
        if t.len() != observations.len()
            || t.iter().zip(observations).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::InvalidDimension("truth does not match observations".into()));
        }
    }

    let mut predicted = Vec::with_capacity(observations.len());
    let mut mse_sum = 0.0;
    let mut samples = 0;
    for (m, seq) in observations.iter().enumerate() {
        let mut rls = RlsPredictor::new(*cfg)?;
        for (n, &y) in seq.iter().enumerate() {
            rls.push(y, truth.map(|t| t[m][n]));
        }
        predicted.push(rls.latest().unwrap_or_default());
        mse_sum += rls.normalized_mse().unwrap_or(0.0);
        samples = samples.max(rls.samples_used());
    }
    Ok(PredictionReport {
        predicted,
        running_mse: mse_sum / observations.len() as f64,
        samples_used: samples,
    })
}

/// `NonPredictable` iff the MSE exceeds the threshold; a tie stays
/// `Predictable`.
pub fn classify_users(mse: &[f64], threshold: f64) -> Vec<UserClass> {
    mse.iter()
        .map(|&e| if e > threshold { UserClass::NonPredictable } else { UserClass::Predictable })
        .collect()
}
