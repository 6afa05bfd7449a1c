use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chanmodel::{CsiMatrix, UserClass};
use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::C64;

use super::{inner, Mode, SignalingDecision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, se: (var / n).sqrt() }
    }
}

/// Monte-Carlo estimate of `E[I_k | Ĥ]` for every user served by `d`, drawing
/// `h_k = ĥ_k + e_k` with `e_k ~ CN(0, σ_k² I)`.
///
/// Results are in the order of `d.active`. Users whose estimate carries no
/// information about the channel are rejected: their conditional law is not
/// centred on the estimate.
pub fn conditional_rate_mc<R: Rng + ?Sized>(
    csi: &CsiMatrix,
    d: &SignalingDecision,
    n0: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<McEstimate>> {
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one Monte-Carlo sample".into()));
    }
    let m = csi.antennas();
    let mut out = Vec::with_capacity(d.active.len());
    for &k in &d.active {
        if csi.class[k] == UserClass::NonPredictable {
            return Err(Error::UnsupportedModel {
                user: k,
                reason: "CSI carries no information; use the unconditional rate",
            });
        }
        let s2 = csi.sigma2[k];
        let est = csi.column(k);
        let draw = |h: &[C64]| -> f64 {
            let sinr = match d.mode {
                Mode::Idle => 0.0,
                Mode::SpaceTimeCoding => {
                    h.iter().map(|z| z.norm_sqr()).sum::<f64>() * d.powers[0] / (m as f64 * n0)
                }
                Mode::SpatialMultiplexing => {
                    let mut sig = 0.0;
                    let mut intf = 0.0;
                    for (i, &j) in d.active.iter().enumerate() {
                        let g = inner(h, &d.beams[i]).norm_sqr() * d.powers[i];
                        if j == k {
                            sig += g;
                        } else {
                            intf += g;
                        }
                    }
                    sig / (n0 + intf)
                }
            };
            (1.0 + sinr).log2()
        };
        if s2 == 0.0 {
            out.push(McEstimate { mean: draw(est), se: 0.0 });
            continue;
        }
        let mut h = vec![C64::new(0.0, 0.0); m];
        let vals: Vec<f64> = (0..samples)
            .map(|_| {
                for (hv, &ev) in h.iter_mut().zip(est) {
                    *hv = ev + complex_normal(rng, s2);
                }
                draw(&h)
            })
            .collect();
        out.push(McEstimate::from_samples(&vals));
    }
    Ok(out)
}
