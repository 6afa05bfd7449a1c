//! Physical-layer kernels: zero-forcing beams, weighted waterfilling,
//! SINR / mutual information, outage-rate allocation and Monte-Carlo
//! conditional rates.
//!
//! All rates are in bits per channel use (base-2 logarithms).

mod gain;
mod mc;
mod rates;
mod waterfill;
mod zfbf;

pub use gain::{outage_rate_opt, EmpiricalCdf, GainDistribution, OutageOpt};
pub use mc::{conditional_rate_mc, McEstimate};
pub use rates::{realized_rates, sinr_and_mi, Mode, RateModel, SignalingDecision};
pub use waterfill::waterfilling;
pub use zfbf::{zf_beams, zfbf_vectors, COND_LIMIT};

use crate::C64;

/// `aᴴ b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}
