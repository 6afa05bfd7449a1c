//! True channel processes and the CSI seen by the transmitter.
//!
//! Two channel families are supported: i.i.d. Rayleigh block fading, and a
//! frequency-flat sum-of-sinusoids model where each user's coefficient is a
//! superposition of `eta` Doppler-shifted rays observed through a uniform
//! linear array.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::C64;

/// Speed of light used by the Doppler formula (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Carrier frequency of the reference OFDM subcarrier (Hz).
pub const CARRIER_HZ: f64 = 2.6e9;
/// Symbol rate of the reference subcarrier (Hz).
pub const SYMBOL_RATE_HZ: f64 = 15.0e3;
/// Number of pilot symbols per estimation block.
pub const PILOT_COUNT: usize = 200;
/// Pilot spacing in symbols; one pilot per scheduling slot.
pub const PILOT_SPACING: usize = 20;
/// Scattering distance. Carried in configs for completeness; the
/// sum-of-sinusoids model does not use it.
pub const D_MIN_M: f64 = 600.0;

/// Angles of arrival (radians) of the well-separated ray set.
pub const AOA_SEPARATED: [f64; 20] = [
    4.8328, 5.2210, 5.4479, 5.6090, 5.7340, 5.8360, 5.9223, 5.9970, 6.0629, 6.1219, 6.1765,
    6.2356, 6.3015, 6.3762, 6.4625, 6.5644, 6.6895, 6.8505, 7.0774, 7.4657,
];
/// Travel azimuth (radians) paired with [`AOA_SEPARATED`].
pub const AZIMUTH_SEPARATED: f64 = 4.4780;

/// Angles of arrival (radians) of the packed ray set.
pub const AOA_PACKED: [f64; 20] = [
    3.7263, 3.6717, 3.7854, 3.6127, 3.8513, 3.5468, 3.9260, 3.4721, 4.0123, 3.3858, 4.1142,
    3.2838, 4.2393, 3.1588, 4.4003, 2.9977, 4.6272, 2.7708, 5.0155, 2.3826,
];
/// Travel azimuth (radians) paired with [`AOA_PACKED`].
pub const AZIMUTH_PACKED: f64 = 0.6939;

/// True channel for one slot: `m` antennas × `k` users, stored column-major
/// so that each user's vector `h_k` is contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    m: usize,
    k: usize,
    data: Vec<C64>,
    pub slot: u64,
}

impl ChannelMatrix {
    pub fn zeros(m: usize, k: usize) -> Self {
        Self { m, k, data: vec![C64::new(0.0, 0.0); m * k], slot: 0 }
    }

    /// Build from per-user column vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let k = columns.len();
        let m = columns.first().map_or(0, Vec::len);
        if m == 0 || k == 0 {
            return Err(Error::InvalidDimension("empty channel matrix".into()));
        }
        if columns.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidDimension("ragged channel columns".into()));
        }
        Ok(Self { m, k, data: columns.concat(), slot: 0 })
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn column(&self, user: usize) -> &[C64] {
        &self.data[user * self.m..(user + 1) * self.m]
    }

    pub fn column_mut(&mut self, user: usize) -> &mut [C64] {
        &mut self.data[user * self.m..(user + 1) * self.m]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks_exact(self.m)
    }

    pub fn get(&self, antenna: usize, user: usize) -> C64 {
        self.data[user * self.m + antenna]
    }

    /// `|h_k|²`.
    pub fn gain(&self, user: usize) -> f64 {
        self.column(user).iter().map(|z| z.norm_sqr()).sum()
    }
}

/// How the transmitter's estimate of one user's channel relates to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsiModel {
    Perfect,
    /// Estimation error with the given variance per complex component.
    GaussianError { sigma2: f64 },
    /// The estimate carries no information about the channel.
    Unknown,
}

impl CsiModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CsiModel::GaussianError { sigma2 } if !(0.0..=1.0).contains(&sigma2) => Err(
                Error::InvalidModel(format!("error variance {sigma2} outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserClass {
    Predictable,
    NonPredictable,
}

/// Transmitter-side channel estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiMatrix {
    pub estimate: ChannelMatrix,
    /// Per-user error variance per complex component.
    pub sigma2: Vec<f64>,
    pub class: Vec<UserClass>,
}

impl CsiMatrix {
    /// CSI equal to the true channel.
    pub fn perfect(h: &ChannelMatrix) -> Self {
        Self {
            estimate: h.clone(),
            sigma2: vec![0.0; h.users()],
            class: vec![UserClass::Predictable; h.users()],
        }
    }

    pub fn antennas(&self) -> usize {
        self.estimate.antennas()
    }

    pub fn users(&self) -> usize {
        self.estimate.users()
    }

    pub fn column(&self, user: usize) -> &[C64] {
        self.estimate.column(user)
    }
}

/// i.i.d. CN(0, 1) entries.
pub fn gen_rayleigh_slot<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> Result<ChannelMatrix> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidDimension(format!("M={m}, K={k}")));
    }
    let data = (0..m * k).map(|_| complex_normal(rng, 1.0)).collect();
    Ok(ChannelMatrix { m, k, data, slot: 0 })
}

/// Form the transmitter's CSI from the true channel.
///
/// For `GaussianError(σ²)` the estimate is drawn from its conditional law
/// given a unit-variance `h_k`: `ĥ = (1−σ²) h + w`, `w ~ CN(0, σ²(1−σ²) I)`.
/// This is the same joint distribution as drawing `ĥ ~ CN(0,(1−σ²)I)` and an
/// independent `e ~ CN(0, σ²I)` and setting `h = ĥ + e`, but leaves the true
/// channel untouched.
pub fn apply_csi_model<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    models: &[CsiModel],
    rng: &mut R,
) -> Result<CsiMatrix> {
    if models.len() != h.users() {
        return Err(Error::InvalidDimension(format!(
            "{} CSI models for {} users",
            models.len(),
            h.users()
        )));
    }
    let m = h.antennas();
    let mut estimate = h.clone();
    let mut sigma2 = vec![0.0; h.users()];
    let mut class = vec![UserClass::Predictable; h.users()];
    for (k, model) in models.iter().enumerate() {
        model.validate()?;
        // Same number of draws for every model.
        let noise: Vec<C64> = (0..m).map(|_| complex_normal(rng, 1.0)).collect();
        match *model {
            CsiModel::Perfect => {}
            CsiModel::GaussianError { sigma2: s2 } => {
                let scale = (s2 * (1.0 - s2)).sqrt();
                for (est, (&hk, w)) in estimate
                    .column_mut(k)
                    .iter_mut()
                    .zip(h.column(k).iter().zip(&noise))
                {
                    *est = hk * (1.0 - s2) + w * scale;
                }
                sigma2[k] = s2;
            }
            CsiModel::Unknown => {
                estimate.column_mut(k).copy_from_slice(&noise);
                sigma2[k] = 1.0;
                class[k] = UserClass::NonPredictable;
            }
        }
    }
    Ok(CsiMatrix { estimate, sigma2, class })
}

/// Geometry and kinematics of one user's sum-of-sinusoids channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmUserParams {
    pub amplitudes: Vec<C64>,
    /// Angles of arrival (radians).
    pub aoas: Vec<f64>,
    /// Direction of travel (radians).
    pub travel_azimuth: f64,
    /// Mobile speed (m/s).
    pub speed: f64,
    /// Carrier frequency (Hz).
    pub carrier: f64,
    /// Symbol interval (s).
    pub symbol_interval: f64,
    pub antenna_spacing_wavelengths: f64,
}

impl ScmUserParams {
    /// Equal-power rays with i.i.d. uniform phases, `A_r = e^{jφ_r}/√η`.
    pub fn with_random_phases<R: Rng + ?Sized>(
        aoas: &[f64],
        travel_azimuth: f64,
        speed: f64,
        rng: &mut R,
    ) -> Self {
        let eta = aoas.len().max(1) as f64;
        let amplitudes = aoas
            .iter()
            .map(|_| Complex64::from_polar(1.0 / eta.sqrt(), 2.0 * PI * rng.random::<f64>()))
            .collect();
        Self {
            amplitudes,
            aoas: aoas.to_vec(),
            travel_azimuth,
            speed,
            carrier: CARRIER_HZ,
            symbol_interval: 1.0 / SYMBOL_RATE_HZ,
            antenna_spacing_wavelengths: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.aoas.is_empty() {
            return Err(Error::InvalidConfig("SCM user needs at least one ray".into()));
        }
        if self.amplitudes.len() != self.aoas.len() {
            return Err(Error::InvalidConfig(format!(
                "{} amplitudes for {} rays",
                self.amplitudes.len(),
                self.aoas.len()
            )));
        }
        if !(self.speed >= 0.0) {
            return Err(Error::InvalidConfig(format!("negative speed {}", self.speed)));
        }
        Ok(())
    }

    /// Largest possible `|ζ_r|` (cycles per symbol).
    pub fn max_doppler(&self) -> f64 {
        self.carrier * self.speed / SPEED_OF_LIGHT * self.symbol_interval
    }
}

/// Per-ray Doppler shifts in cycles per symbol.
pub fn scm_doppler(params: &ScmUserParams) -> Vec<f64> {
    let fd = params.max_doppler();
    params
        .aoas
        .iter()
        .map(|&theta| fd * (theta - params.travel_azimuth).cos())
        .collect()
}

/// Channel coefficient of `antenna` at symbol index `i`.
pub fn scm_sample(params: &ScmUserParams, antenna: usize, i: u64) -> C64 {
    ScmProcess::new(params.clone()).sample(antenna, i)
}

/// [`ScmUserParams`] with the Doppler shifts precomputed, for generating long
/// trajectories.
#[derive(Debug, Clone)]
pub struct ScmProcess {
    params: ScmUserParams,
    doppler: Vec<f64>,
    spatial: Vec<f64>,
}

impl ScmProcess {
    pub fn new(params: ScmUserParams) -> Self {
        let doppler = scm_doppler(&params);
        let spatial = params
            .aoas
            .iter()
            .map(|&theta| params.antenna_spacing_wavelengths * theta.sin())
            .collect();
        Self { params, doppler, spatial }
    }

    pub fn params(&self) -> &ScmUserParams {
        &self.params
    }

    pub fn sample(&self, antenna: usize, i: u64) -> C64 {
        let m = antenna as f64;
        let i = i as f64;
        self.params
            .amplitudes
            .iter()
            .zip(self.doppler.iter().zip(&self.spatial))
            .map(|(&a, (&zeta, &space))| {
                // Reduce the phase modulo one cycle before scaling by 2π to
                // keep precision at large symbol indices.
                let cycles = (zeta * i + m * space).rem_euclid(1.0);
                a * Complex64::from_polar(1.0, 2.0 * PI * cycles)
            })
            .sum()
    }

    /// All antennas at symbol `i`.
    pub fn vector(&self, antennas: usize, i: u64) -> Vec<C64> {
        (0..antennas).map(|m| self.sample(m, i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotConfig {
    pub count: usize,
    /// Symbols between consecutive pilots.
    pub spacing: usize,
    /// Noise variance per complex observation.
    pub noise_variance: f64,
}

impl PilotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || self.spacing == 0 {
            return Err(Error::InvalidConfig("pilot count and spacing must be ≥ 1".into()));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::InvalidConfig("pilot noise variance must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Sample a symbol-rate trajectory every `spacing` symbols and add pilot noise.
pub fn pilot_observations<R: Rng + ?Sized>(
    trajectory: &[C64],
    cfg: &PilotConfig,
    rng: &mut R,
) -> Result<Vec<C64>> {
    cfg.validate()?;
    let needed = (cfg.count - 1) * cfg.spacing + 1;
    if trajectory.len() < needed {
        return Err(Error::InsufficientData { needed, got: trajectory.len() });
    }
    Ok((0..cfg.count)
        .map(|n| {
            let noise = if cfg.noise_variance > 0.0 {
                complex_normal(rng, cfg.noise_variance)
            } else {
                C64::new(0.0, 0.0)
            };
            trajectory[n * cfg.spacing] + noise
        })
        .collect())
}
