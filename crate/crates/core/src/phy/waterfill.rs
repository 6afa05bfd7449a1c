use crate::error::{Error, Result};

/// Weighted waterfilling.
///
/// Maximizes `Σ w_k log₂(1 + g_k p_k / N0)` subject to `Σ p_k ≤ P`, `p ≥ 0`.
/// The KKT solution is `p_k = max(0, w_k L − N0/g_k)` with the level `L`
/// chosen so the budget is met; users are dropped from the active set until
/// every remaining allocation is positive. Dropping a user only lowers `L`, so
/// a dropped user never becomes active again.
pub fn waterfilling(weights: &[f64], gains: &[f64], power: f64, n0: f64) -> Result<Vec<f64>> {
    if weights.len() != gains.len() {
        return Err(Error::InvalidDimension("weights and gains differ in length".into()));
    }
    if !(power > 0.0) || !(n0 > 0.0) {
        return Err(Error::InvalidConfig(format!("P = {power}, N0 = {n0}")));
    }
    let mut active: Vec<usize> = (0..weights.len())
        .filter(|&k| weights[k] > 0.0 && gains[k] > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::NoBeneficiary);
    }

    let mut powers = vec![0.0; weights.len()];
    loop {
        let wsum: f64 = active.iter().map(|&k| weights[k]).sum();
        let floor: f64 = active.iter().map(|&k| n0 / gains[k]).sum();
        let level = (power + floor) / wsum;
        let before = active.len();
        active.retain(|&k| weights[k] * level - n0 / gains[k] > 0.0);
        if active.len() == before {
            for &k in &active {
                powers[k] = weights[k] * level - n0 / gains[k];
            }
            return Ok(powers);
        }
        // The strongest user always survives: at least one allocation is
        // positive whenever the budget is positive.
        debug_assert!(!active.is_empty());
    }
}
