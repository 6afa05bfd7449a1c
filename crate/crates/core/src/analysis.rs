//! Drift constants and queue bounds of the virtual-queue policies, and the
//! rate-gap bound for imperfect CSI, evaluated numerically so that runs can
//! be checked against them.
//!
//! The β* equation is dimensionless and uses the natural logarithm, as does
//! the proportional-fair utility `Σ ln R̄_k`; rates themselves stay in bits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chanmodel::CsiMatrix;
use crate::error::{Error, Result};
use crate::phy::{inner, zf_beams, McEstimate};
use crate::rng::complex_normal;
use crate::scheduler::{UtilityKind, UtilitySpec};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConstant {
    pub c: f64,
    /// Standard error of `c` from the Monte-Carlo second moment.
    pub se: f64,
    /// `Ê[log₂²(1 + |h|² P/N0)]`.
    pub log_sq_moment: f64,
}

/// `C = (K/2)(A_max² + E[log₂²(1 + |h|² P/N0)])`, with the expectation
/// estimated from `n` draws of the channel gain `|h|²`.
pub fn drift_constant_c(
    k: usize,
    a_max: f64,
    snr: f64,
    n: usize,
    mut gain: impl FnMut() -> f64,
) -> Result<DriftConstant> {
    if n < 10_000 {
        return Err(Error::InsufficientData { needed: 10_000, got: n });
    }
    let vals: Vec<f64> = (0..n).map(|_| (1.0 + gain() * snr).log2().powi(2)).collect();
    let est = McEstimate::from_samples(&vals);
    let half_k = k as f64 / 2.0;
    Ok(DriftConstant {
        c: half_k * (a_max * a_max + est.mean),
        se: half_k * est.se,
        log_sq_moment: est.mean,
    })
}

/// Unique β in (0, 1] with `ln β + 1/β = 1 + C/(K V)`.
pub fn solve_beta_star(c: f64, k: usize, v: f64) -> Result<f64> {
    if !(c >= 0.0) || k == 0 || !(v > 0.0) {
        return Err(Error::InvalidConfig(format!("β* needs C ≥ 0, K > 0, V > 0 (C = {c}, V = {v})")));
    }
    let rhs = 1.0 + c / (k as f64 * v);
    let f = |b: f64| b.ln() + 1.0 / b - rhs;
    if f(1.0) >= 0.0 {
        return Ok(1.0);
    }
    // f is decreasing on (0, 1] and diverges at 0.
    let mut lo = 0.5;
    while f(lo) < 0.0 {
        lo *= 0.5;
    }
    let mut hi = lo * 2.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() < f(hi).abs() { lo } else { hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Pass,
    Fail,
    /// The right side is infinite (a zero measured rate under PFS).
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub c: f64,
    pub c_se: f64,
    pub beta_star: f64,
    /// `C / V`.
    pub utility_gap: f64,
    /// Right side of the queue bound with β = 1/2 and `g(A_max·1)` in place
    /// of the unknown optimum.
    pub queue_bound: f64,
    /// Measured `(1/t) Σ_τ Σ_k R̄_k Q_k(τ)`.
    pub queue_lhs: f64,
    pub status: BoundStatus,
    /// PFS: `(C − V K ln β*)/(1 − β*)`.
    pub pfs_beta_star_bound: Option<f64>,
    /// HFS: `C + V min_k R̄_k`, the measured rates standing in for the
    /// optimum, with whether the measured left side stays below it.
    pub hfs_bound: Option<f64>,
    pub hfs_holds: Option<bool>,
    pub v: f64,
    pub k: usize,
    pub a_max: f64,
    pub snr: f64,
}

/// Evaluate the queue bound for a finished run: `rates` are the measured
/// ergodic rates and `mean_queues` the time-averaged virtual queues.
pub fn performance_bounds(
    drift: &DriftConstant,
    utility: &UtilitySpec,
    snr: f64,
    rates: &[f64],
    mean_queues: &[f64],
) -> Result<BoundReport> {
    utility.validate()?;
    if rates.len() != mean_queues.len() || rates.is_empty() {
        return Err(Error::InvalidDimension("rates and queues differ in length".into()));
    }
    let k = rates.len();
    let v = utility.v;
    let c = drift.c;
    let beta = 0.5;
    let beta_star = solve_beta_star(c, k, v)?;

    let lhs: f64 = rates.iter().zip(mean_queues).map(|(r, q)| r * q).sum();
    let scaled: Vec<f64> = rates.iter().map(|r| beta * r).collect();
    let g_cap = utility.utility(&vec![utility.a_max; k]);
    let g_meas = utility.utility(&scaled);
    let bound = (c + v * (g_cap - g_meas)) / (1.0 - beta);

    let status = if !bound.is_finite() {
        BoundStatus::Inconclusive
    } else if lhs <= bound {
        BoundStatus::Pass
    } else {
        BoundStatus::Fail
    };

    let (pfs_beta_star_bound, hfs_bound) = match utility.kind {
        UtilityKind::Pfs => {
            let b = if beta_star < 1.0 {
                (c - v * k as f64 * beta_star.ln()) / (1.0 - beta_star)
            } else {
                f64::INFINITY
            };
            (Some(b), None)
        }
        UtilityKind::Hfs => (None, Some(c + v * utility.utility(rates))),
    };

    Ok(BoundReport {
        c,
        c_se: drift.se,
        beta_star,
        utility_gap: c / v,
        queue_bound: if bound.is_finite() { bound } else { f64::INFINITY },
        queue_lhs: lhs,
        status,
        pfs_beta_star_bound,
        hfs_bound,
        hfs_holds: hfs_bound.map(|b| lhs <= b),
        v,
        k,
        a_max: utility.a_max,
        snr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGap {
    /// Estimated `ΔR_k`: genie-aided rate minus the conditional actual rate.
    pub delta: f64,
    pub theta: f64,
    /// `Θ_k + log₂(1 + σ²(|U| − 1) P/(N0 |U|))`.
    pub bound: f64,
    /// Standard error of `bound − delta`.
    pub se: f64,
    pub holds: bool,
}

/// Compare the conditional rate gap of user `k` against its upper bound,
/// with on-off power `P/|U|` and `n` error draws shared by both expectations.
#[allow(clippy::too_many_arguments)]
pub fn rate_gap_check<R: Rng + ?Sized>(
    csi: &CsiMatrix,
    h_k: &[C64],
    users: &[usize],
    k: usize,
    sigma2: f64,
    power: f64,
    n0: f64,
    n: usize,
    rng: &mut R,
) -> Result<RateGap> {
    let pos = users
        .iter()
        .position(|&u| u == k)
        .ok_or_else(|| Error::InvalidConfig(format!("user {k} is not in the active set")))?;
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one error draw".into()));
    }
    let u = users.len() as f64;
    let noise = n0 * u;

    let cols: Vec<&[C64]> = users.iter().map(|&j| csi.column(j)).collect();
    let beams = zf_beams(&cols)?;
    let mut genie_cols = cols.clone();
    genie_cols[pos] = h_k;
    let genie_beams = zf_beams(&genie_cols)?;

    let genie = (1.0 + inner(h_k, &genie_beams[pos]).norm_sqr() * power / noise).log2();
    let log_term = (1.0 + sigma2 * (u - 1.0) * power / noise).log2();
    let est = csi.column(k);

    // With interference (a) and without it (b), for one realization of h = ĥ + e.
    let rates = |e: &[C64]| -> (f64, f64) {
        let h: Vec<C64> = est.iter().zip(e).map(|(a, b)| a + b).collect();
        let s = inner(&h, &beams[pos]).norm_sqr() * power;
        let i: f64 = (0..users.len())
            .filter(|&j| j != pos)
            .map(|j| inner(e, &beams[j]).norm_sqr() * power)
            .sum();
        ((1.0 + s / (noise + i)).log2(), (1.0 + s / noise).log2())
    };

    let m = est.len();
    if sigma2 == 0.0 {
        let (a, b) = rates(&vec![C64::new(0.0, 0.0); m]);
        let delta = genie - a;
        let theta = genie - b;
        let bound = theta + log_term;
        return Ok(RateGap { delta, theta, bound, se: 0.0, holds: delta <= bound });
    }

    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut diffs = Vec::with_capacity(n);
    let mut e = vec![C64::new(0.0, 0.0); m];
    for _ in 0..n {
        for x in e.iter_mut() {
            *x = complex_normal(rng, sigma2);
        }
        let (a, b) = rates(&e);
        sum_a += a;
        sum_b += b;
        diffs.push(a - b);
    }
    let delta = genie - sum_a / n as f64;
    let theta = genie - sum_b / n as f64;
    let bound = theta + log_term;
    let se = McEstimate::from_samples(&diffs).se;
    Ok(RateGap { delta, theta, bound, se, holds: delta <= bound + 3.0 * se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmodel::gen_rayleigh_slot;
    use crate::rng::{stream, Tag};
    use rand_distr::{Distribution, Exp1};

    #[test]
    fn drift_constant_without_snr_is_exact() {
        let d = drift_constant_c(8, 100.0, 0.0, 10_000, || 1.0).unwrap();
        assert_eq!(d.c, 8.0 * 100.0 * 100.0 / 2.0);
        let mut rng = stream(71, Tag::Test, &[]);
        let d = drift_constant_c(8, 100.0, 100.0, 10_000, || Exp1.sample(&mut rng)).unwrap();
        assert!(d.c >= 40_000.0);
        assert!(drift_constant_c(1, 1.0, 1.0, 9_999, || 1.0).is_err());
    }

    /// `E[log₂²(1 + 100X)]`, X ~ Exp(1), by composite Simpson on a
    /// substituted variable.
    fn log_sq_oracle(snr: f64) -> f64 {
        // x = t/(1−t) maps (0,1) onto (0,∞).
        let f = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = t / (1.0 - t);
            let jac = 1.0 / (1.0 - t).powi(2);
            (1.0 + snr * x).log2().powi(2) * (-x).exp() * jac
        };
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn drift_constant_matches_quadrature() {
        let oracle = log_sq_oracle(100.0);
        assert!((oracle - 37.5245).abs() < 1e-3, "{oracle}");
        let mut rng = stream(72, Tag::Test, &[]);
        let d = drift_constant_c(2, 0.0, 100.0, 1_000_000, || Exp1.sample(&mut rng)).unwrap();
        let rel = (d.log_sq_moment - oracle).abs() / oracle;
        assert!(rel < 5e-3, "{} vs {oracle}", d.log_sq_moment);
        assert!((d.log_sq_moment - oracle).abs() < 4.0 * d.se);
    }

    #[test]
    fn beta_star_examples() {
        assert_eq!(solve_beta_star(0.0, 8, 100.0).unwrap(), 1.0);
        let b = solve_beta_star(800.0, 8, 100.0).unwrap();
        assert!((b.ln() + 1.0 / b - 2.0).abs() < 1e-10);
        assert!((b - 0.3177).abs() < 1e-3, "{b}");
        let tiny = solve_beta_star(1e12, 1, 1.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-11);
    }

    #[test]
    fn beta_star_is_monotone() {
        let mut prev = 1.0;
        for i in 0..50 {
            let ratio = 10f64.powf(-3.0 + 0.15 * i as f64);
            let b = solve_beta_star(ratio, 1, 1.0).unwrap();
            assert!(b <= prev && b > 0.0);
            assert!((b.ln() + 1.0 / b - 1.0 - ratio).abs() < 1e-10);
            prev = b;
        }
    }

    fn drift(c: f64) -> DriftConstant {
        DriftConstant { c, se: 0.0, log_sq_moment: 0.0 }
    }

    #[test]
    fn empty_queues_pass() {
        let u = UtilitySpec { kind: UtilityKind::Pfs, v: 100.0, a_max: 100.0 };
        let r = performance_bounds(&drift(1e4), &u, 100.0, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r.status, BoundStatus::Pass);
        assert_eq!(r.queue_lhs, 0.0);
        // C + V(2 ln 100 − ln 0.5 − ln 1) over 1/2.
        let want = (1e4 + 100.0 * (2.0 * 100f64.ln() - 0.5f64.ln() - 1f64.ln())) / 0.5;
        assert!((r.queue_bound - want).abs() < 1e-9 * want);
    }

    #[test]
    fn zero_rate_under_pfs_is_inconclusive() {
        let u = UtilitySpec { kind: UtilityKind::Pfs, v: 100.0, a_max: 100.0 };
        let r = performance_bounds(&drift(1e4), &u, 100.0, &[0.0, 2.0], &[5.0, 5.0]).unwrap();
        assert_eq!(r.status, BoundStatus::Inconclusive);
    }

    #[test]
    fn hfs_reports_measured_bound() {
        let u = UtilitySpec { kind: UtilityKind::Hfs, v: 10.0, a_max: 100.0 };
        let r = performance_bounds(&drift(50.0), &u, 100.0, &[1.0, 3.0], &[10.0, 2.0]).unwrap();
        assert_eq!(r.hfs_bound, Some(50.0 + 10.0 * 1.0));
        assert_eq!(r.queue_lhs, 16.0);
        assert_eq!(r.hfs_holds, Some(true));
        // (50 + 10(100 − 0.5)) / 0.5
        assert_eq!(r.queue_bound, 2090.0);
        let big = performance_bounds(&drift(50.0), &u, 100.0, &[1.0, 3.0], &[1e4, 0.0]).unwrap();
        assert_eq!(big.status, BoundStatus::Fail);
    }

    #[test]
    fn rate_gap_is_zero_without_error_on_full_set() {
        let mut rng = stream(73, Tag::Test, &[]);
        for _ in 0..20 {
            let h = gen_rayleigh_slot(&mut rng, 4, 4).unwrap();
            let csi = CsiMatrix::perfect(&h);
            let users = [0, 1, 2, 3];
            let g = rate_gap_check(&csi, h.column(2), &users, 2, 0.0, 100.0, 1.0, 100, &mut rng).unwrap();
            assert_eq!(g.delta, 0.0);
            assert_eq!(g.bound, 0.0);
            assert!(g.holds);
        }
    }

    #[test]
    fn rate_gap_log_term() {
        let t = (1.0 + 1.0 * 3.0 * 100.0 / 4.0f64).log2();
        assert!((t - 6.25).abs() < 0.01);
    }

    #[test]
    fn rate_gap_bound_holds() {
        let mut rng = stream(74, Tag::Test, &[]);
        for _ in 0..200 {
            let s2: f64 = 0.1;
            let est = gen_rayleigh_slot(&mut rng, 4, 3).unwrap();
            let mut csi = CsiMatrix::perfect(&est);
            for k in 0..3 {
                for x in csi.estimate.column_mut(k) {
                    *x = *x * (1.0 - s2).sqrt();
                }
            }
            let h: Vec<C64> =
                csi.column(0).iter().map(|x| x + complex_normal(&mut rng, s2)).collect();
            let g = rate_gap_check(&csi, &h, &[0, 1, 2], 0, s2, 100.0, 1.0, 10_000, &mut rng).unwrap();
            assert!(g.holds, "{g:?}");
        }
    }
}
