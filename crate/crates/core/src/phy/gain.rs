use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples behind an empirical gain cdf.
pub const MIN_EMPIRICAL_SAMPLES: usize = 1000;

/// Empirical cdf with linear interpolation between order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < MIN_EMPIRICAL_SAMPLES {
            return Err(Error::InsufficientData {
                needed: MIN_EMPIRICAL_SAMPLES,
                got: samples.len(),
            });
        }
        if samples.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidConfig("gain samples must be finite and ≥ 0".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(x_(i)) = i/n` (1-based), linear in between, 0 below the minimum.
    pub fn cdf(&self, x: f64) -> f64 {
        let s = &self.sorted;
        let n = s.len();
        if x < s[0] {
            return 0.0;
        }
        if x >= s[n - 1] {
            return 1.0;
        }
        let i = s.partition_point(|&v| v <= x) - 1;
        let frac = (x - s[i]) / (s[i + 1] - s[i]);
        ((i + 1) as f64 + frac) / n as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let s = &self.sorted;
        let n = s.len();
        let pos = q.clamp(0.0, 1.0) * n as f64;
        if pos <= 1.0 {
            return s[0];
        }
        if pos >= n as f64 {
            return s[n - 1];
        }
        let i = pos.floor() as usize - 1;
        let frac = pos - (i + 1) as f64;
        s[i] + frac * (s[i + 1] - s[i])
    }
}

/// Distribution of a user's channel gain `|h_k|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainDistribution {
    /// Sum of `shape` unit exponentials (`|h|²` of an i.i.d. Rayleigh vector).
    Erlang { shape: u32 },
    Empirical { cdf: EmpiricalCdf },
}

impl GainDistribution {
    pub fn erlang(shape: u32) -> Self {
        GainDistribution::Erlang { shape }
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(GainDistribution::Empirical { cdf: EmpiricalCdf::new(samples)? })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            GainDistribution::Erlang { shape } => erlang_cdf(*shape, x),
            GainDistribution::Empirical { cdf } => cdf.cdf(x),
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match self {
            GainDistribution::Erlang { shape } => {
                let (mut lo, mut hi) = (0.0, 1.0);
                while erlang_cdf(*shape, hi) < q {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if erlang_cdf(*shape, mid) < q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            GainDistribution::Empirical { cdf } => cdf.quantile(q),
        }
    }

    /// `E[f(X)]`: Simpson quadrature against the Erlang density, sample mean
    /// for the empirical law.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            GainDistribution::Erlang { shape } => {
                let upper = self.quantile(1.0 - 1e-14);
                let n = 8192;
                let h = upper / n as f64;
                let g = |x: f64| f(x) * erlang_pdf(*shape, x);
                let mut acc = g(0.0) + g(upper);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * g(i as f64 * h);
                }
                acc * h / 3.0
            }
            GainDistribution::Empirical { cdf } => {
                cdf.samples().iter().map(|&x| f(x)).sum::<f64>() / cdf.samples().len() as f64
            }
        }
    }

    /// `E[log₂(1 + a X)]`.
    pub fn mean_log2(&self, a: f64) -> f64 {
        self.expect(|x| (1.0 + a * x).log2())
    }
}

fn erlang_cdf(shape: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..shape {
        term *= x / n as f64;
        sum += term;
    }
    (1.0 - (-x).exp() * sum).clamp(0.0, 1.0)
}

fn erlang_pdf(shape: u32, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let mut coef = 1.0;
    for n in 1..shape {
        coef *= x / n as f64;
    }
    coef * (-x).exp()
}

/// Outage-optimal single-user space-time-coding rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageOpt {
    pub rate: f64,
    /// `rate · P(no outage)`.
    pub goodput: f64,
    /// Set when the gain law has no mass above zero (or the SNR is zero).
    pub degenerate: bool,
}

/// `r* = argmax_r r·[1 − F((2^r − 1) M N0 / P)]`.
///
/// The search bracket is `[0, log₂(1 + q P/(M N0))]` with `q` the 0.9999
/// quantile of the gain. A golden-section search assumes unimodality; a
/// 10⁻³-step grid pass then checks it and re-centres the search if the grid
/// found a better point.
pub fn outage_rate_opt(dist: &GainDistribution, power: f64, antennas: usize, n0: f64) -> OutageOpt {
    let snr = power / (antennas as f64 * n0);
    let q = dist.quantile(0.9999);
    let hi = (1.0 + q * snr).log2();
    if !(hi > 0.0) || !hi.is_finite() {
        return OutageOpt { rate: 0.0, goodput: 0.0, degenerate: true };
    }
    let goodput = |r: f64| r * (1.0 - dist.cdf((r.exp2() - 1.0) / snr));

    let (mut best_r, mut best_g) = golden_max(&goodput, 0.0, hi);

    let step = 1e-3;
    let steps = (hi / step).floor() as usize;
    let (mut grid_r, mut grid_g) = (0.0, 0.0);
    for i in 0..=steps {
        let r = i as f64 * step;
        let g = goodput(r);
        if g > grid_g {
            grid_r = r;
            grid_g = g;
        }
    }
    if grid_g > best_g {
        let (r, g) = golden_max(&goodput, (grid_r - step).max(0.0), (grid_r + step).min(hi));
        (best_r, best_g) = if g >= grid_g { (r, g) } else { (grid_r, grid_g) };
    }
    OutageOpt { rate: best_r, goodput: best_g, degenerate: false }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // Keep the best evaluated point; at a cdf jump the midpoint may sit just
    // past the edge.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |acc, p| if p.1 > acc.1 { p } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Tag};
    use rand::Rng;

    /// Grid-search oracle for the outage-optimal rate.
    fn grid_oracle(dist: &GainDistribution, snr: f64, step: f64, hi: f64) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        let mut r = 0.0;
        while r <= hi {
            let g = r * (1.0 - dist.cdf((r.exp2() - 1.0) / snr));
            if g > best.1 {
                best = (r, g);
            }
            r += step;
        }
        best
    }

    #[test]
    fn erlang4_at_20db() {
        let d = GainDistribution::erlang(4);
        let opt = outage_rate_opt(&d, 100.0, 4, 1.0);
        let (r, g) = grid_oracle(&d, 25.0, 1e-4, 14.0);
        assert!((opt.rate - r).abs() <= 1e-3, "{} vs {}", opt.rate, r);
        assert!((opt.goodput - g).abs() <= 1e-6);
        assert!((opt.rate - 5.40).abs() < 0.01);
        assert!((opt.goodput - 4.94).abs() < 0.005);
    }

    #[test]
    fn vanishing_snr_gives_vanishing_rate() {
        let d = GainDistribution::erlang(2);
        let opt = outage_rate_opt(&d, 1e-9, 2, 1.0);
        assert!(opt.rate < 1e-7 && opt.goodput < 1e-8);
        let zero = outage_rate_opt(&d, 0.0, 2, 1.0);
        assert!(zero.degenerate && zero.rate == 0.0);
    }

    #[test]
    fn point_mass_has_no_outage_below_capacity() {
        let c = 2.0;
        let d = GainDistribution::empirical(vec![c; 2000]).unwrap();
        let opt = outage_rate_opt(&d, 100.0, 4, 1.0);
        let cap = (1.0 + c * 25.0).log2();
        assert!(opt.rate < cap && cap - opt.rate <= 1e-3, "r* {} cap {}", opt.rate, cap);
        assert!((opt.goodput - opt.rate).abs() < 1e-12);
    }

    #[test]
    fn all_zero_gains_are_degenerate() {
        let d = GainDistribution::empirical(vec![0.0; 1000]).unwrap();
        assert!(outage_rate_opt(&d, 100.0, 4, 1.0).degenerate);
    }

    #[test]
    fn matches_grid_on_random_instances() {
        let mut rng = stream(41, Tag::Test, &[]);
        for _ in 0..100 {
            let m = rng.random_range(1..=8u32);
            let snr_db: f64 = rng.random_range(-10.0..30.0);
            let p = 10f64.powf(snr_db / 10.0);
            let d = GainDistribution::erlang(m);
            let opt = outage_rate_opt(&d, p, m as usize, 1.0);
            let hi = (1.0 + d.quantile(0.9999) * p / m as f64).log2();
            let (r, _) = grid_oracle(&d, p / m as f64, 1e-3, hi);
            assert!((opt.rate - r).abs() <= 1e-3 + 1e-9, "M={m} snr={snr_db}: {} vs {r}", opt.rate);
        }
    }

    #[test]
    fn empirical_cdf_interpolates() {
        let samples: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let d = EmpiricalCdf::new(samples).unwrap();
        assert_eq!(d.cdf(0.5), 0.0);
        assert_eq!(d.cdf(1.0), 0.001);
        assert!((d.cdf(10.5) - 0.0105).abs() < 1e-15);
        assert_eq!(d.cdf(1000.0), 1.0);
        assert!((d.quantile(0.0105) - 10.5).abs() < 1e-9);
        assert!(EmpiricalCdf::new(vec![1.0; 999]).is_err());
    }

    #[test]
    fn erlang_expectation_matches_moments() {
        let d = GainDistribution::erlang(4);
        assert!((d.expect(|x| x) - 4.0).abs() < 1e-9);
        assert!((d.expect(|x| x * x) - 20.0).abs() < 1e-8);
    }
}
