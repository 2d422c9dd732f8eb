use ermtree::{erm_of_samples, RiskParam};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::seeds::seed_stream;
use crate::{ExpError, Result};

/// ERM point estimate with a confidence interval, `lo <= point <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmInterval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap interval for the ERM of `costs`.
///
/// Resamples with replacement `resamples` times from the stream
/// `seed_stream("bootstrap", rng_seed)` and takes the `(1 - level)/2` and
/// `(1 + level)/2` quantiles (linear interpolation) of the resampled ERMs.
/// The interval is widened to contain the point estimate if needed.
pub fn bootstrap_erm_ci(
    costs: &[f64],
    beta: RiskParam,
    resamples: usize,
    level: f64,
    rng_seed: u64,
) -> Result<ErmInterval> {
    if costs.len() < 2 {
        return Err(ExpError::Config(format!("bootstrap needs at least 2 costs, got {}", costs.len())));
    }
    if resamples == 0 {
        return Err(ExpError::Config("bootstrap needs at least one resample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ExpError::Config(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let point = erm_of_samples(costs, beta)?;
    let mut rng = seed_stream("bootstrap", rng_seed);
    let mut buf = vec![0.0; costs.len()];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for x in buf.iter_mut() {
            *x = costs[rng.random_range(0..costs.len())];
        }
        stats.push(erm_of_samples(&buf, beta)?);
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lo = quantile_sorted(&stats, tail).min(point);
    let hi = quantile_sorted(&stats, 1.0 - tail).max(point);
    Ok(ErmInterval { point, lo, hi })
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (`h = (n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let i = h.floor() as usize;
    let frac = h - i as f64;
    match sorted.get(i + 1) {
        Some(&next) if frac > 0.0 => sorted[i] + frac * (next - sorted[i]),
        _ => sorted[i],
    }
}

/// One-sided Clopper-Pearson upper bound for a binomial proportion with
/// `successes` out of `trials` at the given confidence.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes >= trials {
        return 1.0;
    }
    if successes == 0 {
        return 1.0 - (1.0 - confidence).powf(1.0 / trials as f64);
    }
    Beta::new((successes + 1) as f64, (trials - successes) as f64)
        .expect("positive shape parameters")
        .inverse_cdf(confidence)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
