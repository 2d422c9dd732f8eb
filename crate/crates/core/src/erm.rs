//! Entropic risk measure (ERM).
//!
//! For a cost random variable `Z` and risk parameter `beta > 0`,
//! `ERM_beta(Z) = (1/beta) ln E[exp(beta Z)]`. Small `beta` approaches the
//! mean, large `beta` approaches the worst case.
//!
//! All evaluations use a max-shifted `expm1`/`ln_1p` form:
//!
//! ```text
//! ERM = m + (1/beta) ln(1 + sum_i w_i expm1(beta (v_i - m))),   m = max_i v_i
//! ```
//!
//! which cannot overflow (every exponent is `<= 0`) and stays accurate as
//! `beta -> 0`, where the naive `ln(mean(exp))` loses everything to
//! cancellation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Risk-aversion parameter `beta`, strictly positive and finite.
///
/// `beta = 0` is rejected; use a tiny value such as `1e-9` for a
/// risk-neutral comparison.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RiskParam(f64);

impl RiskParam {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self(beta))
        } else {
            Err(Error::InvalidRiskParam(beta))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `beta * gamma^depth`, the parameter used for costs observed `depth`
    /// steps below the point of decision.
    pub fn depth_adjusted(self, gamma: f64, depth: usize) -> RiskParam {
        depth_adjusted_beta(self, gamma, depth)
    }
}

impl TryFrom<f64> for RiskParam {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        Self::new(beta)
    }
}

impl From<RiskParam> for f64 {
    fn from(beta: RiskParam) -> f64 {
        beta.0
    }
}

/// `beta * gamma^depth`. `gamma` must lie in `(0, 1]`.
///
/// The product is floored at the smallest positive normal so very deep
/// nodes keep a valid parameter instead of underflowing to zero.
pub fn depth_adjusted_beta(beta: RiskParam, gamma: f64, depth: usize) -> RiskParam {
    debug_assert!(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
    let exp = i32::try_from(depth).unwrap_or(i32::MAX);
    RiskParam((beta.0 * gamma.powi(exp)).max(f64::MIN_POSITIVE))
}

/// A finitely supported distribution over real outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    outcomes: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    /// Probability mass must sum to one within this tolerance.
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        let mut total = 0.0;
        for (i, &(value, p)) in outcomes.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {i} has non-finite value {value}"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {i} has invalid probability {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }
}

/// Exact ERM of a discrete distribution.
pub fn erm_exact(dist: &DiscreteDistribution, beta: RiskParam) -> f64 {
    erm_weighted(
        dist.outcomes.iter().map(|&(v, p)| (v, p)),
        beta.get(),
    )
}

/// ERM of `(value, weight)` pairs with weights treated as a probability
/// vector. Zero-weight outcomes are ignored.
///
/// Two sums are kept: the `expm1` form is exact near `beta -> 0`, the plain
/// `exp` form avoids cancellation when the maximum outcome carries little
/// mass. Whichever is better conditioned is used.
pub(crate) fn erm_weighted<I>(pairs: I, beta: f64) -> f64
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let max = pairs
        .clone()
        .filter(|&(_, w)| w > 0.0)
        .map(|(v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NAN;
    }
    let mut excess = 0.0;
    let mut direct = 0.0;
    for (v, w) in pairs.filter(|&(_, w)| w > 0.0) {
        let y = beta * (v - max);
        excess += w * y.exp_m1();
        direct += w * y.exp();
    }
    let log_mean = if excess > -0.5 {
        excess.ln_1p()
    } else {
        direct.ln()
    };
    max + log_mean / beta
}

/// Streaming empirical ERM of a cost sequence at a fixed `beta`.
///
/// Holds `count`, the running maximum `m` and `excess = sum_t expm1(beta
/// (x_t - m))`, so `ln sum_t exp(beta x_t) = beta m + ln(count + excess)`.
/// Memory is constant in the number of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmAccumulator {
    beta: RiskParam,
    count: u64,
    max: f64,
    min: f64,
    excess: f64,
}

impl ErmAccumulator {
    pub fn new(beta: RiskParam) -> Self {
        Self {
            beta,
            count: 0,
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
            excess: 0.0,
        }
    }

    #[inline]
    pub fn beta(&self) -> RiskParam {
        self.beta
    }

    #[inline]
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Smallest and largest sample seen, if any.
    pub fn range(&self) -> Option<(f64, f64)> {
        (self.count > 0).then_some((self.min, self.max))
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: "sample",
                value: x,
            });
        }
        self.push(x);
        Ok(())
    }

    /// Builder-style [`update`](Self::update).
    pub fn with(mut self, x: f64) -> Result<Self> {
        self.update(x)?;
        Ok(self)
    }

    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        let beta = self.beta.get();
        if self.count == 0 {
            self.max = x;
            self.min = x;
        } else if x > self.max {
            self.rescale(x);
        } else {
            self.excess += (beta * (x - self.max)).exp_m1();
            self.min = self.min.min(x);
        }
        self.count += 1;
    }

    // Moves the shift point to `new_max >= self.max`. The incoming sample
    // contributes expm1(0) = 0.
    fn rescale(&mut self, new_max: f64) {
        let d = self.beta.get() * (self.max - new_max);
        self.excess = self.excess * d.exp() + self.count as f64 * d.exp_m1();
        self.max = new_max;
    }

    /// `(1/beta) ln((1/n) sum_t exp(beta x_t))`.
    pub fn value(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyEstimator);
        }
        let n = self.count as f64;
        let v = self.max + (self.excess / n).ln_1p() / self.beta.get();
        // The estimate of an empirical distribution lies in its sample range.
        Ok(v.clamp(self.min, self.max))
    }

    /// `ln sum_t exp(beta x_t)`.
    pub fn log_sum(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyEstimator);
        }
        let n = self.count as f64;
        Ok(self.beta.get() * self.max + n.ln() + (self.excess / n).ln_1p())
    }

    /// Pools the samples of `other` into `self`. Both must share `beta`.
    pub fn merge(&mut self, other: &ErmAccumulator) -> Result<()> {
        if self.beta != other.beta {
            return Err(Error::Config(format!(
                "cannot merge accumulators at beta {} and {}",
                self.beta.get(),
                other.beta.get()
            )));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = *other;
            return Ok(());
        }
        let mut incoming = *other;
        if incoming.max > self.max {
            self.rescale(incoming.max);
        } else {
            incoming.rescale(self.max);
        }
        self.excess += incoming.excess;
        self.count += incoming.count;
        self.min = self.min.min(incoming.min);
        Ok(())
    }
}

/// Empirical ERM of a batch of samples, computed in one pass over the global
/// maximum.
pub fn erm_of_samples(samples: &[f64], beta: RiskParam) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyEstimator);
    }
    if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "sample",
            value: bad,
        });
    }
    let b = beta.get();
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let excess: f64 = samples.iter().map(|&x| (b * (x - max)).exp_m1()).sum();
    let n = samples.len() as f64;
    Ok((max + (excess / n).ln_1p() / b).clamp(min, max))
}

/// Empirical ERM through its optimized-certainty-equivalent form
///
/// ```text
/// min over lambda of  lambda + (1/n) sum_t u(x_t - lambda),   u(y) = (exp(beta y) - 1) / beta
/// ```
///
/// minimized by golden-section search. The objective is convex in `lambda`
/// and its derivative `1 - mean(exp(beta (x - lambda)))` is non-positive at
/// both `mean(x)` and `max(x) - ln(n)/beta` and non-negative at `max(x)`, so
/// the search runs on `[max(mean, max - ln(n)/beta), max]`, a sub-interval
/// of the sample range on which no exponent exceeds `ln n`. The search stops
/// once the bracket is narrower than `tolerance`.
pub fn oce_value(samples: &[f64], beta: RiskParam, tolerance: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyEstimator);
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::Config(format!(
            "tolerance must be finite and > 0, got {tolerance}"
        )));
    }
    if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "sample",
            value: bad,
        });
    }
    let b = beta.get();
    let n = samples.len() as f64;
    let objective = |lambda: f64| {
        let mean_u: f64 = samples
            .iter()
            .map(|&x| (b * (x - lambda)).exp_m1())
            .sum::<f64>()
            / n;
        lambda + mean_u / b
    };

    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = samples.iter().sum::<f64>() / n;
    let mut lo = mean.max(max - n.ln() / b).min(max);
    let mut hi = max;

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut best = objective(lo).min(objective(hi)).min(f1).min(f2);
    while hi - lo > tolerance {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(x1);
            best = best.min(f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(x2);
            best = best.min(f2);
        }
        // Bracket can stall at ulp scale when tolerance is tighter than
        // floating resolution around lambda.
        if x1 >= x2 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(b: f64) -> RiskParam {
        RiskParam::new(b).unwrap()
    }

    fn acc_of(b: f64, xs: &[f64]) -> ErmAccumulator {
        let mut acc = ErmAccumulator::new(beta(b));
        for &x in xs {
            acc.update(x).unwrap();
        }
        acc
    }

    // ln((1 + e) / 2), evaluated directly.
    fn half_half_01() -> f64 {
        ((1.0 + std::f64::consts::E) / 2.0).ln()
    }

    #[test]
    fn risk_param_rejects_non_positive() {
        assert!(RiskParam::new(0.0).is_err());
        assert!(RiskParam::new(-1.0).is_err());
        assert!(RiskParam::new(f64::NAN).is_err());
        assert!(RiskParam::new(f64::INFINITY).is_err());
        assert_eq!(RiskParam::new(0.5).unwrap().get(), 0.5);
    }

    #[test]
    fn exact_constant_distribution() {
        let d = DiscreteDistribution::new(vec![(5.0, 1.0)]).unwrap();
        assert_eq!(erm_exact(&d, beta(1.0)), 5.0);
    }

    #[test]
    fn exact_two_point() {
        let d = DiscreteDistribution::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((erm_exact(&d, beta(1.0)) - half_half_01()).abs() < 1e-15);
        assert!((half_half_01() - 0.620115).abs() < 1e-6);
    }

    #[test]
    fn exact_small_beta_is_mean() {
        // Taylor: ERM = mean + beta var / 2 + O(beta^2); var = 1 here.
        let d = DiscreteDistribution::new(vec![(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let v = erm_exact(&d, beta(1e-9));
        assert!((v - 2.0).abs() < 1e-6, "{v}");
        assert!((v - (2.0 + 0.5e-9)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(DiscreteDistribution::new(vec![(0.0, -0.5), (1.0, 1.5)]).is_err());
        assert!(DiscreteDistribution::new(vec![(f64::NAN, 1.0)]).is_err());
        assert!(DiscreteDistribution::new(vec![(0.0, 0.5), (1.0, 0.5 + 1e-13)]).is_ok());
    }

    #[test]
    fn accumulator_single_sample() {
        assert_eq!(acc_of(1.0, &[3.0]).value().unwrap(), 3.0);
    }

    #[test]
    fn accumulator_matches_closed_form() {
        let v = acc_of(1.0, &[0.0, 1.0, 1.0, 0.0]).value().unwrap();
        assert!((v - half_half_01()).abs() < 1e-15);
    }

    #[test]
    fn accumulator_identical_samples() {
        assert_eq!(acc_of(2.0, &[-1.0, -1.0]).value().unwrap(), -1.0);
        assert_eq!(acc_of(0.3, &[20.0; 7]).value().unwrap(), 20.0);
    }

    #[test]
    fn accumulator_large_beta_no_overflow() {
        let v = acc_of(50.0, &[20.0, 20.0, 20.0]).value().unwrap();
        assert_eq!(v, 20.0);
        let v = acc_of(50.0, &[-20.0, 20.0]).value().unwrap();
        // 20 + ln(1/2 (1 + e^-2000)) / 50
        assert!((v - (20.0 - 2f64.ln() / 50.0)).abs() < 1e-14);
    }

    #[test]
    fn accumulator_empty_and_non_finite() {
        let mut acc = ErmAccumulator::new(beta(1.0));
        assert!(matches!(acc.value(), Err(Error::EmptyEstimator)));
        assert!(matches!(acc.log_sum(), Err(Error::EmptyEstimator)));
        assert!(acc.update(f64::NAN).is_err());
        assert!(acc.update(f64::NEG_INFINITY).is_err());
        assert_eq!(acc.count(), 0);
    }

    #[test]
    fn accumulator_log_sum() {
        let acc = acc_of(1.0, &[0.0, 1.0]);
        let expect = (1.0 + std::f64::consts::E).ln();
        assert!((acc.log_sum().unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn merge_equals_concatenation() {
        let xs = [0.3, -1.5, 2.0, 0.7];
        let ys = [5.0, -3.0, 1.1];
        let mut a = acc_of(0.8, &xs);
        a.merge(&acc_of(0.8, &ys)).unwrap();
        let all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
        let batch = erm_of_samples(&all, beta(0.8)).unwrap();
        assert_eq!(a.count(), 7);
        assert!((a.value().unwrap() - batch).abs() < 1e-13);
        assert!(a.merge(&acc_of(0.9, &ys)).is_err());
        let mut empty = ErmAccumulator::new(beta(0.8));
        empty.merge(&a).unwrap();
        assert_eq!(empty, a);
    }

    #[test]
    fn oce_examples() {
        let v = oce_value(&[0.0, 1.0, 1.0, 0.0], beta(1.0), 1e-12).unwrap();
        assert!((v - half_half_01()).abs() < 1e-9);
        assert_eq!(oce_value(&[4.2], beta(3.0), 1e-9).unwrap(), 4.2);
        let expect = 2.0 * (((-1f64).exp() + 1f64.exp()) / 2.0).ln();
        let v = oce_value(&[-2.0, 2.0], beta(0.5), 1e-12).unwrap();
        assert!((v - expect).abs() < 1e-9);
        // 2 ln(cosh 1), 30-digit reference.
        assert!((expect - 0.867_561_660_966_054_4).abs() < 1e-15);
    }

    #[test]
    fn oce_errors() {
        assert!(matches!(
            oce_value(&[], beta(1.0), 1e-9),
            Err(Error::EmptyEstimator)
        ));
        assert!(oce_value(&[1.0], beta(1.0), 0.0).is_err());
        assert!(oce_value(&[1.0, f64::NAN], beta(1.0), 1e-9).is_err());
    }

    #[test]
    fn oce_large_beta_wide_range() {
        let xs = [-20.0, -5.0, 3.0, 19.5, 20.0];
        let v = oce_value(&xs, beta(50.0), 1e-12).unwrap();
        let direct = acc_of(50.0, &xs).value().unwrap();
        assert!((v - direct).abs() < 1e-9, "{v} vs {direct}");
    }

    #[test]
    fn depth_adjustment() {
        assert_eq!(depth_adjusted_beta(beta(0.5), 0.9, 0).get(), 0.5);
        assert_eq!(depth_adjusted_beta(beta(0.5), 1.0, 7).get(), 0.5);
        assert!((depth_adjusted_beta(beta(0.5), 0.9, 2).get() - 0.405).abs() < 1e-15);
        assert!(depth_adjusted_beta(beta(0.5), 0.5, 5000).get() > 0.0);
    }

    #[test]
    fn risk_param_serde_validates() {
        let ok: RiskParam = serde_json::from_str("0.25").unwrap();
        assert_eq!(ok.get(), 0.25);
        assert!(serde_json::from_str::<RiskParam>("0.0").is_err());
    }
}
