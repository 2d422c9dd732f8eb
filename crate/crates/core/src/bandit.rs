//! Lower-confidence-bound arm selection for ERM bandits.
//!
//! Costs are minimized, so each arm is scored by its empirical ERM minus a
//! polynomial exploration bonus
//!
//! ```text
//! b(t, s) = theta^(1/xi) * t^(alpha/xi) / s^(1 - eta)
//! ```
//!
//! where `t` is the number of pulls made so far across all arms and `s` the
//! pulls of the scored arm. Every arm is pulled once before any bonus is
//! computed.
//!
//! Three regimes share one loop: stationary and non-stationary arms emit a
//! plain cost (generators receive the pull index, so drift is expressed by
//! the generator), and chance arms emit a deterministic cost plus a random
//! next state with its own cost `x`. A chance arm feeds `c + gamma * x` into
//! its accumulator at `beta`; per-next-state accumulators at `beta * gamma`
//! are kept for diagnostics.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::erm::{ErmAccumulator, RiskParam};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::sampling::sample_index;

/// Parameters of the polynomial bonus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonusParams {
    pub theta: f64,
    pub xi: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl BonusParams {
    pub fn new(theta: f64, xi: f64, alpha: f64, eta: f64) -> Result<Self> {
        let p = Self {
            theta,
            xi,
            alpha,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    /// `theta = 2^(xi/2)` and `alpha = xi * eta * (1 - eta)`, which makes the
    /// bonus `sqrt(2) * t^(eta (1 - eta)) / s^(1 - eta)` whatever `xi` is.
    /// `xi = 2` is used.
    pub fn practical(eta: f64) -> Result<Self> {
        let xi = 2.0;
        Self::new(2f64.powf(xi / 2.0), xi, xi * eta * (1.0 - eta), eta)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.theta.is_finite()
            && self.theta > 1.0
            && self.xi.is_finite()
            && self.xi > 1.0
            && self.alpha.is_finite()
            && self.alpha > 0.0
            && (0.5..1.0).contains(&self.eta);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "bonus parameters need theta > 1, xi > 1, alpha > 0, 1/2 <= eta < 1; got {self:?}"
            )))
        }
    }

    /// Numerator `theta^(1/xi) * t^(alpha/xi)`, shared by every arm at step `t`.
    #[inline]
    fn numerator(&self, t: u64) -> f64 {
        self.theta.powf(1.0 / self.xi) * (t as f64).powf(self.alpha / self.xi)
    }

    #[inline]
    fn denominator(&self, s: u64) -> f64 {
        (s as f64).powf(1.0 - self.eta)
    }
}

impl Default for BonusParams {
    /// `eta = 1/2`, `xi = 2`, `theta = 2`, `alpha = 1/2`: bonus `sqrt(2) t^(1/4) / sqrt(s)`.
    fn default() -> Self {
        Self::practical(0.5).expect("valid default")
    }
}

/// `theta^(1/xi) * t^(alpha/xi) / s^(1 - eta)`.
pub fn bonus(t: u64, s: u64, p: &BonusParams) -> f64 {
    p.numerator(t) / p.denominator(s)
}

/// How ties in the lower-confidence argmin are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    /// Uniform among tied arms, drawn from a dedicated RNG stream.
    Random,
}

/// Lowest-index arm with no pulls, else the argmin of `value - bonus`.
///
/// `None` only for an empty slice. Shared with the tree search so that a
/// one-step search and a bandit make bit-identical choices.
pub(crate) fn lcb_argmin(stats: &[ErmAccumulator], t: u64, p: &BonusParams) -> Option<usize> {
    if let Some(i) = stats.iter().position(|a| a.count() == 0) {
        return Some(i);
    }
    let numerator = p.numerator(t);
    let mut best: Option<(usize, f64)> = None;
    for (i, acc) in stats.iter().enumerate() {
        let value = acc.value().ok()?;
        let score = value - numerator / p.denominator(acc.count());
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

fn lcb_ties(stats: &[ErmAccumulator], t: u64, p: &BonusParams) -> Vec<usize> {
    let unpulled: Vec<usize> = (0..stats.len()).filter(|&i| stats[i].count() == 0).collect();
    if !unpulled.is_empty() {
        return unpulled;
    }
    let numerator = p.numerator(t);
    let scores: Vec<f64> = stats
        .iter()
        .map(|a| a.value().unwrap_or(f64::INFINITY) - numerator / p.denominator(a.count()))
        .collect();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    (0..scores.len()).filter(|&i| scores[i] == min).collect()
}

/// Per-next-state diagnostics of a chance arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextStateStats {
    pub count: u64,
    /// Empirical ERM at `beta * gamma` of the costs observed at this next state.
    pub acc: ErmAccumulator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    acc: ErmAccumulator,
    next_states: BTreeMap<usize, NextStateStats>,
}

impl ArmState {
    pub fn new(beta: RiskParam) -> Self {
        Self {
            acc: ErmAccumulator::new(beta),
            next_states: BTreeMap::new(),
        }
    }

    pub fn pulls(&self) -> u64 {
        self.acc.count()
    }

    pub fn accumulator(&self) -> &ErmAccumulator {
        &self.acc
    }

    pub fn value(&self) -> Result<f64> {
        self.acc.value()
    }

    pub fn next_states(&self) -> &BTreeMap<usize, NextStateStats> {
        &self.next_states
    }

    pub fn record(&mut self, cost: f64) -> Result<()> {
        self.acc.update(cost)
    }

    /// Records `cost + gamma * next_cost` and the next-state diagnostics.
    pub fn record_transition(
        &mut self,
        cost: f64,
        gamma: f64,
        next_state: usize,
        next_cost: f64,
    ) -> Result<()> {
        let inner_beta = self.acc.beta().depth_adjusted(gamma, 1);
        let entry = self
            .next_states
            .entry(next_state)
            .or_insert_with(|| NextStateStats {
                count: 0,
                acc: ErmAccumulator::new(inner_beta),
            });
        entry.acc.update(next_cost)?;
        entry.count += 1;
        self.acc.update(cost + gamma * next_cost)
    }
}

/// A source of bounded random costs. `pull_index` counts previous draws
/// from the same source, so non-stationary sources can drift with it.
pub trait CostSource: Send + Sync {
    fn sample(&self, pull_index: u64, rng: &mut dyn RngCore) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl CostSource for Constant {
    fn sample(&self, _: u64, _: &mut dyn RngCore) -> f64 {
        self.0
    }
}

/// `high` with probability `p`, otherwise `low`.
#[derive(Debug, Clone, Copy)]
pub struct Bernoulli {
    pub p: f64,
    pub low: f64,
    pub high: f64,
}

impl Bernoulli {
    /// Exact ERM of the two-point law.
    pub fn erm(&self, beta: RiskParam) -> f64 {
        crate::erm::erm_weighted(
            [(self.low, 1.0 - self.p), (self.high, self.p)].into_iter(),
            beta.get(),
        )
    }
}

impl CostSource for Bernoulli {
    fn sample(&self, _: u64, rng: &mut dyn RngCore) -> f64 {
        if rng.random::<f64>() < self.p {
            self.high
        } else {
            self.low
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Uniform {
    pub low: f64,
    pub high: f64,
}

impl CostSource for Uniform {
    fn sample(&self, _: u64, rng: &mut dyn RngCore) -> f64 {
        self.low + (self.high - self.low) * rng.random::<f64>()
    }
}

/// Closure-backed source, typically for drifting costs.
pub struct FnSource<F>(pub F);

impl<F> CostSource for FnSource<F>
where
    F: Fn(u64, &mut dyn RngCore) -> f64 + Send + Sync,
{
    fn sample(&self, pull_index: u64, rng: &mut dyn RngCore) -> f64 {
        (self.0)(pull_index, rng)
    }
}

pub enum ArmModel {
    Plain(Box<dyn CostSource>),
    /// Deterministic `cost`, then a next state drawn from `next` (weights
    /// are probabilities, position is the state index) whose source emits
    /// the follow-up cost.
    Chance {
        cost: f64,
        next: Vec<(f64, Box<dyn CostSource>)>,
    },
}

impl fmt::Debug for ArmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmModel::Plain(_) => f.write_str("Plain(..)"),
            ArmModel::Chance { cost, next } => f
                .debug_struct("Chance")
                .field("cost", cost)
                .field("next_probs", &next.iter().map(|(p, _)| *p).collect::<Vec<_>>())
                .finish(),
        }
    }
}

#[derive(Debug)]
pub struct BanditEnv {
    pub arms: Vec<ArmModel>,
    pub gamma: f64,
    pub cost_bound: f64,
}

impl BanditEnv {
    pub fn new(arms: Vec<ArmModel>, gamma: f64, cost_bound: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Config("bandit needs at least one arm".into()));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if !(cost_bound.is_finite() && cost_bound > 0.0) {
            return Err(Error::Config(format!(
                "cost bound must be finite and > 0, got {cost_bound}"
            )));
        }
        for (i, arm) in arms.iter().enumerate() {
            if let ArmModel::Chance { next, .. } = arm {
                let total: f64 = next.iter().map(|(p, _)| *p).sum();
                if next.iter().any(|(p, _)| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "arm {i}: next-state probabilities must be non-negative and sum to 1"
                    )));
                }
            }
        }
        Ok(Self {
            arms,
            gamma,
            cost_bound,
        })
    }

    /// Stationary or drifting arms emitting plain costs.
    pub fn plain(sources: Vec<Box<dyn CostSource>>, cost_bound: f64) -> Result<Self> {
        Self::new(sources.into_iter().map(ArmModel::Plain).collect(), 1.0, cost_bound)
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn check(&self, x: f64) -> Result<f64> {
        if x.is_finite() && x.abs() <= self.cost_bound {
            Ok(x)
        } else {
            Err(Error::CostOutOfBounds {
                value: x,
                bound: self.cost_bound,
            })
        }
    }
}

/// The decision at `s_0` of a one-step MDP as a chance bandit: arm `a` costs
/// `c(s_0, a)` and moves to `s'` with probability `P^a(s_0, s')`, whose
/// follow-up cost is the terminal cost `c_H(s')`.
pub fn one_step_bandit(mdp: &TabularMdp) -> Result<BanditEnv> {
    mdp.validate()?;
    let s0 = mdp.initial_state;
    let arms = (0..mdp.num_actions)
        .map(|a| ArmModel::Chance {
            cost: mdp.stage_cost[s0][a],
            next: mdp.transition[a][s0]
                .iter()
                .zip(&mdp.terminal_cost)
                .map(|(&p, &c)| (p, Box::new(Constant(c)) as Box<dyn CostSource>))
                .collect(),
        })
        .collect();
    BanditEnv::new(arms, mdp.gamma, mdp.cost_bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditStep {
    pub arm: usize,
    /// Cost fed to the arm's accumulator (`c + gamma * x` for chance arms).
    pub cost: f64,
    pub next_state: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditHistory {
    pub beta: RiskParam,
    pub steps: Vec<BanditStep>,
    pub arms: Vec<ArmState>,
}

impl BanditHistory {
    pub fn new(beta: RiskParam, num_arms: usize) -> Self {
        Self {
            beta,
            steps: Vec::new(),
            arms: vec![ArmState::new(beta); num_arms],
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.arm)
    }

    fn total_pulls(&self) -> u64 {
        self.arms.iter().map(ArmState::pulls).sum()
    }
}

/// Arm to pull next given `t` pulls so far: the first unpulled arm, else the
/// lowest-index minimizer of `value - bonus(t, pulls)`.
pub fn select_arm(arms: &[ArmState], t: u64, p: &BonusParams) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::Config("no arms to select from".into()));
    }
    let accs: Vec<ErmAccumulator> = arms.iter().map(|a| a.acc).collect();
    if t == 0 && accs.iter().all(|a| a.count() > 0) {
        return Err(Error::Config("t must be >= 1 once every arm is pulled".into()));
    }
    lcb_argmin(&accs, t, p).ok_or(Error::EmptyEstimator)
}

/// Like [`select_arm`] but breaking exact ties uniformly at random.
pub fn select_arm_random_ties<R: Rng + ?Sized>(
    arms: &[ArmState],
    t: u64,
    p: &BonusParams,
    rng: &mut R,
) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::Config("no arms to select from".into()));
    }
    let accs: Vec<ErmAccumulator> = arms.iter().map(|a| a.acc).collect();
    let ties = lcb_ties(&accs, t, p);
    Ok(ties[rng.random_range(0..ties.len())])
}

/// Runs `n` pulls with lowest-index tie-breaking, RNG seeded from `seed`.
pub fn run_bandit(
    env: &BanditEnv,
    beta: RiskParam,
    p: &BonusParams,
    n: usize,
    seed: u64,
) -> Result<BanditHistory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_bandit_with(env, beta, p, n, &mut rng, TieBreak::LowestIndex)
}

/// Runs `n` pulls drawing environment randomness from `rng`. With
/// [`TieBreak::Random`] the tie-break draws come from a separate stream
/// seeded off `rng` once, so environment draws do not depend on ties.
pub fn run_bandit_with<R: RngCore>(
    env: &BanditEnv,
    beta: RiskParam,
    p: &BonusParams,
    n: usize,
    rng: &mut R,
    tie_break: TieBreak,
) -> Result<BanditHistory> {
    p.validate()?;
    let k = env.num_arms();
    if n < k {
        return Err(Error::Config(format!(
            "{n} pulls cannot cover the initialization round over {k} arms"
        )));
    }
    let mut tie_rng = match tie_break {
        TieBreak::Random => Some(ChaCha8Rng::seed_from_u64(rng.next_u64())),
        TieBreak::LowestIndex => None,
    };
    let mut history = BanditHistory::new(beta, k);
    let mut accs: Vec<ErmAccumulator> = vec![ErmAccumulator::new(beta); k];
    history.steps.reserve(n);

    for t in 0..n as u64 {
        let arm = match tie_rng.as_mut() {
            Some(r) => {
                let ties = lcb_ties(&accs, t, p);
                ties[r.random_range(0..ties.len())]
            }
            None => lcb_argmin(&accs, t, p).ok_or(Error::EmptyEstimator)?,
        };
        let pull_index = history.arms[arm].pulls();
        let step = match &env.arms[arm] {
            ArmModel::Plain(source) => {
                let x = env.check(source.sample(pull_index, rng))?;
                history.arms[arm].record(x)?;
                BanditStep {
                    arm,
                    cost: x,
                    next_state: None,
                }
            }
            ArmModel::Chance { cost, next } => {
                let probs: Vec<f64> = next.iter().map(|(q, _)| *q).collect();
                let s = sample_index(&probs, rng);
                let c = env.check(*cost)?;
                let x = env.check(next[s].1.sample(pull_index, rng))?;
                history.arms[arm].record_transition(c, env.gamma, s, x)?;
                BanditStep {
                    arm,
                    cost: c + env.gamma * x,
                    next_state: Some(s),
                }
            }
        };
        accs[arm] = history.arms[arm].acc;
        history.steps.push(step);
    }
    Ok(history)
}

/// `(1/n) sum_i T_i(n) rho_i`: visit-weighted average of per-arm estimates.
pub fn weighted_erm(history: &BanditHistory) -> Result<f64> {
    let n = history.total_pulls();
    if n == 0 {
        return Err(Error::EmptyEstimator);
    }
    let mut total = 0.0;
    for arm in history.arms.iter().filter(|a| a.pulls() > 0) {
        total += arm.pulls() as f64 / n as f64 * arm.value()?;
    }
    Ok(total)
}

/// ERM of the pooled cost stream,
/// `(1/beta) ln((1/n) sum_i T_i(n) exp(beta rho_i))`.
///
/// With `beta` equal to the history's parameter this is exactly the ERM of
/// all observed costs, and it is never below [`weighted_erm`].
pub fn stream_erm(history: &BanditHistory, beta: RiskParam) -> Result<f64> {
    let n = history.total_pulls();
    if n == 0 {
        return Err(Error::EmptyEstimator);
    }
    let mut pairs = Vec::with_capacity(history.arms.len());
    for arm in history.arms.iter().filter(|a| a.pulls() > 0) {
        pairs.push((arm.value()?, arm.pulls() as f64 / n as f64));
    }
    Ok(crate::erm::erm_weighted(pairs.into_iter(), beta.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(b: f64) -> RiskParam {
        RiskParam::new(b).unwrap()
    }

    fn arm_with(b: f64, xs: &[f64]) -> ArmState {
        let mut a = ArmState::new(beta(b));
        for &x in xs {
            a.record(x).unwrap();
        }
        a
    }

    #[test]
    fn bonus_examples() {
        // theta = 1 is outside the validated range but the formula is defined there.
        let unit = BonusParams { theta: 1.0, xi: 2.0, alpha: 0.5, eta: 0.5 };
        assert_eq!(bonus(1, 1, &unit), 1.0);
        let p = BonusParams::new(2.0, 2.0, 0.5, 0.5).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!((bonus(16, 4, &p) - sqrt2).abs() < 1e-15);
        assert!((bonus(1, 4, &p) - sqrt2 / 2.0).abs() < 1e-15);
        assert_eq!(p, BonusParams::default());
    }

    #[test]
    fn theta_one_is_rejected() {
        // theta must be strictly greater than one.
        assert!(BonusParams::new(1.0, 2.0, 0.5, 0.5).is_err());
        assert!(BonusParams::new(2.0, 1.0, 0.5, 0.5).is_err());
        assert!(BonusParams::new(2.0, 2.0, 0.0, 0.5).is_err());
        assert!(BonusParams::new(2.0, 2.0, 0.5, 1.0).is_err());
        assert!(BonusParams::new(2.0, 2.0, 0.5, 0.4).is_err());
    }

    #[test]
    fn practical_bonus_is_xi_free() {
        for eta in [0.5, 0.6, 0.9] {
            let p = BonusParams::practical(eta).unwrap();
            let expect = std::f64::consts::SQRT_2 * 81f64.powf(eta * (1.0 - eta))
                / 9f64.powf(1.0 - eta);
            assert!((bonus(81, 9, &p) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn select_initialization_rule() {
        let arms = vec![ArmState::new(beta(1.0)), arm_with(1.0, &[0.0])];
        assert_eq!(select_arm(&arms, 1, &BonusParams::default()).unwrap(), 0);
        let arms = vec![arm_with(1.0, &[0.0]), ArmState::new(beta(1.0))];
        assert_eq!(select_arm(&arms, 1, &BonusParams::default()).unwrap(), 1);
    }

    #[test]
    fn select_dominant_arm() {
        let arms = vec![arm_with(1.0, &[0.0; 10]), arm_with(1.0, &[5.0; 10])];
        assert_eq!(select_arm(&arms, 20, &BonusParams::default()).unwrap(), 0);
    }

    #[test]
    fn select_prefers_under_pulled() {
        let p = BonusParams::new(2.0, 2.0, 0.5, 0.5).unwrap();
        assert!(bonus(101, 1, &p) > bonus(101, 100, &p));
        let arms = vec![arm_with(1.0, &[1.0; 100]), arm_with(1.0, &[1.0])];
        assert_eq!(select_arm(&arms, 101, &p).unwrap(), 1);
    }

    #[test]
    fn select_ties_lowest_index() {
        let arms = vec![arm_with(1.0, &[2.0; 3]), arm_with(1.0, &[2.0; 3])];
        assert_eq!(select_arm(&arms, 6, &BonusParams::default()).unwrap(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picks: Vec<usize> = (0..64)
            .map(|_| select_arm_random_ties(&arms, 6, &BonusParams::default(), &mut rng).unwrap())
            .collect();
        assert!(picks.contains(&0) && picks.contains(&1));
    }

    #[test]
    fn select_empty_is_error() {
        assert!(select_arm(&[], 1, &BonusParams::default()).is_err());
    }

    #[test]
    fn single_arm_run() {
        let env = BanditEnv::plain(vec![Box::new(Constant(0.5))], 1.0).unwrap();
        let h = run_bandit(&env, beta(1.0), &BonusParams::default(), 10, 0).unwrap();
        assert_eq!(h.arms[0].pulls(), 10);
        assert!(h.actions().all(|a| a == 0));
        assert_eq!(weighted_erm(&h).unwrap(), 0.5);
        assert_eq!(stream_erm(&h, beta(1.0)).unwrap(), 0.5);
    }

    #[test]
    fn too_few_pulls() {
        let env =
            BanditEnv::plain(vec![Box::new(Constant(0.0)), Box::new(Constant(1.0))], 1.0).unwrap();
        assert!(matches!(
            run_bandit(&env, beta(1.0), &BonusParams::default(), 1, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn suboptimal_constant_arm_is_rarely_pulled() {
        let env =
            BanditEnv::plain(vec![Box::new(Constant(0.0)), Box::new(Constant(1.0))], 1.0).unwrap();
        let h = run_bandit(&env, beta(1.0), &BonusParams::default(), 1000, 0).unwrap();
        let frac = h.arms[1].pulls() as f64 / 1000.0;
        assert!(frac <= 0.2, "suboptimal fraction {frac}");
    }

    #[test]
    fn chance_arm_composite_cost() {
        let env = BanditEnv::new(
            vec![ArmModel::Chance {
                cost: 1.0,
                next: vec![(1.0, Box::new(Constant(2.0)))],
            }],
            0.9,
            2.0,
        )
        .unwrap();
        let h = run_bandit(&env, beta(0.7), &BonusParams::default(), 5, 1).unwrap();
        let v = h.arms[0].value().unwrap();
        assert!((v - 2.8).abs() < 1e-15);
        let next = &h.arms[0].next_states()[&0];
        assert_eq!(next.count, 5);
        assert!((next.acc.beta().get() - 0.63).abs() < 1e-15);
        assert!(h.steps.iter().all(|s| s.next_state == Some(0)));
    }

    #[test]
    fn next_state_counts_sum_to_pulls() {
        let env = BanditEnv::new(
            vec![
                ArmModel::Chance {
                    cost: 0.5,
                    next: vec![
                        (0.3, Box::new(Bernoulli { p: 0.5, low: 0.0, high: 1.0 })),
                        (0.7, Box::new(Constant(0.2))),
                    ],
                },
                ArmModel::Chance {
                    cost: 0.1,
                    next: vec![(0.5, Box::new(Constant(1.0))), (0.5, Box::new(Constant(0.0)))],
                },
            ],
            0.9,
            1.0,
        )
        .unwrap();
        let h = run_bandit(&env, beta(1.0), &BonusParams::default(), 300, 4).unwrap();
        for arm in &h.arms {
            let sum: u64 = arm.next_states().values().map(|s| s.count).sum();
            assert_eq!(sum, arm.pulls());
        }
    }

    #[test]
    fn cost_bound_enforced() {
        let env = BanditEnv::plain(vec![Box::new(Constant(3.0))], 2.0).unwrap();
        assert!(matches!(
            run_bandit(&env, beta(1.0), &BonusParams::default(), 3, 0),
            Err(Error::CostOutOfBounds { .. })
        ));
    }

    #[test]
    fn weighted_and_stream_two_arms() {
        let env =
            BanditEnv::plain(vec![Box::new(Constant(0.0)), Box::new(Constant(1.0))], 1.0).unwrap();
        let h = run_bandit(&env, beta(1.0), &BonusParams::default(), 2, 0).unwrap();
        assert_eq!(weighted_erm(&h).unwrap(), 0.5);
        let expect = ((1.0 + std::f64::consts::E) / 2.0).ln();
        assert!((stream_erm(&h, beta(1.0)).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn empty_history_errors() {
        let h = BanditHistory::new(beta(1.0), 2);
        assert!(matches!(weighted_erm(&h), Err(Error::EmptyEstimator)));
        assert!(matches!(stream_erm(&h, beta(1.0)), Err(Error::EmptyEstimator)));
    }

    #[test]
    fn drifting_source_sees_pull_index() {
        let env = BanditEnv::plain(
            vec![Box::new(FnSource(|i: u64, _: &mut dyn RngCore| (i as f64 / 10.0).min(1.0)))],
            1.0,
        )
        .unwrap();
        let h = run_bandit(&env, beta(1.0), &BonusParams::default(), 4, 0).unwrap();
        let costs: Vec<f64> = h.steps.iter().map(|s| s.cost).collect();
        assert_eq!(costs, vec![0.0, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn random_ties_keep_environment_stream() {
        let env = BanditEnv::plain(
            vec![
                Box::new(Bernoulli { p: 0.5, low: 0.0, high: 1.0 }),
                Box::new(Bernoulli { p: 0.5, low: 0.0, high: 1.0 }),
            ],
            1.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = run_bandit_with(&env, beta(1.0), &BonusParams::default(), 200, &mut rng, TieBreak::Random)
            .unwrap();
        assert_eq!(h.len(), 200);
        assert_eq!(h.arms.iter().map(ArmState::pulls).sum::<u64>(), 200);
    }

    #[test]
    fn bernoulli_exact_erm() {
        let b = Bernoulli { p: 0.5, low: 0.0, high: 1.0 };
        let expect = ((1.0 + std::f64::consts::E) / 2.0).ln();
        assert!((b.erm(beta(1.0)) - expect).abs() < 1e-15);
    }
}
