//! Acceptance checks. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use astro_float::{BigFloat, Consts, RoundingMode};
use ermtree::bandit::{
    one_step_bandit, run_bandit, stream_erm, weighted_erm, ArmModel, BanditEnv, Bernoulli, BonusParams, Constant,
    CostSource, Uniform,
};
use ermtree::dp::{brute_force_optimal_erm, erm_backward_induction, EnumerationBudget};
use ermtree::mcts::{schedule_parameters, search, ErmMcts, ParameterSchedule, ScheduleSpec};
use ermtree::mdp::random_mdp;
use ermtree::{erm_of_samples, oce_value, Error, ErmAccumulator, Mdp4, RiskParam};
use ermtree_experiments::concentration::{run_concentration_suite, ConcentrationConfig};
use ermtree_experiments::{run_table1, Algorithm, ExperimentConfig, MdpSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn beta(b: f64) -> RiskParam {
    RiskParam::new(b).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let s = rng.random_range(1..=3);
        let a = rng.random_range(1..=2);
        let h = rng.random_range(1..=3);
        let b = rng.random_range(0.05..3.0);
        let m = random_mdp(s, a, h, 0.9, 5.0, 100 + i).unwrap();
        let (v, _) = erm_backward_induction(&m, beta(b)).unwrap();
        let brute = brute_force_optimal_erm(&m, beta(b), &EnumerationBudget::default()).unwrap();
        worst = worst.max((v.value(0, m.initial_state) - brute).abs());
    }
    Outcome { pass: worst < 1e-9, detail: format!("max |DP - enumeration| = {worst:.3e} over 20 models") }
}

fn oce_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let bound = rng.random_range(0.5..20.0);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        let b = beta(rng.random_range(0.01..5.0));
        let mut acc = ErmAccumulator::new(b);
        for &x in &xs {
            acc.update(x).unwrap();
        }
        let oce = oce_value(&xs, b, 1e-12).unwrap();
        worst = worst.max((oce - acc.value().unwrap()).abs());
    }
    Outcome { pass: worst < 1e-8, detail: format!("max |OCE - accumulator| = {worst:.3e} over 200 sets") }
}

fn random_env(rng: &mut ChaCha8Rng) -> BanditEnv {
    let k = rng.random_range(1..=4);
    let arms = (0..k)
        .map(|_| -> ArmModel {
            match rng.random_range(0..3) {
                0 => ArmModel::Plain(Box::new(Bernoulli { p: rng.random(), low: -1.0, high: rng.random_range(0.0..2.0) })),
                1 => ArmModel::Plain(Box::new(Uniform { low: -2.0, high: rng.random_range(-1.0..2.0) })),
                _ => {
                    let p: f64 = rng.random();
                    ArmModel::Chance {
                        cost: rng.random_range(-1.0..1.0),
                        next: vec![
                            (p, Box::new(Constant(rng.random_range(-2.0..2.0))) as Box<dyn CostSource>),
                            (1.0 - p, Box::new(Uniform { low: 0.0, high: 1.0 })),
                        ],
                    }
                }
            }
        })
        .collect();
    BanditEnv::new(arms, 0.9, 2.0).unwrap()
}

fn jensen_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for run in 0..1000u64 {
        let env = random_env(&mut rng);
        let b = beta(rng.random_range(0.01..5.0));
        let n = rng.random_range(env.num_arms()..300);
        let h = run_bandit(&env, b, &BonusParams::default(), n, run).unwrap();
        if weighted_erm(&h).unwrap() > stream_erm(&h, b).unwrap() {
            violations += 1;
        }
    }
    Outcome { pass: violations == 0, detail: format!("{violations} violations in 1000 runs") }
}

fn bandit_reduction() -> Outcome {
    let mut mismatches = Vec::new();
    for seed in 0..50u64 {
        let m = random_mdp(4, 3, 1, 0.9, 5.0, seed).unwrap();
        let env = one_step_bandit(&m).unwrap();
        let b = beta(0.5 + seed as f64 * 0.05);
        let bandit: Vec<usize> = run_bandit(&env, b, &BonusParams::default(), 300, seed).unwrap().actions().collect();
        let mut planner = ErmMcts::new(&m, b, ScheduleSpec::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        planner.reset(m.initial_state, 1).unwrap();
        let tree: Vec<usize> = (0..300)
            .map(|_| {
                planner.simulate_once(&mut rng).unwrap();
                planner.last_root_action().unwrap()
            })
            .collect();
        if bandit != tree {
            mismatches.push(seed);
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!("{} of 50 seeds identical over 300 pulls {mismatches:?}", 50 - mismatches.len()),
    }
}

fn convergence_rate() -> Outcome {
    let cfg = ConcentrationConfig { runs: 500, ..Default::default() };
    let r = run_concentration_suite(&cfg).unwrap();
    let slope = r.slope.unwrap_or(f64::NAN);
    Outcome {
        pass: slope <= -0.3,
        detail: format!("arms p={:?}, mean |err| {:?} at n={:?}, slope {slope:.3}", cfg.arm_probs, r.mean_abs_error, r.grid),
    }
}

fn tail_bounds() -> Outcome {
    let cfg = ConcentrationConfig { runs: 2000, ..Default::default() };
    let r = run_concentration_suite(&cfg).unwrap();
    let tails: Vec<String> =
        r.tails.iter().map(|t| format!("z={}: {:.4} (upper {:.4})", t.z, t.frequency, t.upper)).collect();
    Outcome {
        pass: r.tails_non_increasing() && r.tails_below_one(),
        detail: format!("n={}, M=2000: {}", r.tail_budget, tails.join(", ")),
    }
}

fn table_reproduction() -> Outcome {
    let cfg = ExperimentConfig {
        mdp: MdpSource::Mdp4 { epsilon: 0.1, reset_prob: 0.1 },
        betas: vec![0.1, 0.5, 1.0],
        iterations: 1000,
        seeds: 100,
        horizon: Some(100),
        gamma: Some(0.9),
        ..Default::default()
    };
    let run = run_table1(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &b in &cfg.betas {
        let bi = run.get(Algorithm::ErmBi, b).unwrap().erm;
        let erm = run.get(Algorithm::ErmMcts, b).unwrap().erm;
        let acc = run.get(Algorithm::AccMcts, b).unwrap().erm;
        let in_union = (erm.lo <= erm.point && erm.point <= erm.hi) || (bi.lo <= erm.point && erm.point <= bi.hi);
        let in_oracle = bi.lo <= erm.point && erm.point <= bi.hi;
        pass &= in_union;
        let mut part = format!(
            "beta={b}: BI {:.3} [{:.3}, {:.3}], ERM-MCTS {:.3} [{:.3}, {:.3}] (in BI CI: {in_oracle}), Acc {:.3}",
            bi.point, bi.lo, bi.hi, erm.point, erm.lo, erm.hi, acc.point
        );
        if b >= 0.5 {
            let ordered = acc.point > erm.point;
            pass &= ordered;
            part.push_str(&format!(" (Acc > ERM-MCTS: {ordered})"));
        }
        parts.push(part);
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn risk_switch() -> Outcome {
    let m = Mdp4::default().build().unwrap().with_horizon(10);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut oracle_actions = Vec::new();
    for b in [0.01, 2.0] {
        let (_, pi) = erm_backward_induction(&m, beta(b)).unwrap();
        let oracle = pi.action(0, m.initial_state);
        oracle_actions.push(oracle);
        let votes = (0..50u64)
            .filter(|&seed| {
                search(&m, beta(b), &ParameterSchedule::default(), 10_000, seed).unwrap().recommended_action == oracle
            })
            .count();
        pass &= votes > 25;
        parts.push(format!("beta={b}: oracle a{oracle}, {votes}/50 agree"));
    }
    pass &= oracle_actions[0] != oracle_actions[1];
    Outcome { pass, detail: parts.join("; ") }
}

fn schedule_feasibility() -> Outcome {
    let alpha1 = schedule_parameters(3, 0.5, 160.0).and_then(|s| s.bonus_params(1)).map(|p| p.alpha);
    let rejected = matches!(schedule_parameters(3, 0.5, 148.0), Err(Error::ScheduleInfeasible { .. }));
    let ok = matches!(alpha1, Ok(a) if (a - 2.1875).abs() <= 1e-12);
    Outcome { pass: ok && rejected, detail: format!("alpha_1 = {alpha1:?} at xi_3=160; xi_3=148 rejected: {rejected}") }
}

fn reference_erm(xs: &[f64], b: f64) -> f64 {
    const P: usize = 256;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().unwrap();
    let bb = BigFloat::from_f64(b, P);
    let mut sum = BigFloat::from_f64(0.0, P);
    for &x in xs {
        sum = sum.add(&BigFloat::from_f64(x, P).mul(&bb, P, rm).exp(P, rm, &mut cc), P, rm);
    }
    let mean = sum.div(&BigFloat::from_f64(xs.len() as f64, P), P, rm);
    mean.ln(P, rm, &mut cc).div(&bb, P, rm).to_string().parse().unwrap()
}

fn numerical_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut sets: Vec<Vec<f64>> = (0..20).map(|_| (0..100).map(|_| rng.random_range(-20.0..=20.0)).collect()).collect();
    sets.push(vec![20.0; 100]);
    sets.push(vec![-20.0; 100]);
    sets.push((0..100).map(|i| if i == 0 { 20.0 } else { -20.0 }).collect());
    let mut worst = 0.0f64;
    let mut finite = true;
    for xs in &sets {
        let mut acc = ErmAccumulator::new(beta(50.0));
        for &x in xs {
            acc.update(x).unwrap();
        }
        let reference = reference_erm(xs, 50.0);
        for v in [acc.value().unwrap(), erm_of_samples(xs, beta(50.0)).unwrap()] {
            finite &= v.is_finite();
            worst = worst.max((v - reference).abs());
        }
    }
    Outcome {
        pass: finite && worst < 1e-6,
        detail: format!("max |estimate - 256-bit reference| = {worst:.3e} over {} sets", sets.len()),
    }
}

type Check = (u32, &'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let checks: [Check; 10] = [
        (1, "oracle equivalence", oracle_equivalence, Some(Duration::from_secs(10))),
        (2, "OCE equivalence", oce_equivalence, Some(Duration::from_secs(5))),
        (3, "Jensen ordering", jensen_ordering, None),
        (4, "bandit reduction", bandit_reduction, None),
        (5, "convergence rate", convergence_rate, Some(Duration::from_secs(120))),
        (6, "tail bounds", tail_bounds, Some(Duration::from_secs(120))),
        (7, "benchmark table", table_reproduction, Some(Duration::from_secs(1200))),
        (8, "risk-sensitivity switch", risk_switch, Some(Duration::from_secs(300))),
        (9, "schedule feasibility", schedule_feasibility, None),
        (10, "numerical stability", numerical_stability, None),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check, limit) in checks {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = match limit {
            Some(l) => format!("{:.1}s, limit {}s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.1}s", elapsed.as_secs_f64()),
        };
        println!("[{}] {id:>2} {name}: {} ({timing})", if pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

