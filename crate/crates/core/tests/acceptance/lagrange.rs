use std::time::Instant;

use parkmarl::data::load_scenario;
use parkmarl::marl::{evaluate, train, EvalOptions};

use crate::common::{acceptance_config, fixture, Outcome};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const EPISODES: usize = 2000;
const LAMBDA_LIMIT: f64 = 0.05;

struct Arm {
    lambda_tail: f64,
    violations: usize,
    cost: f64,
}

fn train_arm(seed: u64, penalty: bool) -> Arm {
    let env = load_scenario::<f64>(&fixture("tempt/scenario.txt"))
        .unwrap()
        .with_lagrange_penalty(penalty);
    let out = train(env.clone(), acceptance_config(seed, EPISODES), |_| {}).unwrap();
    let tail = &out.metrics[out.metrics.len() - out.metrics.len() / 10..];
    let lambda_tail = tail.iter().map(|m| m.lambda_b).fold(0.0, f64::max);
    let report = evaluate(&out.checkpoint, &env, EvalOptions::default()).unwrap();
    Arm {
        lambda_tail,
        violations: report.violations,
        cost: report.objective_cost,
    }
}

pub fn run() -> Outcome {
    let start = Instant::now();
    let mut passed = 0;
    let mut report = Vec::new();
    for seed in SEEDS {
        let lag = train_arm(seed, true);
        let plain = train_arm(seed, false);
        let ok = lag.lambda_tail < LAMBDA_LIMIT && lag.violations == 0 && plain.violations > lag.violations;
        passed += usize::from(ok);
        report.push(format!(
            "seed {seed}: lagrange max tail λ_b {:.3}, {} violations, cost {:.1}; no penalty {} violations, cost {:.1} -> {}",
            lag.lambda_tail,
            lag.violations,
            lag.cost,
            plain.violations,
            plain.cost,
            if ok { "pass" } else { "fail" }
        ));
    }
    Outcome::new(passed * 2 > SEEDS.len(), format!("{passed}/{} seeds pass", SEEDS.len()))
        .with_report(report)
        .within(start, 900.0)
}
