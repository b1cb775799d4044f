use std::path::Path;
use std::time::Instant;

use parkmarl::baselines::{dp_oracle, improvement_pct, median, oracle_gap_pct, run_baseline, BaselineKind, OracleConfig};
use parkmarl::data::{load_scenario, ScenarioConfig};
use parkmarl::env::ParkEnv;
use parkmarl::marl::{evaluate, EvalOptions};

use crate::common::{acceptance_config, fixture, Outcome};

/// Greedy strict-mode objective cost of `kind` trained with `seed`.
fn trained_cost(kind: BaselineKind, env: &ParkEnv<f64>, seed: u64, episodes: usize) -> f64 {
    let out = run_baseline(kind, env.clone(), acceptance_config(seed, episodes), |_| {}).unwrap();
    evaluate(&out.checkpoint, env, EvalOptions::default()).unwrap().objective_cost
}

fn costs(kind: BaselineKind, env: &ParkEnv<f64>, seeds: &[u64], episodes: usize) -> Vec<f64> {
    seeds.iter().map(|&s| trained_cost(kind, env, s, episodes)).collect()
}

fn fmt_costs(costs: &[f64]) -> String {
    costs.iter().map(|c| format!("{c:.1}")).collect::<Vec<_>>().join(", ")
}

const DESK_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
// 8 slots per episode, 48,000 steps
const DESK_EPISODES: usize = 6000;
const DESK_GAP_LIMIT: f64 = 15.0;

pub fn desk_gap() -> Outcome {
    let start = Instant::now();
    let env = load_scenario::<f64>(&fixture("desk.txt")).unwrap();
    let oracle = dp_oracle(&env, &OracleConfig::default()).unwrap().cost;
    let learned = costs(BaselineKind::Proposed, &env, &DESK_SEEDS, DESK_EPISODES);
    let med = median(&learned);
    let gap = oracle_gap_pct(oracle, med);
    let steps = DESK_EPISODES * env.horizon();
    Outcome::new(
        gap <= DESK_GAP_LIMIT,
        format!("median gap {gap:.2}% (limit {DESK_GAP_LIMIT}%) after {steps} steps"),
    )
    .with_report(vec![
        format!("oracle cost {oracle:.2}, median learned {med:.2}"),
        format!("per seed: {}", fmt_costs(&learned)),
    ])
    .within(start, 1200.0)
}

const BENCH_SEEDS: [u64; 7] = [0, 1, 2, 3, 4, 5, 6];
// 24 slots per episode
const BENCH_EPISODES: usize = 2000;

pub fn ablation_ordering() -> Outcome {
    let start = Instant::now();
    let env = load_scenario::<f64>(&fixture("benchmark.txt")).unwrap();
    let kinds = [BaselineKind::Proposed, BaselineKind::Uniform, BaselineKind::Concat, BaselineKind::Independent];
    let mut report = Vec::new();
    let mut med = Vec::new();
    for kind in kinds {
        let c = costs(kind, &env, &BENCH_SEEDS, BENCH_EPISODES);
        med.push(median(&c));
        report.push(format!("{:<12} median {:.1}  [{}]", kind.name(), median(&c), fmt_costs(&c)));
    }
    let (proposed, uniform, concat, independent) = (med[0], med[1], med[2], med[3]);
    let gated = proposed <= uniform && uniform <= concat && proposed <= independent;
    let strict = proposed < uniform && uniform < concat && concat < independent;
    let mut order: Vec<_> = kinds.iter().zip(&med).collect();
    order.sort_by(|a, b| a.1.total_cmp(b.1));
    let order = order.iter().map(|(k, _)| k.name()).collect::<Vec<_>>().join(" < ");
    report.push(format!(
        "observed order {order}; full strict order proposed < uniform < concat < independent {}",
        if strict { "holds" } else { "does not hold" }
    ));
    Outcome::new(gated, "proposed ≤ uniform ≤ concat and proposed ≤ independent by median cost".to_string())
        .with_report(report)
        .within(start, 7200.0)
}

const SCALE_SEEDS: [u64; 3] = [0, 1, 2];
const SCALE_EPISODES: usize = 3000;

fn scaled_desk(hubs: usize) -> ParkEnv<f64> {
    let text = format!("hubs = {hubs}\nprofile = desk_profile.txt\nscale_with_hubs = true\n");
    ScenarioConfig::parse(&text, Path::new(&fixture(""))).unwrap().build().unwrap()
}

pub fn scalability() -> Outcome {
    let mut report = Vec::new();
    let mut gains = Vec::new();
    for hubs in [2, 4] {
        let env = scaled_desk(hubs);
        let proposed = median(&costs(BaselineKind::Proposed, &env, &SCALE_SEEDS, SCALE_EPISODES));
        let independent = median(&costs(BaselineKind::Independent, &env, &SCALE_SEEDS, SCALE_EPISODES));
        let gain = improvement_pct(independent, proposed);
        gains.push(gain);
        report.push(format!(
            "{hubs} hubs ({} agents): proposed {proposed:.1}, independent {independent:.1}, improvement {gain:.2}%",
            env.agent_count()
        ));
    }
    report.push("reference direction: the improvement over the baselines grows with the number of hubs".to_string());
    Outcome::new(
        gains[1] >= gains[0],
        format!("improvement {:.2}% with 2 hubs, {:.2}% with 4", gains[0], gains[1]),
    )
    .with_report(report)
}
