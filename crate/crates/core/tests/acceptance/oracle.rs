use std::time::Instant;

use parkmarl::baselines::{dp_oracle, enumerate_oracle, OracleConfig, OracleMode};
use parkmarl::data::load_scenario;

use crate::common::{fixture, Outcome};

pub fn run() -> Outcome {
    let start = Instant::now();
    let env = load_scenario::<f64>(&fixture("micro/scenario.txt")).unwrap();
    let frozen: f64 = std::fs::read_to_string(fixture("micro/oracle_cost.txt"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    let cfg = |mode| OracleConfig {
        step: 500.0,
        mode,
        ..OracleConfig::default()
    };
    let dp = dp_oracle(&env, &cfg(OracleMode::Dp)).unwrap();
    let en = enumerate_oracle(&env, &cfg(OracleMode::Enumerate)).unwrap();
    let same = dp.total_reward == en.total_reward && dp.cost == en.cost;
    let detail = format!(
        "T={} micro instance, step 500: dp cost {} / enumeration cost {} / frozen {frozen}; about {:.2e} evaluations",
        env.horizon(),
        dp.cost,
        en.cost,
        en.work
    );
    Outcome::new(same && dp.cost == frozen, detail).within(start, 120.0)
}
