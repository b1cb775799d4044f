use ndarray::Array2;
use parkmarl::approx::{AttentionParams, WeightMode};
use parkmarl::baselines::{run_baseline, BaselineKind};
use parkmarl::data::load_scenario;
use parkmarl::marl::TrainConfig;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::common::{fixture, rng, Outcome};

const EMBED: usize = 12;
const ROWS: usize = 3;

fn inputs(agents: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<Array2<f64>> {
    (0..agents)
        .map(|_| Array2::from_shape_fn((ROWS, EMBED), |_| r.gen_range(-2.0..2.0)))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Problems found on one randomized fixture of `agents` agents.
fn check_fixture(agents: usize, seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    let heads = r.gen_range(1..=4);
    let params = AttentionParams::new(heads, EMBED, 4, 5, 0.01, &mut r).unwrap();
    let queries = inputs(agents, &mut r);
    let sources = inputs(agents, &mut r);
    let mut bad = Vec::new();

    let (z, cache) = params.forward_all(&queries, &sources, WeightMode::Learned).unwrap();
    for h in 0..heads {
        for j in 0..agents {
            for row in cache.weights(h, j).rows() {
                if row.iter().any(|&w| w < 0.0) {
                    bad.push(format!("N={agents}: negative weight"));
                }
                if (row.sum() - 1.0).abs() > 1e-9 {
                    bad.push(format!("N={agents}: weights sum to {}", row.sum()));
                }
            }
        }
    }

    let mut perm: Vec<usize> = (0..agents).collect();
    perm.shuffle(&mut r);
    let pq: Vec<_> = perm.iter().map(|&i| queries[i].clone()).collect();
    let ps: Vec<_> = perm.iter().map(|&i| sources[i].clone()).collect();
    let (pz, pcache) = params.forward_all(&pq, &ps, WeightMode::Learned).unwrap();
    // weights list the other agents in index order
    let others = |j: usize| (0..agents).filter(move |&k| k != j);
    for (i, &orig) in perm.iter().enumerate() {
        if !pz[i].iter().zip(z[orig].iter()).all(|(a, b)| close(*a, *b)) {
            bad.push(format!("N={agents}: output of agent {orig} changes under permutation"));
        }
        for h in 0..heads {
            let pw = pcache.weights(h, i);
            let w = cache.weights(h, orig);
            for (col, k) in others(i).enumerate() {
                let orig_col = others(orig).position(|m| m == perm[k]).unwrap();
                for row in 0..ROWS {
                    if !close(pw[[row, col]], w[[row, orig_col]]) {
                        bad.push(format!("N={agents}: weight of {orig} on {} changes", perm[k]));
                    }
                }
            }
        }
    }

    let (_, ucache) = params.forward_all(&queries, &sources, WeightMode::Uniform).unwrap();
    let expect = 1.0 / (agents - 1) as f64;
    for h in 0..heads {
        for j in 0..agents {
            if ucache.weights(h, j).iter().any(|&w| w != expect) {
                bad.push(format!("N={agents}: uniform weight differs from 1/(N-1)"));
            }
        }
    }
    bad
}

pub fn run() -> Outcome {
    let mut problems = Vec::new();
    let mut fixtures = 0;
    for agents in 3..=8 {
        for rep in 0..20 {
            problems.extend(check_fixture(agents, 400 + 100 * agents as u64 + rep));
            fixtures += 1;
        }
    }

    // the uniform baseline trained on two hubs (8 agents) logs 1/7
    let mut env_text = std::fs::read_to_string(fixture("desk.txt")).unwrap();
    env_text = env_text.replace("hubs = 1", "hubs = 2");
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("desk_profile.txt"), dir.path().join("desk_profile.txt")).unwrap();
    let path = dir.path().join("two_hubs.txt");
    std::fs::write(&path, env_text).unwrap();
    let env = load_scenario::<f64>(&path).unwrap();
    let cfg = TrainConfig {
        critic_hidden: 16,
        actor_hidden: 16,
        heads: 2,
        batch: 8,
        warmup: 8,
        episodes: 3,
        ..TrainConfig::default()
    };
    let out = run_baseline(BaselineKind::Uniform, env, cfg, |_| {}).unwrap();
    let logged: Vec<_> = out.metrics.iter().filter_map(|m| m.attention).collect();
    let seventh = 1.0 / 7.0;
    let uniform_ok = !logged.is_empty() && logged.iter().all(|&(lo, hi)| lo == seventh && hi == seventh);
    if !uniform_ok {
        problems.push(format!("uniform baseline logged {logged:?}, expected 1/7"));
    }

    match problems.first() {
        None => Outcome::new(
            true,
            format!(
                "{fixtures} fixtures with 3-8 agents: nonnegative, sum to 1, permutation-equivariant; uniform baseline logs 1/7 over {} episodes",
                logged.len()
            ),
        ),
        Some(p) => Outcome::fail(format!("{} problems, first: {p}", problems.len())),
    }
}
