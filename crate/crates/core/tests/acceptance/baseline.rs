use parkmarl::approx::softmax;
use parkmarl::marl::{advantages, counterfactual_baseline};
use rand::Rng;

use crate::common::{rng, Outcome};

const FIXTURES: usize = 1000;

pub fn run() -> Outcome {
    let mut r = rng(303);
    let mut worst_b: f64 = 0.0;
    let mut worst_adv: f64 = 0.0;
    for _ in 0..FIXTURES {
        let n = [11, 21][r.gen_range(0..2)];
        let scale = r.gen_range(0.1..20.0);
        let logits: Vec<f64> = (0..n).map(|_| r.gen_range(-scale..scale)).collect();
        let pi = softmax(&logits);
        let q: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();

        // brute force: walk every own action, probability times value
        let mut brute = 0.0;
        for a in 0..n {
            brute += pi[a] * q[a];
        }
        let b = counterfactual_baseline(&pi, &q);
        worst_b = worst_b.max((b - brute).abs());

        let adv = advantages(&pi, &q);
        let mean: f64 = pi.iter().zip(&adv).map(|(p, a)| p * a).sum();
        worst_adv = worst_adv.max(mean.abs());
    }
    Outcome::new(
        worst_b <= 1e-12 && worst_adv <= 1e-9,
        format!("{FIXTURES} fixtures, max |b - brute force| {worst_b:.1e}, max |E[A]| {worst_adv:.1e}"),
    )
}
