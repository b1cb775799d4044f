use std::path::{Path, PathBuf};
use std::time::Instant;

use parkmarl::marl::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
    /// Extra lines printed under the verdict.
    pub report: Vec<String>,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            report: Vec::new(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }

    pub fn with_report(mut self, report: Vec<String>) -> Self {
        self.report = report;
        self
    }

    /// Fails a passing outcome that ran past `limit_secs`.
    pub fn within(mut self, start: Instant, limit_secs: f64) -> Self {
        let secs = start.elapsed().as_secs_f64();
        if secs >= limit_secs {
            self.pass = false;
            self.detail = format!("{}; took {secs:.1} s, limit {limit_secs} s", self.detail);
        }
        self
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Relative error with a floor so vanishing entries compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

/// The committed acceptance training config with `seed` and `episodes` set.
pub fn acceptance_config(seed: u64, episodes: usize) -> TrainConfig {
    let text = std::fs::read_to_string(fixture("acceptance_train.txt")).unwrap();
    let mut cfg = TrainConfig::parse(&text).unwrap();
    cfg.seed = seed;
    cfg.episodes = episodes;
    cfg
}

