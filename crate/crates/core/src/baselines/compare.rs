//! Run summaries and the cross-method ranking.
//!
//! A run summary is a `key = value` text file:
//!
//! ```text
//! algo = proposed
//! seed = 7
//! scenario = 3f9c0a1b2c3d4e5f
//! total_cost = 74133
//! objective_cost = 74133
//! violations = 0
//! ```
//!
//! `seed` is `none` for deterministic runs such as the oracle. `scenario` is
//! the scenario fingerprint; summaries with different fingerprints are never
//! compared.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data::parse_kv;

use super::BaselineError;

/// Name the oracle's summaries carry.
pub const ORACLE_ALGO: &str = "oracle";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algo: String,
    pub seed: Option<u64>,
    pub scenario: String,
    pub total_cost: f64,
    pub objective_cost: f64,
    pub violations: usize,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "algo = {}\nseed = {}\nscenario = {}\ntotal_cost = {}\nobjective_cost = {}\nviolations = {}\n",
            self.algo, seed, self.scenario, self.total_cost, self.objective_cost, self.violations
        )
    }

    pub fn parse(text: &str) -> Result<Self, BaselineError> {
        let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (line, key, value) in parse_kv(text)? {
            fields.insert(key, (line, value));
        }
        let get = |k: &str| {
            fields.get(k).cloned().ok_or_else(|| BaselineError::Format {
                line: 0,
                reason: format!("missing key {k:?}"),
            })
        };
        let num = |k: &str| -> Result<f64, BaselineError> {
            let (line, v) = get(k)?;
            v.parse().map_err(|_| BaselineError::Format {
                line,
                reason: format!("{k} = {v:?} is not a number"),
            })
        };
        let (seed_line, seed) = get("seed")?;
        let seed = match seed.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|_| BaselineError::Format {
                line: seed_line,
                reason: format!("seed = {s:?} is not an integer"),
            })?),
        };
        let (vline, violations) = get("violations")?;
        Ok(Self {
            algo: get("algo")?.1,
            seed,
            scenario: get("scenario")?.1,
            total_cost: num("total_cost")?,
            objective_cost: num("objective_cost")?,
            violations: violations.parse().map_err(|_| BaselineError::Format {
                line: vline,
                reason: format!("violations = {violations:?} is not a count"),
            })?,
        })
    }
}

/// Relative saving of `proposed` against `baseline`, in percent.
pub fn improvement_pct(baseline: f64, proposed: f64) -> f64 {
    (baseline - proposed) / baseline.abs() * 100.0
}

/// How far `learner` sits above `oracle`, in percent of the oracle cost.
pub fn oracle_gap_pct(oracle: f64, learner: f64) -> f64 {
    (learner - oracle) / oracle.abs() * 100.0
}

/// Median of a non-empty slice; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedAlgo {
    pub algo: String,
    pub runs: usize,
    pub median_objective_cost: f64,
    pub median_total_cost: f64,
    pub median_violations: f64,
    /// Saving of the reference method against this one.
    pub reference_improvement_pct: f64,
    /// Gap of this method to the oracle, when an oracle summary is present.
    pub oracle_gap_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    /// Method the improvements are measured for: `proposed` when present,
    /// otherwise the best-ranked learner.
    pub reference: String,
    /// Ascending median objective cost.
    pub ranking: Vec<RankedAlgo>,
}

/// Groups summaries by method and ranks the methods by median objective cost.
pub fn compare(reports: &[RunSummary]) -> Result<Comparison, BaselineError> {
    if reports.len() < 2 {
        return Err(BaselineError::Incomparable(format!(
            "need at least 2 reports, got {}",
            reports.len()
        )));
    }
    let scenario = &reports[0].scenario;
    if let Some(r) = reports.iter().find(|r| &r.scenario != scenario) {
        return Err(BaselineError::Incomparable(format!(
            "{} ran on scenario {}, {} on {}",
            reports[0].algo, scenario, r.algo, r.scenario
        )));
    }
    let mut groups: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.algo.as_str()).or_default().push(r);
    }
    let seed_sets: Vec<(&str, Vec<Option<u64>>)> = groups
        .iter()
        .filter(|(a, _)| **a != ORACLE_ALGO)
        .map(|(a, rs)| {
            let mut seeds: Vec<_> = rs.iter().map(|r| r.seed).collect();
            seeds.sort();
            (*a, seeds)
        })
        .collect();
    if let Some((first, seeds)) = seed_sets.first() {
        if let Some((other, _)) = seed_sets.iter().find(|(_, s)| s != seeds) {
            return Err(BaselineError::Incomparable(format!(
                "{first} and {other} were run with different seeds"
            )));
        }
    }

    let oracle = groups
        .get(ORACLE_ALGO)
        .map(|rs| median(&rs.iter().map(|r| r.objective_cost).collect::<Vec<_>>()));
    let mut ranking: Vec<RankedAlgo> = groups
        .iter()
        .map(|(algo, rs)| {
            let col = |f: fn(&RunSummary) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            RankedAlgo {
                algo: algo.to_string(),
                runs: rs.len(),
                median_objective_cost: col(|r| r.objective_cost),
                median_total_cost: col(|r| r.total_cost),
                median_violations: col(|r| r.violations as f64),
                reference_improvement_pct: 0.0,
                oracle_gap_pct: None,
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        a.median_objective_cost
            .total_cmp(&b.median_objective_cost)
            .then_with(|| a.algo.cmp(&b.algo))
    });
    let reference = if groups.contains_key("proposed") {
        "proposed".to_string()
    } else {
        ranking
            .iter()
            .find(|r| r.algo != ORACLE_ALGO)
            .unwrap_or(&ranking[0])
            .algo
            .clone()
    };
    let ref_cost = ranking
        .iter()
        .find(|r| r.algo == reference)
        .map(|r| r.median_objective_cost)
        .expect("reference is ranked");
    for r in &mut ranking {
        r.reference_improvement_pct = improvement_pct(r.median_objective_cost, ref_cost);
        if r.algo != ORACLE_ALGO {
            r.oracle_gap_pct = oracle.map(|o| oracle_gap_pct(o, r.median_objective_cost));
        }
    }
    Ok(Comparison {
        scenario: scenario.clone(),
        reference,
        ranking,
    })
}

impl Comparison {
    pub const TABLE_HEADER: &'static str =
        "rank,algo,runs,median_objective_cost,median_total_cost,median_violations,reference_improvement_pct,oracle_gap_pct";

    pub fn table_csv(&self) -> String {
        let mut s = String::from(Self::TABLE_HEADER);
        s.push('\n');
        for (i, r) in self.ranking.iter().enumerate() {
            let gap = r.oracle_gap_pct.map_or_else(String::new, |g| format!("{g:.2}"));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.2},{}",
                i + 1,
                r.algo,
                r.runs,
                r.median_objective_cost,
                r.median_total_cost,
                r.median_violations,
                r.reference_improvement_pct,
                gap
            );
        }
        s
    }

    /// Sectioned `key = value` report, one `[algo]` section per method.
    pub fn report(&self) -> String {
        let mut s = format!("scenario = {}\nreference = {}\n", self.scenario, self.reference);
        for (i, r) in self.ranking.iter().enumerate() {
            let _ = write!(
                s,
                "\n[{}]\nrank = {}\nruns = {}\nmedian_objective_cost = {}\nmedian_total_cost = {}\nmedian_violations = {}\n{}_improvement_pct = {:.2}\n",
                r.algo,
                i + 1,
                r.runs,
                r.median_objective_cost,
                r.median_total_cost,
                r.median_violations,
                self.reference,
                r.reference_improvement_pct
            );
            if let Some(g) = r.oracle_gap_pct {
                let _ = writeln!(s, "oracle_gap_pct = {g:.2}");
            }
        }
        s
    }
}
