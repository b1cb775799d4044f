//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 when the command itself
//! fails. Log verbosity comes from the `PARKMARL_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`, `trace`).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use log::info;

use crate::baselines::{
    compare, run_baseline, solve_oracle, BaselineKind, OracleConfig, OracleMode, RunSummary, ORACLE_ALGO,
};
use crate::data::{generate_series, load_scenario, save_series, scenario_fingerprint, ProfileSpec};
use crate::marl::{evaluate, metrics_csv, Checkpoint, EvalOptions, ExecutionMode, TrainConfig};

pub const LOG_ENV: &str = "PARKMARL_LOG";

#[derive(Debug, Parser)]
#[command(name = "parkmarl", version, about = "Energy-hub park dispatch with multi-agent soft actor-critic")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an exogenous series CSV from a profile file.
    GenData(GenDataArgs),
    /// Train a learner on a scenario.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a scenario.
    Eval(EvalArgs),
    /// Solve a scenario exactly on a storage grid.
    Oracle(OracleArgs),
    /// Rank run summaries of the same scenario.
    Compare(CompareArgs),
    /// Turn metrics and dispatch tables into per-figure CSV files.
    ExportPlots(ExportArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Profile file (`key = value`); defaults apply to missing keys.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Override the profile seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Training configuration (`key = value`); defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "proposed", value_parser = parse_algo)]
    pub algo: BaselineKind,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the configured episode count.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Output directory for checkpoint.txt, metrics.csv and config.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Clamp charging to the storage headroom and count attempted overshoots.
    #[arg(long)]
    pub strict: bool,
    /// Sample actions instead of taking each policy's most likely action.
    #[arg(long)]
    pub sampled: bool,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for dispatch.csv and summary.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Storage grid step in kWh.
    #[arg(long, default_value_t = 100.0)]
    pub step: f64,
    #[arg(long, default_value = "dp", value_parser = parse_oracle_mode)]
    pub mode: OracleMode,
    /// Maximum number of evaluations before refusing.
    #[arg(long, default_value_t = OracleConfig::default().budget)]
    pub budget: f64,
    /// Output directory for dispatch.csv and summary.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run summaries written by `eval --out` or `oracle --out`.
    #[arg(long, num_args = 2.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Output directory for ranking.csv and comparison.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Metrics file written by `train`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Dispatch tables written by `eval` or `oracle`.
    #[arg(long, num_args = 1..)]
    pub dispatch: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_algo(s: &str) -> Result<BaselineKind, String> {
    BaselineKind::from_name(s).ok_or_else(|| format!("unknown algorithm {s:?} (proposed, independent, concat, uniform)"))
}

fn parse_oracle_mode(s: &str) -> Result<OracleMode, String> {
    OracleMode::from_name(s).ok_or_else(|| format!("unknown oracle mode {s:?} (dp, enumerate)"))
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::GenData(a) => gen_data(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Oracle(a) => oracle_cmd(a, out),
        Command::Compare(a) => compare_cmd(a, out),
        Command::ExportPlots(a) => export_plots(a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn gen_data(a: GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => ProfileSpec::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => ProfileSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let series = generate_series::<f64>(&spec)?;
    save_series(&series, &a.out)?;
    writeln!(out, "wrote {} slots to {}", series.horizon(), a.out.display())?;
    Ok(())
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let env = load_scenario::<f64>(&a.scenario).with_context(|| format!("loading {}", a.scenario.display()))?;
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    cfg.critic = a.algo.critic();
    cfg.validate()?;
    ensure_dir(&a.out)?;
    let agents = env.agent_count();
    info!("training {} for {} episodes, seed {}", a.algo.name(), cfg.episodes, cfg.seed);
    let config_text = cfg.to_text();
    let result = run_baseline(a.algo, env, cfg, |m| {
        info!("episode {} total_cost {} violations {}", m.episode, m.total_cost, m.violations)
    })?;
    write_file(&a.out.join("metrics.csv"), &metrics_csv(agents, &result.metrics))?;
    write_file(&a.out.join("config.txt"), &config_text)?;
    result.checkpoint.save(&a.out.join("checkpoint.txt"))?;
    if let Some(last) = result.metrics.last() {
        writeln!(out, "episodes = {}\nfinal_total_cost = {}", result.metrics.len(), last.total_cost)?;
    }
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let ckpt = Checkpoint::<f64>::load(&a.checkpoint).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let env = load_scenario::<f64>(&a.scenario).with_context(|| format!("loading {}", a.scenario.display()))?;
    let opts = EvalOptions {
        mode: if a.sampled {
            ExecutionMode::Sampled
        } else {
            ExecutionMode::Greedy
        },
        strict: a.strict,
        seed: a.seed,
    };
    let report = evaluate(&ckpt, &env, opts)?;
    write!(out, "{}", report.summary())?;
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        let summary = RunSummary {
            algo: BaselineKind::from_critic(ckpt.config.critic).name().to_string(),
            seed: Some(ckpt.config.seed),
            scenario: scenario_fingerprint(&env),
            total_cost: report.total_cost,
            objective_cost: report.objective_cost,
            violations: report.violations,
        };
        write_file(&dir.join("dispatch.csv"), &report.dispatch_csv())?;
        write_file(&dir.join("summary.txt"), &summary.to_text())?;
    }
    Ok(())
}

fn oracle_cmd(a: OracleArgs, out: &mut dyn Write) -> Result<()> {
    let env = load_scenario::<f64>(&a.scenario).with_context(|| format!("loading {}", a.scenario.display()))?;
    let cfg = OracleConfig {
        step: a.step,
        mode: a.mode,
        budget: a.budget,
    };
    let sol = solve_oracle(&env, &cfg)?;
    writeln!(
        out,
        "optimal_cost = {}\nmarket_cost = {}\ntotal_reward = {}\nviolations = {}",
        sol.cost, sol.schedule.total_cost, sol.total_reward, sol.schedule.violations
    )?;
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        let summary = RunSummary {
            algo: ORACLE_ALGO.to_string(),
            seed: None,
            scenario: scenario_fingerprint(&env),
            total_cost: sol.schedule.total_cost,
            objective_cost: sol.cost,
            violations: sol.schedule.violations,
        };
        write_file(&dir.join("dispatch.csv"), &sol.schedule.dispatch_csv())?;
        write_file(&dir.join("summary.txt"), &summary.to_text())?;
    }
    Ok(())
}

fn compare_cmd(a: CompareArgs, out: &mut dyn Write) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| RunSummary::parse(&read(p)?).with_context(|| format!("parsing {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let c = compare(&reports)?;
    write!(out, "{}", c.table_csv())?;
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        write_file(&dir.join("ranking.csv"), &c.table_csv())?;
        write_file(&dir.join("comparison.txt"), &c.report())?;
    }
    Ok(())
}

/// A parsed comma-separated table.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| anyhow!("{} is empty", path.display()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let row: Vec<String> = l.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                bail!(
                    "{} line {}: {} fields, header has {}",
                    path.display(),
                    i + 2,
                    row.len(),
                    header.len()
                );
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    /// The columns whose names satisfy `keep`, in file order.
    fn select(&self, keep: impl Fn(&str) -> bool) -> String {
        let idx: Vec<usize> = (0..self.header.len()).filter(|&i| keep(&self.header[i])).collect();
        let mut s = idx.iter().map(|&i| self.header[i].as_str()).collect::<Vec<_>>().join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&idx.iter().map(|&i| r[i].as_str()).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    fn require(&self, names: &[&str], path: &Path) -> Result<()> {
        for n in names {
            if !self.header.iter().any(|h| h == n) {
                bail!("{} has no column {n:?}", path.display());
            }
        }
        Ok(())
    }
}

fn export_plots(a: ExportArgs, out: &mut dyn Write) -> Result<()> {
    if a.metrics.is_none() && a.dispatch.is_empty() {
        bail!("nothing to export: pass --metrics and/or --dispatch");
    }
    ensure_dir(&a.out_dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        let p = a.out_dir.join(&name);
        write_file(&p, &contents)?;
        written.push(name);
        Ok(())
    };
    if let Some(path) = &a.metrics {
        let t = Table::parse(&read(path)?, path)?;
        t.require(&["episode", "mean_reward", "total_cost", "lambda_b", "lambda_w", "violations"], path)?;
        emit(
            "reward_curve.csv".into(),
            t.select(|c| matches!(c, "episode" | "mean_reward" | "total_cost")),
        )?;
        emit(
            "constraint_trace.csv".into(),
            t.select(|c| matches!(c, "episode" | "lambda_b" | "lambda_w" | "violations")),
        )?;
        emit(
            "training_losses.csv".into(),
            t.select(|c| c == "episode" || c == "critic_loss" || c.starts_with("actor_loss_")),
        )?;
        emit(
            "policy_entropy.csv".into(),
            t.select(|c| c == "episode" || c.starts_with("entropy_")),
        )?;
        emit(
            "attention_range.csv".into(),
            t.select(|c| matches!(c, "episode" | "attn_min" | "attn_max")),
        )?;
    }
    for path in &a.dispatch {
        let t = Table::parse(&read(path)?, path)?;
        t.require(&["t", "market_cost", "reward"], path)?;
        let stem = path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "run".into());
        let stem = format!(
            "{stem}_{}",
            path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
        );
        let device = |c: &str| {
            ["battery_", "tank_", "chp_", "boiler_"]
                .iter()
                .any(|p| c.starts_with(p))
        };
        let level = |c: &str| c.starts_with("b_") || c.starts_with("w_");
        emit(
            format!("{stem}_slot_costs.csv"),
            t.select(|c| {
                matches!(
                    c,
                    "t" | "market_cost" | "reward" | "e_buy" | "e_sell" | "g_buy" | "mismatch"
                )
            }),
        )?;
        emit(format!("{stem}_device_profile.csv"), t.select(|c| c == "t" || device(c)))?;
        emit(format!("{stem}_storage_levels.csv"), t.select(|c| c == "t" || level(c)))?;
    }
    for n in written {
        writeln!(out, "{}", a.out_dir.join(n).display())?;
    }
    Ok(())
}
