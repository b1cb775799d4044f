use std::path::{Path, PathBuf};
use std::process::Command;

use crate::common::{fixture, Outcome};

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_parkmarl"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs the whole seeded pipeline into `root` and lists the files it wrote.
fn pipeline(root: &Path, cfg: &Path) -> Result<Vec<PathBuf>, String> {
    let scenario = fixture("desk.txt");
    let series = root.join("series.csv");
    cli(&["gen-data", "--spec", s(&fixture("day_profile.txt")), "--seed", "11", "--out", s(&series)])?;
    let train = root.join("train");
    cli(&["train", "--scenario", s(&scenario), "--config", s(cfg), "--seed", "7", "--out", s(&train)])?;
    let eval = root.join("eval");
    cli(&[
        "eval",
        "--checkpoint",
        s(&train.join("checkpoint.txt")),
        "--scenario",
        s(&scenario),
        "--sampled",
        "--seed",
        "3",
        "--out",
        s(&eval),
    ])?;
    let plots = root.join("plots");
    cli(&[
        "export-plots",
        "--metrics",
        s(&train.join("metrics.csv")),
        "--dispatch",
        s(&eval.join("dispatch.csv")),
        "--out-dir",
        s(&plots),
    ])?;
    let mut files = vec![series, train.join("metrics.csv"), train.join("checkpoint.txt")];
    for dir in [&eval, &plots] {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        files.extend(entries);
    }
    Ok(files)
}

pub fn run() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.txt");
    std::fs::write(
        &cfg,
        "critic_hidden = 16\nactor_hidden = 16\nheads = 2\nbatch = 16\nwarmup = 16\nepisodes = 25\n",
    )
    .unwrap();
    let runs: Result<Vec<_>, _> = ["first", "second"]
        .iter()
        .map(|name| {
            let root = dir.path().join(name);
            std::fs::create_dir_all(&root).unwrap();
            pipeline(&root, &cfg).map(|files| (root, files))
        })
        .collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return Outcome::fail(e),
    };
    let (a_root, a_files) = &runs[0];
    let (b_root, b_files) = &runs[1];
    let mut differing = Vec::new();
    for (a, b) in a_files.iter().zip(b_files) {
        let rel_a = a.strip_prefix(a_root).unwrap();
        let rel_b = b.strip_prefix(b_root).unwrap();
        if rel_a != rel_b || std::fs::read(a).unwrap() != std::fs::read(b).unwrap() {
            differing.push(rel_a.display().to_string());
        }
    }
    if a_files.len() != b_files.len() {
        differing.push("file sets differ".into());
    }
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "gen-data, train, sampled eval and export-plots with fixed seeds: {} files byte-identical across two invocations",
                a_files.len()
            )
        } else {
            format!("files differ: {}", differing.join(", "))
        },
    )
}
