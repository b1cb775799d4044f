//! Text checkpoints.
//!
//! ```text
//! parkmarl-checkpoint 1
//! layout <observation layout tag>
//! hubs <hub count>
//! agents <device kind per agent, space separated>
//! config <line count>
//! <key = value lines of the training configuration>
//! scaler <observation width>
//! <scaler divisors, space separated>
//! tensors <count>
//! <name> <rows> <cols>          (repeated per tensor, followed by a line
//! <row-major values>             with rows * cols space-separated values)
//! ```
//!
//! Actor tensors are named `actor{j}.layer{i}.{weight|bias}` and critic
//! tensors `critic.*`. Numbers use the shortest text that reads back to the
//! same value. Network shapes and activations follow from the agent kinds
//! and the configuration, so loading rebuilds the networks and then checks
//! every tensor name and shape against them.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::approx::{Parameters, TensorRef};
use crate::env::{DeviceKind, OBS_DIM, OBS_LAYOUT_TAG};
use crate::scalar::Scalar;

use super::actor::ActorSet;
use super::buffer::ObsScaler;
use super::config::TrainConfig;
use super::critic::Critic;
use super::MarlError;

pub const CHECKPOINT_MAGIC: &str = "parkmarl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S: Scalar = f64> {
    /// Observation layout the actors were trained on.
    pub layout: String,
    pub hubs: usize,
    pub config: TrainConfig<S>,
    pub actors: ActorSet<S>,
    pub critic: Critic<S>,
}

fn named_tensors<'a, S: Scalar>(actors: &'a ActorSet<S>, critic: &'a Critic<S>) -> Vec<TensorRef<'a, S>> {
    let mut out = Vec::new();
    for (j, a) in actors.actors.iter().enumerate() {
        a.collect(&format!("actor{j}."), &mut out);
    }
    critic.collect("critic.", &mut out);
    out
}

fn names(kinds: &[DeviceKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(" ")
}

fn join<S: Scalar>(xs: &[S]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, MarlError> {
        match self.it.next() {
            Some((n, l)) => {
                self.line = n + 1;
                Ok(l)
            }
            None => Err(MarlError::CheckpointFormat {
                line: self.line + 1,
                reason: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn err(&self, reason: impl Into<String>) -> MarlError {
        MarlError::CheckpointFormat {
            line: self.line,
            reason: reason.into(),
        }
    }

    /// A `keyword value` line.
    fn field(&mut self, keyword: &str) -> Result<&'a str, MarlError> {
        let l = self.next(keyword)?;
        match l.split_once(' ') {
            Some((k, v)) if k == keyword => Ok(v.trim()),
            _ => Err(self.err(format!("expected `{keyword} ...`"))),
        }
    }

    fn count(&mut self, keyword: &str) -> Result<usize, MarlError> {
        let v = self.field(keyword)?;
        v.parse().map_err(|_| self.err(format!("bad {keyword} count {v:?}")))
    }

    fn values<S: Scalar>(&mut self, expected: usize, what: &str) -> Result<Vec<S>, MarlError> {
        let l = self.next(what)?;
        let vals = l
            .split_whitespace()
            .map(|t| S::parse_str(t).ok_or_else(|| self.err(format!("bad number {t:?}"))))
            .collect::<Result<Vec<S>, _>>()?;
        if vals.len() != expected {
            return Err(self.err(format!("{what}: expected {expected} values, found {}", vals.len())));
        }
        Ok(vals)
    }
}

impl<S: Scalar> Checkpoint<S> {
    pub fn kinds(&self) -> Vec<DeviceKind> {
        self.actors.kinds()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(s, "layout {}", self.layout);
        let _ = writeln!(s, "hubs {}", self.hubs);
        let kinds: Vec<&str> = self.kinds().iter().map(|k| k.name()).collect();
        let _ = writeln!(s, "agents {}", kinds.join(" "));
        let cfg = self.config.to_text();
        let _ = writeln!(s, "config {}", cfg.lines().count());
        s.push_str(&cfg);
        let _ = writeln!(s, "scaler {}", self.actors.scaler.scale.len());
        let _ = writeln!(s, "{}", join(&self.actors.scaler.scale));
        let tensors = named_tensors(&self.actors, &self.critic);
        let _ = writeln!(s, "tensors {}", tensors.len());
        for t in tensors {
            let (rows, cols) = match t.shape.as_slice() {
                [r, c] => (*r, *c),
                [c] => (1, *c),
                _ => (1, t.data.len()),
            };
            let _ = writeln!(s, "{} {rows} {cols}", t.name);
            let _ = writeln!(s, "{}", join(t.data));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, MarlError> {
        let mut lines = Lines {
            it: text.lines().enumerate(),
            line: 0,
        };
        let version = lines.field(CHECKPOINT_MAGIC)?;
        if version != CHECKPOINT_VERSION.to_string() {
            return Err(lines.err(format!("unsupported checkpoint version {version}")));
        }
        let layout = lines.field("layout")?.to_string();
        let hubs = lines.count("hubs")?;
        let kinds = lines
            .field("agents")?
            .split_whitespace()
            .map(|k| DeviceKind::from_name(k).ok_or_else(|| lines.err(format!("unknown device kind {k:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let n_cfg = lines.count("config")?;
        let mut cfg_text = String::new();
        for _ in 0..n_cfg {
            cfg_text.push_str(lines.next("config line")?);
            cfg_text.push('\n');
        }
        let config = TrainConfig::parse(&cfg_text).map_err(|e| lines.err(e.to_string()))?;
        let width = lines.count("scaler")?;
        let scale = lines.values(width, "scaler")?;
        if width != OBS_DIM {
            return Err(lines.err(format!("scaler has {width} entries, observations have {OBS_DIM}")));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut actors = ActorSet::new(&kinds, OBS_DIM, ObsScaler { scale }, &config, &mut rng);
        let mut critic = Critic::new(config.critic, &kinds, OBS_DIM, &config, &mut rng)?;
        let expected: Vec<(String, usize, usize)> = named_tensors(&actors, &critic)
            .iter()
            .map(|t| match t.shape.as_slice() {
                [r, c] => (t.name.clone(), *r, *c),
                [c] => (t.name.clone(), 1, *c),
                _ => (t.name.clone(), 1, t.data.len()),
            })
            .collect();
        let count = lines.count("tensors")?;
        if count != expected.len() {
            return Err(lines.err(format!("{count} tensors, the architecture has {}", expected.len())));
        }
        let mut data = Vec::with_capacity(count);
        for (name, rows, cols) in &expected {
            let head = lines.next("tensor header")?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let ok = parts.len() == 3
                && parts[0] == name
                && parts[1].parse::<usize>().ok() == Some(*rows)
                && parts[2].parse::<usize>().ok() == Some(*cols);
            if !ok {
                return Err(lines.err(format!("expected tensor `{name} {rows} {cols}`, found `{head}`")));
            }
            data.push(lines.values::<S>(rows * cols, name)?);
        }
        {
            let mut dst = Vec::new();
            for a in actors.actors.iter_mut() {
                a.collect_mut(&mut dst);
            }
            critic.collect_mut(&mut dst);
            for (d, src) in dst.into_iter().zip(data) {
                d.copy_from_slice(&src);
            }
        }
        Ok(Self {
            layout,
            hubs,
            config,
            actors,
            critic,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), MarlError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MarlError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Errors unless the checkpoint was trained for these agents and this
    /// observation layout.
    pub fn check_compatible(&self, kinds: &[DeviceKind]) -> Result<(), MarlError> {
        if self.layout != OBS_LAYOUT_TAG {
            return Err(MarlError::IncompatibleCheckpoint(format!(
                "observation layout {:?}, expected {OBS_LAYOUT_TAG:?}",
                self.layout
            )));
        }
        if self.kinds() != kinds {
            return Err(MarlError::IncompatibleCheckpoint(format!(
                "checkpoint agents [{}] differ from scenario agents [{}]",
                names(&self.kinds()),
                names(kinds)
            )));
        }
        Ok(())
    }
}
