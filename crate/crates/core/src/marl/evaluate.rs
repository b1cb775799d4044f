//! Policy rollouts and the per-slot dispatch table.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{CapacityMode, JointAction, ParkEnv, ParkState};
use crate::scalar::Scalar;

use super::actor::{ActorSet, ExecutionMode};
use super::checkpoint::Checkpoint;
use super::MarlError;

/// Dispatch of one hub in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HubDispatch<S: Scalar = f64> {
    /// Action indices in device order battery, tank, CHP, boiler.
    pub actions: [usize; 4],
    /// Decoded fractions in the same order.
    pub fractions: [S; 4],
    /// Storage levels after the slot.
    pub b: S,
    pub w: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchRow<S: Scalar = f64> {
    pub t: usize,
    pub e_buy: S,
    pub e_sell: S,
    pub g_buy: S,
    pub mismatch: S,
    pub reward: S,
    pub market_cost: S,
    pub violations: usize,
    pub hubs: Vec<HubDispatch<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<S: Scalar = f64> {
    /// Money paid to the utilities minus money received.
    pub total_cost: S,
    /// `T * b1 - sum of rewards`: market cost plus the mismatch penalty.
    pub objective_cost: S,
    pub total_reward: S,
    pub total_mismatch: S,
    pub violations: usize,
    pub rows: Vec<DispatchRow<S>>,
}

impl<S: Scalar> EvalReport<S> {
    pub fn dispatch_header(hubs: usize) -> String {
        let mut h = String::from("t,e_buy,e_sell,g_buy,mismatch,reward,market_cost,violations");
        for k in 0..hubs {
            let _ = write!(h, ",battery_{k},tank_{k},chp_{k},boiler_{k},b_{k},w_{k}");
        }
        h
    }

    /// Header plus one record per slot.
    pub fn dispatch_csv(&self) -> String {
        let hubs = self.rows.first().map_or(0, |r| r.hubs.len());
        let mut s = Self::dispatch_header(hubs);
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.t, r.e_buy, r.e_sell, r.g_buy, r.mismatch, r.reward, r.market_cost, r.violations
            );
            for h in &r.hubs {
                let [a, b, c, d] = h.fractions;
                let _ = write!(s, ",{a},{b},{c},{d},{},{}", h.b, h.w);
            }
            s.push('\n');
        }
        s
    }

    /// `key = value` summary lines.
    pub fn summary(&self) -> String {
        format!(
            "total_cost = {}\nobjective_cost = {}\ntotal_reward = {}\ntotal_mismatch = {}\nviolations = {}\n",
            self.total_cost, self.objective_cost, self.total_reward, self.total_mismatch, self.violations
        )
    }
}

/// Plays one episode from the environment's initial state, asking `policy`
/// for the joint action (agent order) at every slot.
pub fn rollout<S: Scalar>(
    env: &ParkEnv<S>,
    mut policy: impl FnMut(&ParkState<S>, &[Vec<S>]) -> Result<Vec<usize>, MarlError>,
) -> Result<EvalReport<S>, MarlError> {
    let mut state = env.initial_state();
    let mut report = EvalReport {
        total_cost: S::zero(),
        objective_cost: S::zero(),
        total_reward: S::zero(),
        total_mismatch: S::zero(),
        violations: 0,
        rows: Vec::with_capacity(env.horizon()),
    };
    for t in 0..env.horizon() {
        let obs = env.observe_all(&state);
        let actions = policy(&state, &obs)?;
        let joint = JointAction::from_agent_indices(&actions)?;
        let out = env.step(&state, &joint)?;
        report.total_cost += out.market_cost;
        report.total_reward += out.reward;
        report.total_mismatch += out.market.total_mismatch();
        report.violations += out.violations;
        let hubs = joint
            .0
            .iter()
            .zip(&out.next_state.hubs)
            .map(|(a, h)| {
                let idx = [a.battery, a.tank, a.chp, a.boiler];
                let mut fractions = [S::zero(); 4];
                for (f, (i, k)) in fractions.iter_mut().zip(idx.iter().zip(crate::env::DeviceKind::ALL)) {
                    *f = crate::env::decode_action(*i, k)?;
                }
                Ok(HubDispatch {
                    actions: idx,
                    fractions,
                    b: h.b,
                    w: h.w,
                })
            })
            .collect::<Result<Vec<_>, MarlError>>()?;
        report.rows.push(DispatchRow {
            t,
            e_buy: out.market.e_buy,
            e_sell: out.market.e_sell,
            g_buy: out.market.g_buy,
            mismatch: out.market.total_mismatch(),
            reward: out.reward,
            market_cost: out.market_cost,
            violations: out.violations,
            hubs,
        });
        state = out.next_state;
    }
    report.objective_cost = S::lit(env.horizon() as f64) * env.market().b1 - report.total_reward;
    Ok(report)
}

/// Rolls out decentralized actors: each agent's action depends only on its
/// own observation.
pub fn rollout_actors<S: Scalar>(
    actors: &ActorSet<S>,
    env: &ParkEnv<S>,
    mode: ExecutionMode,
    seed: u64,
) -> Result<EvalReport<S>, MarlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rollout(env, |_, obs| actors.act_all(obs, mode, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub mode: ExecutionMode,
    /// Clamp charging to the storage headroom and count attempted overshoots.
    pub strict: bool,
    /// Sampling seed; unused in greedy mode.
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mode: ExecutionMode::Greedy,
            strict: true,
            seed: 0,
        }
    }
}

/// Cost report of a checkpoint's policies on `env`.
pub fn evaluate<S: Scalar>(
    checkpoint: &Checkpoint<S>,
    env: &ParkEnv<S>,
    opts: EvalOptions,
) -> Result<EvalReport<S>, MarlError> {
    checkpoint.check_compatible(&env.agent_kinds())?;
    let mode = if opts.strict {
        CapacityMode::Strict
    } else {
        CapacityMode::Soft
    };
    let env = env.clone().with_mode(mode);
    rollout_actors(&checkpoint.actors, &env, opts.mode, opts.seed)
}
