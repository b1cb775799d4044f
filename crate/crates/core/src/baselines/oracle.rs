//! Full-information dispatch optimum over a storage-level grid.
//!
//! Storage levels live on a grid of `step` kWh. Every transition is computed
//! by the environment in strict capacity mode and then snapped onto the grid
//! toward the current level, with the storage flow recomputed so that the
//! level lands exactly on the grid point: a charge becomes
//! `(snapped - level) / eta_c`, a discharge `(level - snapped) * eta_d`.
//! Snapping toward the current level never exceeds a rate limit, the
//! headroom or the stored energy.
//!
//! CHP and boiler settings do not influence the next state, so each slot's
//! best generator setting is found by an exhaustive inner maximization for
//! every distinct storage flow combination.

use std::collections::BTreeSet;

use crate::env::{
    balance_market, park_reward, CapacityMode, DeviceKind, Dispatch, HubAction, HubFlows, HubParams,
    HubState, ParkEnv, ParkState,
};
use crate::marl::{DispatchRow, EvalReport, HubDispatch};
use crate::scalar::Scalar;

use super::BaselineError;

const STORAGE_ACTIONS: usize = 21;
const GEN_ACTIONS: usize = 11;
const HUB_STORAGE_ACTIONS: usize = STORAGE_ACTIONS * STORAGE_ACTIONS;
const HUB_GEN_ACTIONS: usize = GEN_ACTIONS * GEN_ACTIONS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleMode {
    /// Backward induction over (slot, storage levels).
    #[default]
    Dp,
    /// Every joint storage-action sequence, one by one.
    Enumerate,
}

impl OracleMode {
    pub fn name(self) -> &'static str {
        match self {
            OracleMode::Dp => "dp",
            OracleMode::Enumerate => "enumerate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "dp" => Some(OracleMode::Dp),
            "enumerate" => Some(OracleMode::Enumerate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Storage grid spacing in kWh; every storage capacity must be a multiple.
    pub step: f64,
    pub mode: OracleMode,
    /// Refuse runs whose estimated number of evaluations exceeds this.
    pub budget: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            step: 100.0,
            mode: OracleMode::Dp,
            budget: 2e9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution<S: Scalar = f64> {
    /// Optimal sum of park rewards, accumulated from the last slot backwards.
    pub total_reward: S,
    /// `T * b1 - total_reward`: market cost plus mismatch penalty.
    pub cost: S,
    /// Agent action indices per slot.
    pub actions: Vec<Vec<usize>>,
    /// Replay of the optimal schedule. Storage fractions are the effective
    /// (snapped) ones, levels are grid points.
    pub schedule: EvalReport<S>,
    /// Estimated evaluations the run needed.
    pub work: f64,
}

#[derive(Debug, Clone, Copy)]
struct Move {
    delta: i64,
    attempted: usize,
}

struct HubModel<S: Scalar> {
    params: HubParams<S>,
    nb: usize,
    nw: usize,
    /// `[ib * 21 + action]`.
    battery: Vec<Move>,
    tank: Vec<Move>,
    deltas_b: Vec<i64>,
    deltas_w: Vec<i64>,
    gen: Vec<HubFlows<S>>,
    gen_fractions: Vec<(S, S)>,
}

impl<S: Scalar> HubModel<S> {
    fn states(&self) -> usize {
        self.nb * self.nw
    }

    fn keys(&self) -> usize {
        self.deltas_b.len() * self.deltas_w.len()
    }

    fn storage_flows(&self, step: S, db: i64, dw: i64) -> HubFlows<S> {
        let p = &self.params;
        let mut f = HubFlows::default();
        if db > 0 {
            f.charge_e = step * S::lit(db as f64) / p.eta_ce;
        } else if db < 0 {
            f.discharge_e = step * S::lit(-db as f64) * p.eta_de;
        }
        if dw > 0 {
            f.charge_h = step * S::lit(dw as f64) / p.eta_ch;
        } else if dw < 0 {
            f.discharge_h = step * S::lit(-dw as f64) * p.eta_dh;
        }
        f
    }
}

fn grid_count(cap: f64, step: f64, what: &str) -> Result<usize, BaselineError> {
    let n = cap / step;
    if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
        return Err(BaselineError::InvalidOracle(format!(
            "{what} = {cap} is not a multiple of the grid step {step}"
        )));
    }
    Ok(n.round() as usize + 1)
}

fn grid_index(level: f64, step: f64, what: &str) -> Result<usize, BaselineError> {
    let n = level / step;
    if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
        return Err(BaselineError::InvalidOracle(format!(
            "initial {what} level {level} is not on the {step} kWh grid"
        )));
    }
    Ok(n.round() as usize)
}

/// Snaps the strict-mode transition from grid level `i` toward `i`.
fn snap(level: f64, next: f64, step: f64, i: usize, n: usize) -> i64 {
    let d = (next - level) / step;
    let delta = if d >= 0.0 {
        (d + 1e-9).floor() as i64
    } else {
        -((-d + 1e-9).floor() as i64)
    };
    delta.clamp(-(i as i64), (n - 1 - i) as i64)
}

fn distinct(moves: &[Move]) -> Vec<i64> {
    moves.iter().map(|m| m.delta).collect::<BTreeSet<_>>().into_iter().collect()
}

fn build_hub<S: Scalar>(env: &ParkEnv<S>, hub: usize, step: f64) -> Result<HubModel<S>, BaselineError> {
    let params = env.hub_params()[hub].clone();
    let nb = grid_count(params.b_max.to_f64_lossy(), step, "b_max")?;
    let nw = grid_count(params.w_max.to_f64_lossy(), step, "w_max")?;
    let step_s = S::lit(step);
    let idle = HubAction::idle();

    let mut battery = Vec::with_capacity(nb * STORAGE_ACTIONS);
    for ib in 0..nb {
        let level = step_s * S::lit(ib as f64);
        let state = HubState::with_levels(level, S::zero());
        for a in 0..STORAGE_ACTIONS {
            let action = HubAction { battery: a, ..idle };
            let (f, attempted) = env.resolve_hub_action(hub, &state, &action)?;
            let next = level + params.eta_ce * f.charge_e - f.discharge_e / params.eta_de;
            let delta = snap(level.to_f64_lossy(), next.to_f64_lossy(), step, ib, nb);
            battery.push(Move { delta, attempted });
        }
    }
    let mut tank = Vec::with_capacity(nw * STORAGE_ACTIONS);
    for iw in 0..nw {
        let level = step_s * S::lit(iw as f64);
        let state = HubState::with_levels(S::zero(), level);
        for a in 0..STORAGE_ACTIONS {
            let action = HubAction { tank: a, ..idle };
            let (f, attempted) = env.resolve_hub_action(hub, &state, &action)?;
            let next = level + params.eta_ch * f.charge_h - f.discharge_h / params.eta_dh;
            let delta = snap(level.to_f64_lossy(), next.to_f64_lossy(), step, iw, nw);
            tank.push(Move { delta, attempted });
        }
    }

    let mut gen = Vec::with_capacity(HUB_GEN_ACTIONS);
    let mut gen_fractions = Vec::with_capacity(HUB_GEN_ACTIONS);
    let empty = HubState::with_levels(S::zero(), S::zero());
    for c in 0..GEN_ACTIONS {
        for o in 0..GEN_ACTIONS {
            let action = HubAction { chp: c, boiler: o, ..idle };
            let (f, _) = env.resolve_hub_action(hub, &empty, &action)?;
            gen.push(f);
            gen_fractions.push((
                crate::env::decode_action(c, DeviceKind::Chp)?,
                crate::env::decode_action(o, DeviceKind::Boiler)?,
            ));
        }
    }
    Ok(HubModel {
        deltas_b: distinct(&battery),
        deltas_w: distinct(&tank),
        params,
        nb,
        nw,
        battery,
        tank,
        gen,
        gen_fractions,
    })
}

/// Per-hub transition of one hub state under one storage action pair.
#[derive(Debug, Clone, Copy)]
struct HubStep {
    next: u32,
    key: u32,
    attempted: u8,
}

/// The discretized decision problem shared by both solution methods.
struct Model<S: Scalar> {
    env: ParkEnv<S>,
    step: S,
    hubs: Vec<HubModel<S>>,
    /// `[hub][hub_state * 441 + hub_action]`.
    steps: Vec<Vec<HubStep>>,
    states: usize,
    actions: usize,
    keys: usize,
    gens: usize,
    /// `[t][key]`: best slot reward and the generator setting achieving it.
    slot_best: Vec<Vec<(S, u32)>>,
    start: usize,
}

fn mixed_radix(mut i: usize, radices: impl Iterator<Item = usize>) -> Vec<usize> {
    radices
        .map(|r| {
            let d = i % r;
            i /= r;
            d
        })
        .collect()
}

impl<S: Scalar> Model<S> {
    fn estimate(env: &ParkEnv<S>, cfg: &OracleConfig) -> Result<f64, BaselineError> {
        let t = env.horizon() as f64;
        let mut states = 1.0;
        let mut keys = 1.0;
        let mut actions = 1.0;
        let mut gens = 1.0;
        for p in env.hub_params() {
            let nb = grid_count(p.b_max.to_f64_lossy(), cfg.step, "b_max")? as f64;
            let nw = grid_count(p.w_max.to_f64_lossy(), cfg.step, "w_max")? as f64;
            states *= nb * nw;
            keys *= HUB_STORAGE_ACTIONS as f64;
            actions *= HUB_STORAGE_ACTIONS as f64;
            gens *= HUB_GEN_ACTIONS as f64;
        }
        let mut work = t * (states * actions + keys * gens);
        if cfg.mode == OracleMode::Enumerate {
            work += t * actions.powf(t);
        }
        Ok(work)
    }

    fn build(env: &ParkEnv<S>, cfg: &OracleConfig) -> Result<(Self, f64), BaselineError> {
        if !(cfg.step > 0.0 && cfg.step.is_finite()) {
            return Err(BaselineError::InvalidOracle(format!("grid step {} must be positive", cfg.step)));
        }
        if cfg.mode == OracleMode::Enumerate && (env.horizon() > 4 || env.hub_count() > 2) {
            return Err(BaselineError::InvalidOracle(format!(
                "enumeration needs T <= 4 and at most 2 hubs, got T = {} with {} hubs",
                env.horizon(),
                env.hub_count()
            )));
        }
        let work = Self::estimate(env, cfg)?;
        if work > cfg.budget {
            return Err(BaselineError::OverBudget {
                estimate: work,
                budget: cfg.budget,
            });
        }
        let env = env.clone().with_mode(CapacityMode::Strict);
        let hubs = (0..env.hub_count())
            .map(|k| build_hub(&env, k, cfg.step))
            .collect::<Result<Vec<_>, _>>()?;

        let mut steps = Vec::with_capacity(hubs.len());
        for h in &hubs {
            let mut table = Vec::with_capacity(h.states() * HUB_STORAGE_ACTIONS);
            for s in 0..h.states() {
                let (ib, iw) = (s / h.nw, s % h.nw);
                for a in 0..HUB_STORAGE_ACTIONS {
                    let (ab, aw) = (a / STORAGE_ACTIONS, a % STORAGE_ACTIONS);
                    let mb = h.battery[ib * STORAGE_ACTIONS + ab];
                    let mw = h.tank[iw * STORAGE_ACTIONS + aw];
                    let nb = (ib as i64 + mb.delta) as usize;
                    let nw = (iw as i64 + mw.delta) as usize;
                    let kb = h.deltas_b.binary_search(&mb.delta).expect("delta recorded");
                    let kw = h.deltas_w.binary_search(&mw.delta).expect("delta recorded");
                    table.push(HubStep {
                        next: (nb * h.nw + nw) as u32,
                        key: (kb * h.deltas_w.len() + kw) as u32,
                        attempted: (mb.attempted + mw.attempted) as u8,
                    });
                }
            }
            steps.push(table);
        }

        let states = hubs.iter().map(HubModel::states).product();
        let keys = hubs.iter().map(HubModel::keys).product();
        let actions = HUB_STORAGE_ACTIONS.pow(hubs.len() as u32);
        let gens = HUB_GEN_ACTIONS.pow(hubs.len() as u32);

        let mut start = 0;
        for (k, (h, init)) in hubs.iter().zip(env.initial_hubs()).enumerate().rev() {
            let ib = grid_index(init.b.to_f64_lossy(), cfg.step, &format!("battery {k}"))?;
            let iw = grid_index(init.w.to_f64_lossy(), cfg.step, &format!("tank {k}"))?;
            if ib >= h.nb || iw >= h.nw {
                return Err(BaselineError::InvalidOracle(format!(
                    "initial levels of hub {k} exceed the storage capacity"
                )));
            }
            start = start * h.states() + ib * h.nw + iw;
        }

        let mut model = Self {
            step: S::lit(cfg.step),
            env,
            hubs,
            steps,
            states,
            actions,
            keys,
            gens,
            slot_best: Vec::new(),
            start,
        };
        model.slot_best = (0..model.env.horizon()).map(|t| model.best_generators(t)).collect();
        Ok((model, work))
    }

    fn storage_flows(&self, key: usize) -> Vec<HubFlows<S>> {
        let mut flows = Vec::with_capacity(self.hubs.len());
        let mut k = key;
        for h in &self.hubs {
            let hk = k % h.keys();
            k /= h.keys();
            let (kb, kw) = (hk / h.deltas_w.len(), hk % h.deltas_w.len());
            flows.push(h.storage_flows(self.step, h.deltas_b[kb], h.deltas_w[kw]));
        }
        flows
    }

    fn combine(&self, storage: &[HubFlows<S>], gen: usize) -> Vec<HubFlows<S>> {
        let mut g = gen;
        storage
            .iter()
            .zip(&self.hubs)
            .map(|(s, h)| {
                let gf = h.gen[g % HUB_GEN_ACTIONS];
                g /= HUB_GEN_ACTIONS;
                HubFlows {
                    gas_chp: gf.gas_chp,
                    gas_boiler: gf.gas_boiler,
                    e_chp: gf.e_chp,
                    h_chp: gf.h_chp,
                    h_boiler: gf.h_boiler,
                    ..*s
                }
            })
            .collect()
    }

    fn best_generators(&self, t: usize) -> Vec<(S, u32)> {
        let slot = self.env.exo(t);
        let market = self.env.market();
        (0..self.keys)
            .map(|key| {
                let storage = self.storage_flows(key);
                let mut best = (S::neg_infinity(), 0);
                for g in 0..self.gens {
                    let flows = self.combine(&storage, g);
                    let r = park_reward(&balance_market(&flows, &slot, market), &slot, market);
                    if r > best.0 {
                        best = (r, g as u32);
                    }
                }
                best
            })
            .collect()
    }

    /// Next joint state, flow key and strict-mode clips of one joint move.
    fn transition(&self, state: usize, action: usize) -> (usize, usize, usize) {
        let (mut s, mut a) = (state, action);
        let (mut next, mut key, mut attempted) = (0, 0, 0);
        let (mut smul, mut kmul) = (1, 1);
        for (h, table) in self.hubs.iter().zip(&self.steps) {
            let hs = s % h.states();
            s /= h.states();
            let ha = a % HUB_STORAGE_ACTIONS;
            a /= HUB_STORAGE_ACTIONS;
            let st = table[hs * HUB_STORAGE_ACTIONS + ha];
            next += st.next as usize * smul;
            key += st.key as usize * kmul;
            attempted += st.attempted as usize;
            smul *= h.states();
            kmul *= h.keys();
        }
        (next, key, attempted)
    }

    /// Distance of the requested storage fractions from idle, in grid steps
    /// of the action space. Ties between equal-value moves go to the
    /// request with fewer strict-mode clips, then to the smaller request.
    fn effort(&self, action: usize) -> usize {
        let mut a = action;
        let mut e = 0;
        for _ in &self.hubs {
            let ha = a % HUB_STORAGE_ACTIONS;
            a /= HUB_STORAGE_ACTIONS;
            e += (ha / STORAGE_ACTIONS).abs_diff(10) + (ha % STORAGE_ACTIONS).abs_diff(10);
        }
        e
    }

    fn dp(&self) -> (S, Vec<usize>) {
        let horizon = self.env.horizon();
        let mut value = vec![S::zero(); self.states];
        let mut policy = vec![vec![0u32; self.states]; horizon];
        for t in (0..horizon).rev() {
            let best = &self.slot_best[t];
            let mut next_value = vec![S::neg_infinity(); self.states];
            for (s, out) in next_value.iter_mut().enumerate() {
                let mut pref = (usize::MAX, usize::MAX);
                for a in 0..self.actions {
                    let (n, key, attempted) = self.transition(s, a);
                    let v = best[key].0 + value[n];
                    let p = (attempted, self.effort(a));
                    if v > *out || (v == *out && p < pref) {
                        *out = v;
                        pref = p;
                        policy[t][s] = a as u32;
                    }
                }
            }
            value = next_value;
        }
        let mut plan = Vec::with_capacity(horizon);
        let mut s = self.start;
        for row in &policy {
            let a = row[s] as usize;
            plan.push(a);
            s = self.transition(s, a).0;
        }
        (value[self.start], plan)
    }

    fn enumerate(&self) -> (S, Vec<usize>) {
        let horizon = self.env.horizon();
        let mut seq = vec![0usize; horizon];
        let mut rewards = vec![S::zero(); horizon];
        let mut best = (S::neg_infinity(), seq.clone());
        let mut best_pref = (usize::MAX, usize::MAX);
        loop {
            let mut s = self.start;
            let mut pref = (0, 0);
            for (t, &a) in seq.iter().enumerate() {
                let (n, key, attempted) = self.transition(s, a);
                rewards[t] = self.slot_best[t][key].0;
                pref.0 += attempted;
                pref.1 += self.effort(a);
                s = n;
            }
            let total = rewards.iter().rev().fold(S::zero(), |acc, &r| r + acc);
            if total > best.0 || (total == best.0 && pref < best_pref) {
                best = (total, seq.clone());
                best_pref = pref;
            }
            // odometer over sequences, first slot most significant
            let mut t = horizon;
            loop {
                if t == 0 {
                    return best;
                }
                t -= 1;
                seq[t] += 1;
                if seq[t] < self.actions {
                    break;
                }
                seq[t] = 0;
            }
        }
    }

    fn replay(&self, plan: &[usize]) -> Result<(Vec<Vec<usize>>, EvalReport<S>), BaselineError> {
        let env = &self.env;
        let hub_states: Vec<usize> = self.hubs.iter().map(HubModel::states).collect();
        let levels = |s: usize| -> Vec<(S, S)> {
            mixed_radix(s, hub_states.iter().copied())
                .into_iter()
                .zip(&self.hubs)
                .map(|(hs, h)| {
                    (
                        self.step * S::lit((hs / h.nw) as f64),
                        self.step * S::lit((hs % h.nw) as f64),
                    )
                })
                .collect()
        };
        let mut state: ParkState<S> = env.initial_state();
        let mut s = self.start;
        let mut actions = Vec::with_capacity(plan.len());
        let mut report = EvalReport {
            total_cost: S::zero(),
            objective_cost: S::zero(),
            total_reward: S::zero(),
            total_mismatch: S::zero(),
            violations: 0,
            rows: Vec::with_capacity(plan.len()),
        };
        for (t, &a) in plan.iter().enumerate() {
            let (n, key, attempted) = self.transition(s, a);
            let gen = self.slot_best[t][key].1 as usize;
            let flows = self.combine(&self.storage_flows(key), gen);
            let hub_actions = mixed_radix(a, std::iter::repeat(HUB_STORAGE_ACTIONS).take(self.hubs.len()));
            let hub_gens = mixed_radix(gen, std::iter::repeat(HUB_GEN_ACTIONS).take(self.hubs.len()));
            let dispatch = Dispatch {
                chp_fraction: hub_gens.iter().zip(&self.hubs).map(|(&g, h)| h.gen_fractions[g].0).collect(),
                boiler_fraction: hub_gens.iter().zip(&self.hubs).map(|(&g, h)| h.gen_fractions[g].1).collect(),
                flows,
                attempted_violations: attempted,
            };
            let out = env.settle(&state, &dispatch)?;
            let after = levels(n);
            let mut joint = Vec::with_capacity(4 * self.hubs.len());
            let mut hubs = Vec::with_capacity(self.hubs.len());
            for (k, h) in self.hubs.iter().enumerate() {
                let (ab, aw) = (hub_actions[k] / STORAGE_ACTIONS, hub_actions[k] % STORAGE_ACTIONS);
                let (c, o) = (hub_gens[k] / GEN_ACTIONS, hub_gens[k] % GEN_ACTIONS);
                joint.extend([ab, aw, c, o]);
                let f = &dispatch.flows[k];
                let p = &h.params;
                let frac = |charge: S, discharge: S, cmax: S, dmax: S| {
                    if charge > S::zero() {
                        charge / cmax
                    } else if discharge > S::zero() {
                        -discharge / dmax
                    } else {
                        S::zero()
                    }
                };
                hubs.push(HubDispatch {
                    actions: [ab, aw, c, o],
                    fractions: [
                        frac(f.charge_e, f.discharge_e, p.c_e_max, p.d_e_max),
                        frac(f.charge_h, f.discharge_h, p.c_h_max, p.d_h_max),
                        dispatch.chp_fraction[k],
                        dispatch.boiler_fraction[k],
                    ],
                    b: after[k].0,
                    w: after[k].1,
                });
            }
            report.total_cost += out.market_cost;
            report.total_reward += out.reward;
            report.total_mismatch += out.market.total_mismatch();
            report.violations += out.violations;
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
            actions.push(joint);
            state = out.next_state;
            for (h, (b, w)) in state.hubs.iter_mut().zip(after) {
                h.b = b;
                h.w = w;
            }
            s = n;
        }
        report.objective_cost = S::lit(env.horizon() as f64) * env.market().b1 - report.total_reward;
        Ok((actions, report))
    }
}

/// Optimal schedule by the method `cfg.mode` selects.
pub fn solve_oracle<S: Scalar>(env: &ParkEnv<S>, cfg: &OracleConfig) -> Result<OracleSolution<S>, BaselineError> {
    let (model, work) = Model::build(env, cfg)?;
    let (total_reward, plan) = match cfg.mode {
        OracleMode::Dp => model.dp(),
        OracleMode::Enumerate => model.enumerate(),
    };
    let (actions, schedule) = model.replay(&plan)?;
    Ok(OracleSolution {
        total_reward,
        cost: S::lit(env.horizon() as f64) * env.market().b1 - total_reward,
        actions,
        schedule,
        work,
    })
}

/// Optimal schedule by backward induction.
pub fn dp_oracle<S: Scalar>(env: &ParkEnv<S>, cfg: &OracleConfig) -> Result<OracleSolution<S>, BaselineError> {
    solve_oracle(env, &OracleConfig { mode: OracleMode::Dp, ..*cfg })
}

/// Optimal schedule by trying every joint storage-action sequence.
pub fn enumerate_oracle<S: Scalar>(
    env: &ParkEnv<S>,
    cfg: &OracleConfig,
) -> Result<OracleSolution<S>, BaselineError> {
    solve_oracle(env, &OracleConfig { mode: OracleMode::Enumerate, ..*cfg })
}
