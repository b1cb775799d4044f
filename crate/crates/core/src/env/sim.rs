use crate::scalar::{lit, Scalar};

use super::devices::{boiler_output, chp_output, storage_step};
use super::lagrange::{penalized_reward, update_lagrange};
use super::market::{balance_market, park_reward, HubFlows, MarketOutcome};
use super::{
    decode_action, DeviceKind, EnvError, ExoSlot, ExogenousSeries, HubAction, HubParams,
    JointAction, MarketParams,
};

/// Version tag of the observation layout, embedded in checkpoints.
pub const OBS_LAYOUT_TAG: &str = "park-obs-v1";

/// Feature names of an agent observation, in vector order.
pub const OBS_LAYOUT: [&str; 10] = [
    "sin_t", "cos_t", "p_e", "p_g", "p_o", "demand_e", "demand_h", "demand_g", "pv", "own",
];

pub const OBS_DIM: usize = OBS_LAYOUT.len();

/// Number of agents (devices) per hub.
pub const AGENTS_PER_HUB: usize = 4;

/// How the storage upper bound is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacityMode {
    /// Charging may overshoot the cap; the overshoot is what the Lagrange
    /// multipliers react to. Violations count storages ending above cap.
    #[default]
    Soft,
    /// Charging is clamped to the remaining headroom. Violations count
    /// requested charges that would have overshot.
    Strict,
}

/// Per-hub dynamic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubState<S: Scalar = f64> {
    /// Battery level (kWh).
    pub b: S,
    /// Tank level (kWh).
    pub w: S,
    pub lambda_b: S,
    pub lambda_w: S,
    /// Dispatch fraction the CHP used in the previous slot.
    pub prev_chp: S,
    /// Dispatch fraction the boiler used in the previous slot.
    pub prev_boiler: S,
}

impl<S: Scalar> HubState<S> {
    pub fn with_levels(b: S, w: S) -> Self {
        Self {
            b,
            w,
            lambda_b: S::zero(),
            lambda_w: S::zero(),
            prev_chp: S::zero(),
            prev_boiler: S::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParkState<S: Scalar = f64> {
    /// Index of the slot about to be played.
    pub t: usize,
    pub hubs: Vec<HubState<S>>,
}

/// Physical dispatch of every hub for one slot, after clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch<S: Scalar = f64> {
    pub flows: Vec<HubFlows<S>>,
    pub chp_fraction: Vec<S>,
    pub boiler_fraction: Vec<S>,
    /// Requested charges clipped by strict capacity mode.
    pub attempted_violations: usize,
}

/// Everything one environment step produces.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S: Scalar = f64> {
    pub market: MarketOutcome<S>,
    /// Shared park reward.
    pub reward: S,
    /// Per-agent rewards; storage agents carry their Lagrange term.
    pub agent_rewards: Vec<S>,
    /// Purchases minus sales in currency.
    pub market_cost: S,
    pub flows: Vec<HubFlows<S>>,
    pub violations: usize,
    pub next_state: ParkState<S>,
}

/// Deterministic park simulator. Stepping is a pure function of
/// `(state, action)` and the immutable scenario data held here.
#[derive(Debug, Clone)]
pub struct ParkEnv<S: Scalar = f64> {
    hubs: Vec<HubParams<S>>,
    market: MarketParams<S>,
    series: ExogenousSeries<S>,
    zeta: S,
    mode: CapacityMode,
    lagrange_penalty: bool,
    initial: Vec<HubState<S>>,
}

impl<S: Scalar> ParkEnv<S> {
    /// Builds an environment with storages starting half full.
    pub fn new(
        hubs: Vec<HubParams<S>>,
        market: MarketParams<S>,
        series: ExogenousSeries<S>,
    ) -> Result<Self, EnvError> {
        if hubs.is_empty() {
            return Err(EnvError::InvalidParams("at least one hub is required".into()));
        }
        for h in &hubs {
            h.validate()?;
        }
        market.validate()?;
        series.validate()?;
        let half = lit::<S>(0.5);
        let initial = hubs
            .iter()
            .map(|h| HubState::with_levels(h.b_max * half, h.w_max * half))
            .collect();
        Ok(Self {
            hubs,
            market,
            series,
            zeta: lit(1e-4),
            mode: CapacityMode::Soft,
            lagrange_penalty: true,
            initial,
        })
    }

    pub fn with_zeta(mut self, zeta: S) -> Result<Self, EnvError> {
        if !(zeta > S::zero() && zeta.is_finite()) {
            return Err(EnvError::InvalidParams(format!("zeta = {zeta} must be positive")));
        }
        self.zeta = zeta;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: CapacityMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_lagrange_penalty(mut self, enabled: bool) -> Self {
        self.lagrange_penalty = enabled;
        self
    }

    /// Sets the starting storage levels and multipliers, one entry per hub.
    pub fn with_initial(mut self, initial: Vec<HubState<S>>) -> Result<Self, EnvError> {
        if initial.len() != self.hubs.len() {
            return Err(EnvError::ShapeMismatch(format!(
                "{} initial hub states for {} hubs",
                initial.len(),
                self.hubs.len()
            )));
        }
        for s in &initial {
            if !(s.b >= S::zero() && s.w >= S::zero()) {
                return Err(EnvError::InvalidParams("initial storage levels must be >= 0".into()));
            }
            for l in [s.lambda_b, s.lambda_w] {
                if !(l >= S::zero() && l <= S::one()) {
                    return Err(EnvError::InvalidParams("multipliers must lie in [0, 1]".into()));
                }
            }
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn hub_params(&self) -> &[HubParams<S>] {
        &self.hubs
    }

    pub fn market(&self) -> &MarketParams<S> {
        &self.market
    }

    pub fn series(&self) -> &ExogenousSeries<S> {
        &self.series
    }

    pub fn zeta(&self) -> S {
        self.zeta
    }

    pub fn mode(&self) -> CapacityMode {
        self.mode
    }

    pub fn lagrange_penalty(&self) -> bool {
        self.lagrange_penalty
    }

    pub fn horizon(&self) -> usize {
        self.series.horizon()
    }

    pub fn hub_count(&self) -> usize {
        self.hubs.len()
    }

    pub fn agent_count(&self) -> usize {
        self.hubs.len() * AGENTS_PER_HUB
    }

    /// Device kind of every agent, in agent order.
    pub fn agent_kinds(&self) -> Vec<DeviceKind> {
        (0..self.agent_count()).map(agent_kind).collect()
    }

    pub fn initial_hubs(&self) -> &[HubState<S>] {
        &self.initial
    }

    pub fn initial_state(&self) -> ParkState<S> {
        ParkState {
            t: 0,
            hubs: self.initial.clone(),
        }
    }

    /// Initial levels, but multipliers carried over from `previous`.
    pub fn initial_state_carrying(&self, previous: &ParkState<S>) -> ParkState<S> {
        let mut s = self.initial_state();
        for (h, p) in s.hubs.iter_mut().zip(&previous.hubs) {
            h.lambda_b = p.lambda_b;
            h.lambda_w = p.lambda_w;
        }
        s
    }

    fn check_state(&self, state: &ParkState<S>) -> Result<(), EnvError> {
        if state.hubs.len() != self.hubs.len() {
            return Err(EnvError::ShapeMismatch(format!(
                "state has {} hubs, scenario has {}",
                state.hubs.len(),
                self.hubs.len()
            )));
        }
        if state.t >= self.horizon() {
            return Err(EnvError::EpisodeExhausted {
                t: state.t,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// Decodes the joint action and clamps it into physical flows: discharges
    /// to the stored energy, charges to the headroom in strict mode.
    pub fn resolve(&self, state: &ParkState<S>, action: &JointAction) -> Result<Dispatch<S>, EnvError> {
        self.check_state(state)?;
        if action.0.len() != self.hubs.len() {
            return Err(EnvError::ShapeMismatch(format!(
                "action covers {} hubs, scenario has {}",
                action.0.len(),
                self.hubs.len()
            )));
        }
        let mut d = Dispatch {
            flows: Vec::with_capacity(self.hubs.len()),
            chp_fraction: Vec::with_capacity(self.hubs.len()),
            boiler_fraction: Vec::with_capacity(self.hubs.len()),
            attempted_violations: 0,
        };
        for ((p, s), a) in self.hubs.iter().zip(&state.hubs).zip(&action.0) {
            let (flows, chp, boiler, attempted) = self.resolve_hub(p, s, a)?;
            d.flows.push(flows);
            d.chp_fraction.push(chp);
            d.boiler_fraction.push(boiler);
            d.attempted_violations += attempted;
        }
        Ok(d)
    }

    /// Clamped flows of hub `hub` on its own, with the number of charges
    /// strict mode clipped.
    pub fn resolve_hub_action(
        &self,
        hub: usize,
        state: &HubState<S>,
        action: &HubAction,
    ) -> Result<(HubFlows<S>, usize), EnvError> {
        let p = self.hubs.get(hub).ok_or_else(|| {
            EnvError::ShapeMismatch(format!("hub {hub} of {}", self.hubs.len()))
        })?;
        let (flows, _, _, attempted) = self.resolve_hub(p, state, action)?;
        Ok((flows, attempted))
    }

    fn resolve_hub(
        &self,
        p: &HubParams<S>,
        s: &HubState<S>,
        a: &HubAction,
    ) -> Result<(HubFlows<S>, S, S, usize), EnvError> {
        let a_b: S = decode_action(a.battery, DeviceKind::Battery)?;
        let a_w: S = decode_action(a.tank, DeviceKind::Tank)?;
        let a_c: S = decode_action(a.chp, DeviceKind::Chp)?;
        let a_o: S = decode_action(a.boiler, DeviceKind::Boiler)?;
        let mut attempted = 0;
        let (charge_e, discharge_e) = self.storage_flows(
            a_b, s.b, p.b_max, p.c_e_max, p.d_e_max, p.eta_ce, p.eta_de, &mut attempted,
        );
        let (charge_h, discharge_h) = self.storage_flows(
            a_w, s.w, p.w_max, p.c_h_max, p.d_h_max, p.eta_ch, p.eta_dh, &mut attempted,
        );
        let gas_chp = a_c * p.chp_gas_max();
        let gas_boiler = a_o * p.boiler_gas_max();
        let (e_chp, h_chp) = chp_output(gas_chp, p);
        let h_boiler = boiler_output(gas_boiler, p);
        Ok((
            HubFlows {
                charge_e,
                discharge_e,
                charge_h,
                discharge_h,
                gas_chp,
                gas_boiler,
                e_chp,
                h_chp,
                h_boiler,
            },
            a_c,
            a_o,
            attempted,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn storage_flows(
        &self,
        fraction: S,
        level: S,
        cap: S,
        charge_max: S,
        discharge_max: S,
        eta_c: S,
        eta_d: S,
        attempted: &mut usize,
    ) -> (S, S) {
        if fraction > S::zero() {
            let mut charge = fraction * charge_max;
            if self.mode == CapacityMode::Strict {
                let headroom = ((cap - level) / eta_c).max(S::zero());
                if charge > headroom {
                    *attempted += 1;
                    charge = headroom;
                }
            }
            (charge, S::zero())
        } else if fraction < S::zero() {
            let available = level.max(S::zero()) * eta_d;
            ((S::zero()), (-fraction * discharge_max).min(available))
        } else {
            (S::zero(), S::zero())
        }
    }

    /// Market balancing, rewards, storage recursions and multiplier updates
    /// for an already-resolved dispatch.
    pub fn settle(&self, state: &ParkState<S>, dispatch: &Dispatch<S>) -> Result<StepOutcome<S>, EnvError> {
        self.check_state(state)?;
        let slot = self.series.slot(state.t);
        let market = balance_market(&dispatch.flows, &slot, &self.market);
        let reward = park_reward(&market, &slot, &self.market);

        let mut next = ParkState {
            t: state.t + 1,
            hubs: Vec::with_capacity(self.hubs.len()),
        };
        let mut agent_rewards = Vec::with_capacity(self.agent_count());
        let mut violations = 0;
        for (k, (p, s)) in self.hubs.iter().zip(&state.hubs).enumerate() {
            let f = &dispatch.flows[k];
            let lambda_b = update_lagrange(s.lambda_b, s.b, p.b_max, self.zeta);
            let lambda_w = update_lagrange(s.lambda_w, s.w, p.w_max, self.zeta);
            let mut b = storage_step(s.b, f.charge_e, f.discharge_e, p.eta_ce, p.eta_de)?.max(S::zero());
            let mut w = storage_step(s.w, f.charge_h, f.discharge_h, p.eta_ch, p.eta_dh)?.max(S::zero());
            match self.mode {
                CapacityMode::Strict => {
                    // only rounding can carry a clamped charge past the cap
                    if f.charge_e > S::zero() {
                        b = b.min(p.b_max.max(s.b));
                    }
                    if f.charge_h > S::zero() {
                        w = w.min(p.w_max.max(s.w));
                    }
                }
                CapacityMode::Soft => {
                    violations += usize::from(b > p.b_max) + usize::from(w > p.w_max);
                }
            }
            let (r_b, r_w) = if self.lagrange_penalty {
                (
                    penalized_reward(reward, b, p.b_max, lambda_b),
                    penalized_reward(reward, w, p.w_max, lambda_w),
                )
            } else {
                (reward, reward)
            };
            agent_rewards.extend([r_b, r_w, reward, reward]);
            next.hubs.push(HubState {
                b,
                w,
                lambda_b,
                lambda_w,
                prev_chp: dispatch.chp_fraction[k],
                prev_boiler: dispatch.boiler_fraction[k],
            });
        }
        if self.mode == CapacityMode::Strict {
            violations = dispatch.attempted_violations;
        }
        Ok(StepOutcome {
            market_cost: market.market_cost(&slot),
            market,
            reward,
            agent_rewards,
            flows: dispatch.flows.clone(),
            violations,
            next_state: next,
        })
    }

    /// One slot of the park: decode, clamp, convert, balance, reward,
    /// update storages and multipliers.
    pub fn step(&self, state: &ParkState<S>, action: &JointAction) -> Result<StepOutcome<S>, EnvError> {
        let dispatch = self.resolve(state, action)?;
        self.settle(state, &dispatch)
    }

    /// Exogenous values for slot `t`, clamped to the last slot so terminal
    /// states still produce observations.
    pub fn exo(&self, t: usize) -> ExoSlot<S> {
        self.series.slot(t.min(self.horizon() - 1))
    }

    /// Local observation of `agent`; see [`OBS_LAYOUT`].
    pub fn observe(&self, state: &ParkState<S>, agent: usize) -> Result<Vec<S>, EnvError> {
        if agent >= self.agent_count() {
            return Err(EnvError::AgentOutOfRange {
                agent,
                count: self.agent_count(),
            });
        }
        let hub = agent / AGENTS_PER_HUB;
        let p = &self.hubs[hub];
        let h = &state.hubs[hub];
        let own = match agent_kind(agent) {
            DeviceKind::Battery => normalized(h.b, p.b_max),
            DeviceKind::Tank => normalized(h.w, p.w_max),
            DeviceKind::Chp => h.prev_chp,
            DeviceKind::Boiler => h.prev_boiler,
        };
        let (sin, cos) = time_features::<S>(state.t);
        let x = self.exo(state.t);
        Ok(vec![
            sin, cos, x.p_e, x.p_g, x.p_o, x.demand_e, x.demand_h, x.demand_g, x.pv, own,
        ])
    }

    pub fn observe_all(&self, state: &ParkState<S>) -> Vec<Vec<S>> {
        (0..self.agent_count())
            .map(|j| self.observe(state, j).expect("agent index in range"))
            .collect()
    }
}

/// Device kind of agent `agent` (hub-major order).
pub fn agent_kind(agent: usize) -> DeviceKind {
    DeviceKind::ALL[agent % AGENTS_PER_HUB]
}

fn normalized<S: Scalar>(level: S, cap: S) -> S {
    if cap > S::zero() {
        level / cap
    } else {
        S::zero()
    }
}

/// Daily phase features `(sin(2πt/24), cos(2πt/24))`.
pub fn time_features<S: Scalar>(t: usize) -> (S, S) {
    let phase = 2.0 * std::f64::consts::PI * (t % 24) as f64 / 24.0;
    (S::lit(phase.sin()), S::lit(phase.cos()))
}
