use std::time::Instant;

use parkmarl::env::{
    CapacityMode, ExoSlot, ExogenousSeries, HubParams, HubState, JointAction, MarketParams, ParkEnv, ParkState,
    DeviceKind, AGENTS_PER_HUB,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::common::{rng, Outcome};

const CASES: usize = 10_000;
const TOL: f64 = 1e-9;

fn random_hub(r: &mut ChaCha8Rng) -> HubParams<f64> {
    let eta_pg = r.gen_range(0.2..0.5);
    let eta_hg = r.gen_range(0.2..0.5);
    let gas = r.gen_range(100.0..3000.0);
    HubParams {
        eta_ce: r.gen_range(0.8..=1.0),
        eta_de: r.gen_range(0.8..=1.0),
        eta_ch: r.gen_range(0.8..=1.0),
        eta_dh: r.gen_range(0.8..=1.0),
        eta_pg,
        eta_hg,
        eta_bg: r.gen_range(0.6..=1.0),
        b_max: r.gen_range(500.0..5000.0),
        w_max: r.gen_range(500.0..5000.0),
        c_e_max: r.gen_range(100.0..2000.0),
        d_e_max: r.gen_range(100.0..2000.0),
        c_h_max: r.gen_range(100.0..2000.0),
        d_h_max: r.gen_range(100.0..2000.0),
        e_chp_max: eta_pg * gas,
        h_chp_max: eta_hg * gas,
        h_b_max: r.gen_range(100.0..2000.0),
    }
}

fn random_slot(r: &mut ChaCha8Rng) -> ExoSlot<f64> {
    let p_e = r.gen_range(0.1..1.5);
    ExoSlot {
        t: 0,
        p_e,
        p_g: r.gen_range(0.1..0.6),
        p_o: p_e * r.gen_range(0.0..1.0),
        demand_e: r.gen_range(0.0..3000.0),
        demand_g: r.gen_range(0.0..500.0),
        demand_h: r.gen_range(0.0..2000.0),
        pv: if r.gen_bool(0.5) { r.gen_range(0.0..1500.0) } else { 0.0 },
    }
}

struct Case {
    env: ParkEnv<f64>,
    state: ParkState<f64>,
    action: Vec<usize>,
}

fn random_case(r: &mut ChaCha8Rng) -> Case {
    let hubs: Vec<_> = (0..r.gen_range(1..=3)).map(|_| random_hub(r)).collect();
    let market = MarketParams {
        e_max: r.gen_range(500.0..8000.0),
        g_max: r.gen_range(500.0..8000.0),
        e_o_max: r.gen_range(0.0..5000.0),
        b1: r.gen_range(0.0..50.0),
        b2: r.gen_range(0.0..5.0),
    };
    let horizon = r.gen_range(1..=4);
    let slots: Vec<_> = (0..horizon).map(|_| random_slot(r)).collect();
    let mode = if r.gen_bool(0.5) { CapacityMode::Soft } else { CapacityMode::Strict };
    let initial: Vec<_> = hubs
        .iter()
        .map(|h| HubState {
            lambda_b: r.gen_range(0.0..=1.0),
            lambda_w: r.gen_range(0.0..=1.0),
            // soft mode may already sit above cap
            ..HubState::with_levels(r.gen_range(0.0..1.2 * h.b_max), r.gen_range(0.0..1.2 * h.w_max))
        })
        .collect();
    let env = ParkEnv::new(hubs, market, ExogenousSeries::from_slots(&slots))
        .unwrap()
        .with_zeta(r.gen_range(1e-5..1e-3))
        .unwrap()
        .with_mode(mode)
        .with_lagrange_penalty(r.gen_bool(0.8))
        .with_initial(initial)
        .unwrap();
    let mut state = env.initial_state();
    state.t = r.gen_range(0..horizon);
    let action = (0..env.agent_count())
        .map(|j| r.gen_range(0..DeviceKind::ALL[j % AGENTS_PER_HUB].action_count()))
        .collect();
    Case { env, state, action }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + TOL * b.abs().max(1.0)
}

/// Every violated identity or bound of one step, as text.
fn check(case: &Case) -> Vec<String> {
    let Case { env, state, action } = case;
    let out = env.step(state, &JointAction::from_agent_indices(action).unwrap()).unwrap();
    let slot = env.series().slot(state.t);
    let m = &out.market;
    let mp = env.market();
    let mut bad = Vec::new();
    let mut need = |ok: bool, what: &str| {
        if !ok {
            bad.push(what.to_string());
        }
    };

    let (mut hub_e, mut hub_h, mut hub_gas) = (0.0, 0.0, 0.0);
    for (k, ((p, s), f)) in env.hub_params().iter().zip(&state.hubs).zip(&out.flows).enumerate() {
        let next = &out.next_state.hubs[k];
        hub_e += f.e_chp + f.discharge_e - f.charge_e;
        hub_h += f.h_chp + f.h_boiler + f.discharge_h - f.charge_h;
        hub_gas += f.gas_chp + f.gas_boiler;

        for (name, x) in [
            ("charge_e", f.charge_e),
            ("discharge_e", f.discharge_e),
            ("charge_h", f.charge_h),
            ("discharge_h", f.discharge_h),
            ("gas_chp", f.gas_chp),
            ("gas_boiler", f.gas_boiler),
        ] {
            need(x >= 0.0, &format!("{name} negative"));
        }
        need(f.charge_e == 0.0 || f.discharge_e == 0.0, "battery charges and discharges");
        need(f.charge_h == 0.0 || f.discharge_h == 0.0, "tank charges and discharges");
        need(leq(f.charge_e, p.c_e_max), "battery charge rate");
        need(leq(f.discharge_e, p.d_e_max), "battery discharge rate");
        need(leq(f.charge_h, p.c_h_max), "tank charge rate");
        need(leq(f.discharge_h, p.d_h_max), "tank discharge rate");
        need(leq(f.discharge_e, s.b * p.eta_de), "battery discharges more than stored");
        need(leq(f.discharge_h, s.w * p.eta_dh), "tank discharges more than stored");

        need(close(f.e_chp, (p.eta_pg * f.gas_chp).min(p.e_chp_max)), "chp electricity");
        need(close(f.h_chp, (p.eta_hg * f.gas_chp).min(p.h_chp_max)), "chp heat");
        need(leq(f.gas_chp, p.chp_gas_max()), "chp gas cap");
        need(leq(f.e_chp, p.e_chp_max) && leq(f.h_chp, p.h_chp_max), "chp output caps");
        need(close(f.h_boiler, (p.eta_bg * f.gas_boiler).min(p.h_b_max)), "boiler heat");
        need(leq(f.gas_boiler, p.boiler_gas_max()), "boiler gas cap");

        let b = (s.b + p.eta_ce * f.charge_e - f.discharge_e / p.eta_de).max(0.0);
        let w = (s.w + p.eta_ch * f.charge_h - f.discharge_h / p.eta_dh).max(0.0);
        need(close(next.b, b), "battery recursion");
        need(close(next.w, w), "tank recursion");
        need(next.b >= 0.0 && next.w >= 0.0, "negative storage");
        if env.mode() == CapacityMode::Strict {
            need(leq(next.b, p.b_max.max(s.b)), "strict battery cap");
            need(leq(next.w, p.w_max.max(s.w)), "strict tank cap");
        }
        let lb = (s.lambda_b + env.zeta() * (s.b - p.b_max)).clamp(0.0, 1.0);
        let lw = (s.lambda_w + env.zeta() * (s.w - p.w_max)).clamp(0.0, 1.0);
        need(close(next.lambda_b, lb) && close(next.lambda_w, lw), "multiplier update");
        need((0.0..=1.0).contains(&next.lambda_b) && (0.0..=1.0).contains(&next.lambda_w), "multiplier range");
        let r = &out.agent_rewards[k * AGENTS_PER_HUB..(k + 1) * AGENTS_PER_HUB];
        let (rb, rw) = if env.lagrange_penalty() {
            (out.reward - lb * (next.b - p.b_max), out.reward - lw * (next.w - p.w_max))
        } else {
            (out.reward, out.reward)
        };
        need(close(r[0], rb) && close(r[1], rw), "storage agent rewards");
        need(r[2] == out.reward && r[3] == out.reward, "generator agent rewards");
    }

    need(m.e_buy >= 0.0 && leq(m.e_buy, mp.e_max), "electricity purchase limit");
    need(m.e_sell >= 0.0 && leq(m.e_sell, mp.e_o_max), "electricity sale limit");
    need(m.g_buy >= 0.0 && leq(m.g_buy, mp.g_max), "gas purchase limit");
    need(m.e_buy == 0.0 || m.e_sell == 0.0, "buys and sells electricity");

    // supply recomposes into demand plus mismatch, per carrier
    let e_supply = m.e_buy - m.e_sell + slot.pv + hub_e;
    let g_supply = m.g_buy - hub_gas;
    need(close(m.e_tot, e_supply), "electricity supply recomposition");
    need(close(m.g_tot, g_supply), "gas supply recomposition");
    need(close(m.h_tot, hub_h), "heat supply recomposition");
    need(close(m.mismatch_e, (e_supply - slot.demand_e).abs()), "electricity balance");
    need(close(m.mismatch_g, (g_supply - slot.demand_g).abs()), "gas balance");
    need(close(m.mismatch_h, (hub_h - slot.demand_h).abs()), "heat balance");

    let reward = m.e_sell * slot.p_o - m.e_buy * slot.p_e - m.g_buy * slot.p_g + mp.b1
        - mp.b2 * (m.mismatch_e + m.mismatch_g + m.mismatch_h);
    need(close(out.reward, reward), "park reward");
    need(
        close(out.market_cost, m.e_buy * slot.p_e + m.g_buy * slot.p_g - m.e_sell * slot.p_o),
        "market cost",
    );
    need(out.next_state.t == state.t + 1, "slot index");
    bad
}

pub fn run() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let cases: Vec<Case> = (0..CASES).map(|_| random_case(&mut r)).collect();
    let mut failures = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        for what in check(c) {
            failures.push(format!("case {i}: {what}"));
        }
    }
    let outcome = if failures.is_empty() {
        Outcome::new(true, format!("{CASES} random steps, every identity and bound holds to {TOL:e}"))
    } else {
        Outcome::fail(format!("{} violations, first: {}", failures.len(), failures[0]))
    };
    outcome.within(start, 5.0)
}
