use parkmarl::env::{
    CapacityMode, ExoSlot, ExogenousSeries, HubAction, HubParams, HubState, JointAction,
    MarketParams, ParkEnv, OBS_DIM,
};
use proptest::prelude::*;

fn fixture_series() -> ExogenousSeries<f64> {
    let rows = [
        (0.4, 0.3, 0.3, 500.0, 100.0, 400.0, 0.0),
        (0.8, 0.3, 0.5, 800.0, 100.0, 600.0, 200.0),
        (1.2, 0.3, 0.6, 900.0, 0.0, 500.0, 100.0),
        (0.5, 0.3, 0.4, 600.0, 50.0, 300.0, 0.0),
    ];
    let slots: Vec<_> = rows
        .iter()
        .enumerate()
        .map(|(t, &(p_e, p_g, p_o, demand_e, demand_g, demand_h, pv))| ExoSlot {
            t,
            p_e,
            p_g,
            p_o,
            demand_e,
            demand_g,
            demand_h,
            pv,
        })
        .collect();
    ExogenousSeries::from_slots(&slots)
}

fn fixture_env() -> ParkEnv<f64> {
    let initial = HubState {
        lambda_b: 0.5,
        lambda_w: 0.2,
        ..HubState::with_levels(2000.0, 2000.0)
    };
    ParkEnv::new(vec![HubParams::default()], MarketParams::default(), fixture_series())
        .unwrap()
        .with_initial(vec![initial])
        .unwrap()
}

fn hub(battery: usize, tank: usize, chp: usize, boiler: usize) -> JointAction {
    JointAction(vec![HubAction { battery, tank, chp, boiler }])
}

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} != {b}");
}

#[test]
fn scripted_trajectory_matches_hand_evaluation() {
    let env = fixture_env();
    // (+0.5, 0, 0, 0.5), (0, -0.3, 0.5, 0.2), (-0.8, +0.2, 1.0, 0), (-1, -1, 0, 0)
    let script = [hub(15, 10, 0, 5), hub(10, 7, 5, 2), hub(2, 12, 10, 0), hub(0, 0, 0, 0)];
    // e_buy, e_sell, g_buy, mismatch_h, reward, b, w, lambda_b, lambda_w, r_battery, market cost
    let expected = [
        (1000.0, 0.0, 725.0, 100.0, -797.5, 2490.0, 2000.0, 0.3, 0.0, -344.5, 617.5),
        (250.0, 0.0, 1350.0, 250.0, -1085.0, 2490.0, 1693.8775510204082, 0.149, 0.0, -860.01, 605.0),
        (0.0, 700.0, 2000.0, 0.0, -160.0, 1673.6734693877552, 1889.8775510204082, 0.0, 0.0, -160.0, 180.0),
        (0.0, 400.0, 50.0, 700.0, -1235.0, 653.265306122449, 869.469387755102, 0.0, 0.0, -1235.0, -145.0),
    ];
    let mut state = env.initial_state();
    for (a, e) in script.iter().zip(expected) {
        let out = env.step(&state, a).unwrap();
        close(out.market.e_buy, e.0);
        close(out.market.e_sell, e.1);
        close(out.market.g_buy, e.2);
        close(out.market.mismatch_e, 0.0);
        close(out.market.mismatch_g, 0.0);
        close(out.market.mismatch_h, e.3);
        close(out.reward, e.4);
        let h = out.next_state.hubs[0];
        close(h.b, e.5);
        close(h.w, e.6);
        close(h.lambda_b, e.7);
        close(h.lambda_w, e.8);
        close(out.agent_rewards[0], e.9);
        close(out.agent_rewards[2], e.4);
        close(out.agent_rewards[3], e.4);
        close(out.market_cost, e.10);
        state = out.next_state;
    }
    assert!(matches!(
        env.step(&state, &hub(10, 10, 0, 0)),
        Err(parkmarl::env::EnvError::EpisodeExhausted { t: 4, horizon: 4 })
    ));
}

#[test]
fn idle_on_zero_demand_earns_constant_utility() {
    let slot = ExoSlot {
        t: 0,
        p_e: 0.5,
        p_g: 0.3,
        p_o: 0.2,
        demand_e: 0.0,
        demand_g: 0.0,
        demand_h: 0.0,
        pv: 0.0,
    };
    let env = ParkEnv::new(
        vec![HubParams::default()],
        MarketParams::default(),
        ExogenousSeries::constant(3, slot),
    )
    .unwrap();
    let s0 = env.initial_state();
    let out = env.step(&s0, &JointAction::idle(1)).unwrap();
    assert_eq!(out.reward, 20.0);
    assert_eq!(out.next_state.hubs[0].b, s0.hubs[0].b);
    assert_eq!(out.next_state.hubs[0].w, s0.hubs[0].w);
}

#[test]
fn overcharging_drives_multiplier_up() {
    let env = fixture_env()
        .with_initial(vec![HubState::with_levels(4500.0, 1000.0)])
        .unwrap();
    let mut state = env.initial_state();
    let mut lambdas = vec![state.hubs[0].lambda_b];
    for _ in 0..4 {
        let out = env.step(&state, &hub(20, 10, 0, 0)).unwrap();
        assert!(out.violations >= 1);
        state = out.next_state;
        lambdas.push(state.hubs[0].lambda_b);
    }
    for w in lambdas.windows(2) {
        assert!(w[1] > w[0] || w[1] == 1.0, "{lambdas:?}");
    }
}

#[test]
fn strict_mode_clamps_charge_and_counts_attempt() {
    let env = fixture_env()
        .with_initial(vec![HubState::with_levels(3800.0, 3990.0)])
        .unwrap()
        .with_mode(CapacityMode::Strict);
    let out = env.step(&env.initial_state(), &hub(20, 11, 0, 0)).unwrap();
    assert_eq!(out.violations, 2);
    assert!(out.next_state.hubs[0].b <= 4000.0);
    assert!((out.next_state.hubs[0].b - 4000.0).abs() < 1e-9);
    assert!(out.next_state.hubs[0].w <= 4000.0);

    let calm = env.step(&env.initial_state(), &hub(11, 10, 0, 0)).unwrap();
    assert_eq!(calm.violations, 0);
}

#[test]
fn observation_layout() {
    let env = fixture_env();
    let mut state = env.initial_state();
    let obs = env.observe(&state, 0).unwrap();
    assert_eq!(obs.len(), OBS_DIM);
    assert_eq!(obs[0], 0.0);
    assert_eq!(obs[1], 1.0);
    assert_eq!(obs[2], 0.4);
    assert_eq!(obs[5], 500.0);
    assert_eq!(obs[6], 400.0);
    assert_eq!(obs[7], 100.0);
    assert_eq!(obs[9], 0.5);
    state = env.step(&state, &hub(10, 10, 7, 3)).unwrap().next_state;
    assert_eq!(env.observe(&state, 2).unwrap()[9], 0.7);
    assert_eq!(env.observe(&state, 3).unwrap()[9], 0.3);
    assert!(env.observe(&state, 4).is_err());
}

fn random_env(mode: CapacityMode) -> impl Strategy<Value = (ParkEnv<f64>, Vec<Vec<usize>>)> {
    let slot = (
        0.05f64..2.0,
        0.05f64..1.0,
        0.0f64..1.0,
        0.0f64..3000.0,
        0.0f64..800.0,
        0.0f64..2000.0,
        0.0f64..1500.0,
    );
    (
        prop::collection::vec(slot, 6),
        0.0f64..4000.0,
        0.0f64..4000.0,
        prop::collection::vec(prop::collection::vec(0usize..21, 8), 6),
        prop::bool::ANY,
    )
        .prop_map(move |(rows, b0, w0, acts, two_hubs)| {
            let slots: Vec<_> = rows
                .iter()
                .enumerate()
                .map(|(t, r)| ExoSlot {
                    t,
                    p_e: r.0,
                    p_g: r.1,
                    p_o: r.0 * r.2,
                    demand_e: r.3,
                    demand_g: r.4,
                    demand_h: r.5,
                    pv: r.6,
                })
                .collect();
            let hubs = if two_hubs { 2 } else { 1 };
            let market = MarketParams {
                e_max: 2500.0,
                g_max: 3000.0,
                e_o_max: 800.0,
                ..Default::default()
            };
            let env = ParkEnv::new(
                vec![HubParams::default(); hubs],
                market,
                ExogenousSeries::from_slots(&slots),
            )
            .unwrap()
            .with_initial(vec![HubState::with_levels(b0, w0); hubs])
            .unwrap()
            .with_mode(mode);
            let acts = acts
                .into_iter()
                .map(|a| {
                    let mut v = Vec::new();
                    for k in 0..hubs {
                        let o = 4 * k;
                        v.extend([a[o], a[o + 1], a[o + 2] % 11, a[o + 3] % 11]);
                    }
                    v
                })
                .collect();
            (env, acts)
        })
}

proptest! {
    #[test]
    fn storage_never_negative_and_markets_bounded(
        (env, acts) in random_env(CapacityMode::Soft)
    ) {
        let m = env.market().clone();
        let mut s = env.initial_state();
        for a in &acts {
            let out = env.step(&s, &JointAction::from_agent_indices(a).unwrap()).unwrap();
            prop_assert!(out.market.e_buy >= 0.0 && out.market.e_buy <= m.e_max);
            prop_assert!(out.market.e_sell >= 0.0 && out.market.e_sell <= m.e_o_max);
            prop_assert!(out.market.g_buy >= 0.0 && out.market.g_buy <= m.g_max);
            prop_assert_eq!(out.market.e_buy * out.market.e_sell, 0.0);
            for h in &out.next_state.hubs {
                prop_assert!(h.b >= 0.0 && h.w >= 0.0);
                prop_assert!((0.0..=1.0).contains(&h.lambda_b));
                prop_assert!((0.0..=1.0).contains(&h.lambda_w));
            }
            // determinism
            let again = env.step(&s, &JointAction::from_agent_indices(a).unwrap()).unwrap();
            prop_assert_eq!(&out, &again);
            s = out.next_state;
        }
    }

    #[test]
    fn strict_mode_respects_capacity((env, acts) in random_env(CapacityMode::Strict)) {
        let caps = env.hub_params()[0].b_max;
        let mut s = env.initial_state();
        for a in &acts {
            let before = s.hubs.clone();
            let out = env.step(&s, &JointAction::from_agent_indices(a).unwrap()).unwrap();
            for (h, b) in out.next_state.hubs.iter().zip(&before) {
                prop_assert!(h.b <= caps.max(b.b) + 1e-9);
                prop_assert!(h.w <= caps.max(b.w) + 1e-9);
            }
            s = out.next_state;
        }
    }

    #[test]
    fn multiplier_monotone_in_sign_of_violation(
        lambda in 0.0f64..=1.0,
        over in 1.0f64..5000.0,
        zeta in 1e-6f64..1e-2,
    ) {
        use parkmarl::env::update_lagrange;
        prop_assert!(update_lagrange(lambda, 4000.0 + over, 4000.0, zeta) >= lambda);
        prop_assert!(update_lagrange(lambda, 4000.0 - over, 4000.0, zeta) <= lambda);
    }
}
