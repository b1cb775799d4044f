//! Market balancing against the utility companies and the park reward.

use crate::scalar::Scalar;

use super::{ExoSlot, MarketParams};

/// Physical flows of one hub during a slot, after all clamping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HubFlows<S: Scalar = f64> {
    pub charge_e: S,
    pub discharge_e: S,
    pub charge_h: S,
    pub discharge_h: S,
    pub gas_chp: S,
    pub gas_boiler: S,
    pub e_chp: S,
    pub h_chp: S,
    pub h_boiler: S,
}

/// Quantities traded with the utilities and the resulting supply per carrier.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarketOutcome<S: Scalar = f64> {
    pub e_buy: S,
    pub e_sell: S,
    pub g_buy: S,
    pub e_tot: S,
    pub g_tot: S,
    pub h_tot: S,
    pub mismatch_e: S,
    pub mismatch_g: S,
    pub mismatch_h: S,
}

impl<S: Scalar> MarketOutcome<S> {
    pub fn total_mismatch(&self) -> S {
        self.mismatch_e + self.mismatch_g + self.mismatch_h
    }

    /// Money paid to the utilities minus money received.
    pub fn market_cost(&self, slot: &ExoSlot<S>) -> S {
        self.e_buy * slot.p_e + self.g_buy * slot.p_g - self.e_sell * slot.p_o
    }
}

/// Buys the electricity shortfall or sells the surplus, buys the gas the
/// devices and users need, and reports the available supply per carrier.
/// Heat has no market, so any heat imbalance is left as mismatch.
pub fn balance_market<S: Scalar>(
    flows: &[HubFlows<S>],
    slot: &ExoSlot<S>,
    market: &MarketParams<S>,
) -> MarketOutcome<S> {
    let mut hub_e = S::zero();
    let mut hub_gas = S::zero();
    let mut hub_h = S::zero();
    for f in flows {
        hub_e += f.e_chp + f.discharge_e - f.charge_e;
        hub_gas += f.gas_chp + f.gas_boiler;
        hub_h += f.h_chp + f.h_boiler + f.discharge_h - f.charge_h;
    }
    let net_e = hub_e + slot.pv;
    let shortfall = slot.demand_e - net_e;
    let (e_buy, e_sell) = if shortfall > S::zero() {
        (shortfall.min(market.e_max), S::zero())
    } else {
        (S::zero(), (-shortfall).min(market.e_o_max))
    };
    let g_buy = (hub_gas + slot.demand_g).min(market.g_max);

    let e_tot = hub_e + slot.pv + e_buy - e_sell;
    let g_tot = g_buy - hub_gas;
    let h_tot = hub_h;
    MarketOutcome {
        e_buy,
        e_sell,
        g_buy,
        e_tot,
        g_tot,
        h_tot,
        mismatch_e: (e_tot - slot.demand_e).abs(),
        mismatch_g: (g_tot - slot.demand_g).abs(),
        mismatch_h: (h_tot - slot.demand_h).abs(),
    }
}

/// Shared park reward: sales revenue minus purchases plus the constant
/// utility minus the mismatch penalty summed over all three carriers.
pub fn park_reward<S: Scalar>(
    outcome: &MarketOutcome<S>,
    slot: &ExoSlot<S>,
    market: &MarketParams<S>,
) -> S {
    outcome.e_sell * slot.p_o - outcome.e_buy * slot.p_e - outcome.g_buy * slot.p_g + market.b1
        - market.b2 * outcome.total_mismatch()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot() -> ExoSlot<f64> {
        ExoSlot {
            t: 0,
            p_e: 0.5,
            p_g: 0.3,
            p_o: 0.4,
            demand_e: 0.0,
            demand_g: 0.0,
            demand_h: 0.0,
            pv: 0.0,
        }
    }

    #[test]
    fn surplus_is_sold() {
        let flows = [HubFlows {
            e_chp: 350.0,
            h_chp: 350.0,
            gas_chp: 1000.0,
            ..Default::default()
        }];
        let s = ExoSlot {
            pv: 100.0,
            demand_e: 400.0,
            demand_h: 350.0,
            ..slot()
        };
        let out = balance_market(&flows, &s, &MarketParams::default());
        assert_eq!(out.e_buy, 0.0);
        assert_eq!(out.e_sell, 50.0);
        assert_eq!(out.mismatch_e, 0.0);
        assert_eq!(out.g_buy, 1000.0);
        assert_eq!(out.mismatch_h, 0.0);
    }

    #[test]
    fn all_zero_gives_zero_outcome() {
        let out = balance_market(&[HubFlows::default()], &slot(), &MarketParams::default());
        assert_eq!(out, MarketOutcome::default());
    }

    #[test]
    fn purchase_limit_leaves_residual_mismatch() {
        let market = MarketParams {
            e_max: 1000.0,
            ..Default::default()
        };
        let s = ExoSlot {
            demand_e: 1500.0,
            pv: 200.0,
            ..slot()
        };
        let out = balance_market(&[HubFlows::default()], &s, &market);
        assert_eq!(out.e_buy, 1000.0);
        assert_eq!(out.e_sell, 0.0);
        assert_eq!(out.mismatch_e, 300.0);
    }

    #[test]
    fn reward_purchases() {
        let out = MarketOutcome {
            e_buy: 1000.0,
            g_buy: 2000.0,
            ..Default::default()
        };
        let s = ExoSlot { p_e: 0.5, p_g: 0.3, ..slot() };
        let r = park_reward(&out, &s, &MarketParams::default());
        assert!((r - (-1080.0)).abs() < 1e-9, "{r}");
    }

    #[test]
    fn reward_constant_utility_only() {
        let r = park_reward(&MarketOutcome::default(), &slot(), &MarketParams::default());
        assert_eq!(r, 20.0);
    }

    #[test]
    fn reward_heat_mismatch() {
        let out = MarketOutcome {
            mismatch_h: 100.0,
            ..Default::default()
        };
        let r = park_reward(&out, &slot(), &MarketParams::default());
        assert_eq!(r, -180.0);
    }
}
