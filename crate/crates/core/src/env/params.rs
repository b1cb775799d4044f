use crate::scalar::{lit, Scalar};

use super::EnvError;

/// Device constants of one energy hub. All energies in kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct HubParams<S: Scalar = f64> {
    /// Battery charge efficiency.
    pub eta_ce: S,
    /// Battery discharge efficiency.
    pub eta_de: S,
    /// Tank charge efficiency.
    pub eta_ch: S,
    /// Tank discharge efficiency.
    pub eta_dh: S,
    /// CHP gas-to-electricity efficiency.
    pub eta_pg: S,
    /// CHP gas-to-heat efficiency.
    pub eta_hg: S,
    /// Boiler gas-to-heat efficiency.
    pub eta_bg: S,
    pub b_max: S,
    pub w_max: S,
    pub c_e_max: S,
    pub d_e_max: S,
    pub c_h_max: S,
    pub d_h_max: S,
    pub e_chp_max: S,
    pub h_chp_max: S,
    pub h_b_max: S,
}

impl<S: Scalar> Default for HubParams<S> {
    /// 98% storage efficiencies, 35%/35% CHP, 80% boiler, 4 MWh storages
    /// with 1 MWh per-slot rate limits, 2 MWh of CHP gas and 1 MWh of
    /// boiler heat per slot.
    fn default() -> Self {
        Self {
            eta_ce: lit(0.98),
            eta_de: lit(0.98),
            eta_ch: lit(0.98),
            eta_dh: lit(0.98),
            eta_pg: lit(0.35),
            eta_hg: lit(0.35),
            eta_bg: lit(0.8),
            b_max: lit(4000.0),
            w_max: lit(4000.0),
            c_e_max: lit(1000.0),
            d_e_max: lit(1000.0),
            c_h_max: lit(1000.0),
            d_h_max: lit(1000.0),
            e_chp_max: lit(700.0),
            h_chp_max: lit(700.0),
            h_b_max: lit(1000.0),
        }
    }
}

impl<S: Scalar> HubParams<S> {
    /// Gas input that drives the CHP to both output caps at once.
    pub fn chp_gas_max(&self) -> S {
        self.e_chp_max / self.eta_pg
    }

    /// Gas input that drives the boiler to its heat cap.
    pub fn boiler_gas_max(&self) -> S {
        self.h_b_max / self.eta_bg
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let effs = [
            ("eta_ce", self.eta_ce),
            ("eta_de", self.eta_de),
            ("eta_ch", self.eta_ch),
            ("eta_dh", self.eta_dh),
            ("eta_pg", self.eta_pg),
            ("eta_hg", self.eta_hg),
            ("eta_bg", self.eta_bg),
        ];
        for (name, v) in effs {
            if !(v > S::zero() && v <= S::one()) {
                return Err(EnvError::InvalidParams(format!(
                    "{name} = {v} must lie in (0, 1]"
                )));
            }
        }
        let caps = [
            ("b_max", self.b_max),
            ("w_max", self.w_max),
            ("c_e_max", self.c_e_max),
            ("d_e_max", self.d_e_max),
            ("c_h_max", self.c_h_max),
            ("d_h_max", self.d_h_max),
            ("e_chp_max", self.e_chp_max),
            ("h_chp_max", self.h_chp_max),
            ("h_b_max", self.h_b_max),
        ];
        for (name, v) in caps {
            if !(v.is_finite() && v >= S::zero()) {
                return Err(EnvError::InvalidParams(format!(
                    "{name} = {v} must be finite and non-negative"
                )));
            }
        }
        let gas_e = self.e_chp_max / self.eta_pg;
        let gas_h = self.h_chp_max / self.eta_hg;
        if (gas_e - gas_h).abs() > lit::<S>(1e-9) * S::one().max(gas_e.abs()) {
            return Err(EnvError::InvalidParams(format!(
                "CHP caps imply different gas limits: e_chp_max/eta_pg = {gas_e}, h_chp_max/eta_hg = {gas_h}"
            )));
        }
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> HubParams<T> {
        let c = |x: S| T::lit(x.to_f64_lossy());
        HubParams {
            eta_ce: c(self.eta_ce),
            eta_de: c(self.eta_de),
            eta_ch: c(self.eta_ch),
            eta_dh: c(self.eta_dh),
            eta_pg: c(self.eta_pg),
            eta_hg: c(self.eta_hg),
            eta_bg: c(self.eta_bg),
            b_max: c(self.b_max),
            w_max: c(self.w_max),
            c_e_max: c(self.c_e_max),
            d_e_max: c(self.d_e_max),
            c_h_max: c(self.c_h_max),
            d_h_max: c(self.d_h_max),
            e_chp_max: c(self.e_chp_max),
            h_chp_max: c(self.h_chp_max),
            h_b_max: c(self.h_b_max),
        }
    }
}

/// Utility-company trading limits and reward utility coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams<S: Scalar = f64> {
    pub e_max: S,
    pub g_max: S,
    pub e_o_max: S,
    /// Constant utility per slot.
    pub b1: S,
    /// Penalty per kWh of supply/demand mismatch.
    pub b2: S,
}

impl<S: Scalar> Default for MarketParams<S> {
    fn default() -> Self {
        Self {
            e_max: lit(10_000.0),
            g_max: lit(20_000.0),
            e_o_max: lit(5_000.0),
            b1: lit(20.0),
            b2: lit(2.0),
        }
    }
}

impl<S: Scalar> MarketParams<S> {
    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, v) in [
            ("e_max", self.e_max),
            ("g_max", self.g_max),
            ("e_o_max", self.e_o_max),
            ("b2", self.b2),
        ] {
            if !(v.is_finite() && v >= S::zero()) {
                return Err(EnvError::InvalidParams(format!(
                    "{name} = {v} must be finite and non-negative"
                )));
            }
        }
        if !self.b1.is_finite() {
            return Err(EnvError::InvalidParams("b1 must be finite".into()));
        }
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> MarketParams<T> {
        let c = |x: S| T::lit(x.to_f64_lossy());
        MarketParams {
            e_max: c(self.e_max),
            g_max: c(self.g_max),
            e_o_max: c(self.e_o_max),
            b1: c(self.b1),
            b2: c(self.b2),
        }
    }
}
