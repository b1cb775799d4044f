//! Storage recursions and gas-fired converters.

use crate::scalar::Scalar;

use super::{EnvError, HubParams};

/// Advances a storage level by one slot:
/// `level + eta_c * charge - discharge / eta_d`.
///
/// Callers clamp `discharge` to the available energy, so the result is only
/// negative by rounding.
pub fn storage_step<S: Scalar>(
    level: S,
    charge: S,
    discharge: S,
    eta_c: S,
    eta_d: S,
) -> Result<S, EnvError> {
    if charge < S::zero() || discharge < S::zero() {
        return Err(EnvError::NegativeFlow);
    }
    if charge > S::zero() && discharge > S::zero() {
        return Err(EnvError::SimultaneousChargeDischarge);
    }
    Ok(level + eta_c * charge - discharge / eta_d)
}

/// Electricity and heat produced by the CHP from `gas_in`, each clamped to
/// its cap.
pub fn chp_output<S: Scalar>(gas_in: S, params: &HubParams<S>) -> (S, S) {
    let gas = gas_in.max(S::zero());
    (
        (params.eta_pg * gas).min(params.e_chp_max),
        (params.eta_hg * gas).min(params.h_chp_max),
    )
}

/// Heat produced by the boiler from `gas_in`, clamped to its cap.
pub fn boiler_output<S: Scalar>(gas_in: S, params: &HubParams<S>) -> S {
    (params.eta_bg * gas_in.max(S::zero())).min(params.h_b_max)
}
