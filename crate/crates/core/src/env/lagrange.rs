//! Lagrange-multiplier bookkeeping for the storage capacity constraints.

use crate::scalar::Scalar;

/// `0` below zero, `1` above one, identity in between.
pub fn clip01<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        S::zero()
    } else if x > S::one() {
        S::one()
    } else {
        x
    }
}

/// Park reward minus `lambda * (level - cap)`. Below the cap the term is a
/// bonus.
pub fn penalized_reward<S: Scalar>(park_reward: S, level: S, cap: S, lambda: S) -> S {
    park_reward - lambda * (level - cap)
}

/// Projected ascent on the multiplier: `clip(lambda + zeta * (level - cap), 0, 1)`.
pub fn update_lagrange<S: Scalar>(lambda: S, level: S, cap: S, zeta: S) -> S {
    clip01(lambda + zeta * (level - cap))
}
