//! Estimation factors for varying spot-check probability, three-valued
//! spot-check variables, and early-stopping arithmetic.
//!
//! *Bias model.* When the true check probability `ω̃` of a trial is only
//! known to lie in `[ω', ω]`, the extremal factors take the min-of-two form
//!
//! ```text
//! F'_{β,t}(x) = min( (1−(1−ω')t e^{−βx})/ω', (1−(1−ω)t e^{−βx})/ω ),
//! ```
//!
//! concave in `x` as a minimum of concave functions. Alternatively an
//! `ω`-optimal factor `T₀` divided by `f_max = max(1 + δ_max(t−1)/ω, 1)` is
//! valid for the whole interval and near-optimal for small `δ_max = ω − ω'`.
//!
//! *Three-valued checks.* With `Y ∈ {0, 1, 2}` (check / use / discard) and
//! the discard factor fixed at `t₂ = 1`, the extremal family reduces to the
//! two-valued one at effective check probability `ω_eff = ω₀/(ω₀+ω₁)`;
//! `Y = 2` trials contribute `ln t₂ = 0` and stay out of `C_n`.
//!
//! *Early stopping.* Stopping once `m` unchecked trials are collected is
//! modeled by setting `ωⱼ = 1, Tⱼ = 1` for all later trials; a Hoeffding
//! argument sizes the trial budget so failure (fewer than `m` unchecked
//! trials among `n`) has probability at most `e^{−γ}`.

use serde::{Deserialize, Serialize};

use crate::core::{CoreError, CLAMP_TOL};

/// Check-probability interval `[ω', ω]` for the bias model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    /// Nominal (maximal) check probability `ω`.
    pub omega_hi: f64,
    /// Minimal check probability `ω'`.
    pub omega_lo: f64,
}

impl BiasModel {
    pub fn new(omega_hi: f64, omega_lo: f64) -> Result<Self, CoreError> {
        if !(omega_lo > 0.0 && omega_lo <= omega_hi && omega_hi < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "need 0 < ω' ≤ ω < 1, got ω' = {omega_lo}, ω = {omega_hi}"
            )));
        }
        Ok(Self { omega_hi, omega_lo })
    }

    pub fn delta_max(&self) -> f64 {
        self.omega_hi - self.omega_lo
    }
}

/// Choice probabilities for three-valued spot-checking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiChoiceModel {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl MultiChoiceModel {
    pub fn new(w0: f64, w1: f64, w2: f64) -> Result<Self, CoreError> {
        if !(w0 > 0.0 && w1 > 0.0 && w2 >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "need w0 > 0, w1 > 0, w2 ≥ 0, got ({w0}, {w1}, {w2})"
            )));
        }
        if (w0 + w1 + w2 - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "choice probabilities must sum to 1, got {}",
                w0 + w1 + w2
            )));
        }
        Ok(Self { w0, w1, w2 })
    }
}

/// Evaluates the min-form extremal factor for the bias model.
///
/// `y ≠ 0` returns `t`; `y = 0` returns the min of the two concave branches,
/// clamped at 0 per the core policy (values below `−1e−12` are an error).
pub fn biased_ef_value(
    beta: f64,
    t: f64,
    bm: &BiasModel,
    x: f64,
    y: u8,
) -> Result<f64, CoreError> {
    if !(t >= 0.0) || t > 1.0 / (1.0 - bm.omega_lo) * (1.0 + 1e-12) {
        return Err(CoreError::InvalidParameter(format!(
            "t must lie in [0, 1/(1−ω')], got t = {t} with ω' = {}",
            bm.omega_lo
        )));
    }
    if y != 0 {
        return Ok(t);
    }
    let e = t * (-beta * x).exp();
    let lo = (1.0 - (1.0 - bm.omega_lo) * e) / bm.omega_lo;
    let hi = (1.0 - (1.0 - bm.omega_hi) * e) / bm.omega_hi;
    let raw = lo.min(hi);
    if raw < -CLAMP_TOL {
        return Err(CoreError::NonPositiveFactor { value: raw, x });
    }
    Ok(raw.max(0.0))
}

/// `f_max = max(1 + δ_max·(t−1)/ω, 1)`: dividing an `ω`-optimal extremal
/// factor by `f_max` yields a valid factor for the bias model.
pub fn bias_correction(t: f64, omega: f64, delta_max: f64) -> f64 {
    (1.0 + delta_max * (t - 1.0) / omega).max(1.0)
}

/// Reduces a three-valued model to the two-valued extremal family:
/// `(ω_eff, t₂) = (w0/(w0+w1), 1)`.
pub fn multi_choice_reduce(mc: &MultiChoiceModel) -> (f64, f64) {
    (mc.w0 / (mc.w0 + mc.w1), 1.0)
}

/// Direct evaluation of the three-valued extremal factor with `t₂ = 1`:
/// `y = 0 → (1 − w1·t1·e^{−βx} − w2)/w0`, `y = 1 → t1`, `y = 2 → 1`.
pub fn multi_choice_ef_value(
    beta: f64,
    t1: f64,
    mc: &MultiChoiceModel,
    x: f64,
    y: u8,
) -> Result<f64, CoreError> {
    match y {
        0 => {
            let raw = (1.0 - mc.w1 * t1 * (-beta * x).exp() - mc.w2) / mc.w0;
            if raw < -CLAMP_TOL {
                return Err(CoreError::NonPositiveFactor { value: raw, x });
            }
            Ok(raw.max(0.0))
        }
        1 => Ok(t1),
        _ => Ok(1.0),
    }
}

/// Smallest trial budget `n` such that collecting `m` unchecked trials
/// fails with probability at most `e^{−γ}`.
pub fn early_stop_n(m: u64, omega: f64, gamma: f64) -> u64 {
    let mf = m as f64;
    let q = 1.0 - omega;
    let corr = (gamma + (gamma * gamma + 8.0 * mf * q * gamma).sqrt()) / (4.0 * mf * q);
    (mf / q * (1.0 + corr)).ceil() as u64
}

/// Coverage guarantee conditional on the early-stopping protocol
/// succeeding: the miss probability is at most `ε/(1 − e^{−γ})`.
pub fn conditional_coverage(epsilon: f64, gamma: f64) -> f64 {
    epsilon / (1.0 - (-gamma).exp())
}
