//! Baseline spot-checking bounds for head-to-head comparison: the
//! hypothesis-test-inversion bound of Gočanin et al. and the Serfling bound.
//!
//! *Gočanin.* For two-valued `X ∈ {x_lb, x_ub}` with fixed per-trial means,
//! inverting the family of likelihood tests gives the mean lower bound
//! `θ_lb = f(p_obs)·(x_ub−x_lb) + x_lb` with
//!
//! ```text
//! f(p) = inf{ q ∈ [0, p] : (1−ω+ω·e^{−D(p‖q)})ⁿ ≥ ε },
//! ```
//!
//! `D` the binary KL divergence. The sum bound charges every unchecked
//! trial the worst case: `S_lb,G = n·θ_lb − (n−C_n)·θ_max`.
//!
//! *Serfling.* Sampling-without-replacement concentration yields
//!
//! ```text
//! S_lb,Serf = ((1−ω)/ω)·Σ(1−Yᵢ)Xᵢ − √(n(1−ω+1/n)·ln(1/ε)/(2ω))·(x_ub−x_lb).
//! ```
//!
//! Note the Serfling bound estimates `Σ Y·X`, not `Σ Y·E(X|Past)`; it is
//! included for comparison only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{ConfidenceReport, TrialRecord};
use crate::numeric::smallest_satisfying;

/// Search ceiling shared with `optimizer::min_trials`.
pub const MIN_TRIALS_CEILING: u64 = 1_000_000_000_000;

const BINARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("KL divergence undefined: q = {q} with p = {p}")]
    DomainError { p: f64, q: f64 },
    #[error("observed x = {x} at record {index} is not in the declared two-element set")]
    NonBinaryValue { index: u64, x: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid record at index {index}: {reason}")]
    InvalidRecord { index: u64, reason: String },
}

/// The two-element value set `{x_lb, x_ub}` and the worst-case unchecked
/// mean `θ_max` used by the Gočanin sum bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryRange {
    pub x_lb: f64,
    pub x_ub: f64,
    pub theta_max: f64,
}

impl BinaryRange {
    pub fn new(x_lb: f64, x_ub: f64, theta_max: f64) -> Result<Self, BaselineError> {
        if !(x_lb < x_ub) {
            return Err(BaselineError::InvalidParameter(format!(
                "need x_lb < x_ub, got [{x_lb}, {x_ub}]"
            )));
        }
        if !(theta_max >= x_lb && theta_max <= x_ub) {
            return Err(BaselineError::InvalidParameter(format!(
                "theta_max = {theta_max} outside [{x_lb}, {x_ub}]"
            )));
        }
        Ok(Self { x_lb, x_ub, theta_max })
    }
}

/// Binary KL divergence `D(p‖q) = p·ln(p/q) + (1−p)·ln((1−p)/(1−q))`,
/// with `0·ln 0 = 0`.
pub fn kl_div(p: f64, q: f64) -> Result<f64, BaselineError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BaselineError::InvalidParameter(format!(
            "p must lie in [0,1], got {p}"
        )));
    }
    if q <= 0.0 || q >= 1.0 {
        if p == q {
            return Ok(0.0);
        }
        return Err(BaselineError::DomainError { p, q });
    }
    let mut d = 0.0;
    if p > 0.0 {
        d += p * (p / q).ln();
    }
    if p < 1.0 {
        d += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    Ok(d.max(0.0))
}

/// The divergence level set `d = −ln((ε^{1/n} − (1−ω))/ω)`, or `None` on
/// the boundary `ε ≤ (1−ω)ⁿ` where the test never rejects.
fn divergence_budget(omega: f64, epsilon: f64, n: u64) -> Option<f64> {
    let root = (epsilon.ln() / n as f64).exp();
    let arg = (root - (1.0 - omega)) / omega;
    if arg <= 0.0 {
        return None;
    }
    Some(-arg.ln())
}

/// `f(p) = inf{q ∈ [0,p] : D(p‖q) ≤ d}` by 53 fixed bisection steps on the
/// monotone map `q ↦ D(p‖q)`.
fn f_of_p(p: f64, d: f64) -> f64 {
    if p <= 0.0 || d <= 0.0 {
        return if d <= 0.0 { p } else { 0.0 };
    }
    let (mut lo, mut hi) = (0.0f64, p);
    for _ in 0..53 {
        let mid = 0.5 * (lo + hi);
        // D(p‖q) decreases in q on (0, p]; mid ∈ (0, p) so kl_div is defined
        if kl_div(p, mid).unwrap() > d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Mean lower bound `θ_lb = f(p_obs)·(x_ub−x_lb) + x_lb`; returns `x_lb`
/// when `ε ≤ (1−ω)ⁿ` or `p_obs = 0`.
pub fn gocanin_theta_lb(
    p_obs: f64,
    br: &BinaryRange,
    omega: f64,
    epsilon: f64,
    n: u64,
) -> f64 {
    let Some(d) = divergence_budget(omega, epsilon, n) else {
        return br.x_lb;
    };
    if p_obs <= 0.0 {
        return br.x_lb;
    }
    f_of_p(p_obs, d) * (br.x_ub - br.x_lb) + br.x_lb
}

/// The Gočanin sum bound `S_lb,G = n·θ_lb − (n−C_n)·θ_max`.
///
/// `beta` and `log_ef_sum` in the report are not meaningful for this method
/// and are set to 0.
pub fn gocanin_bound(
    records: &[TrialRecord],
    br: &BinaryRange,
    omega: f64,
    epsilon: f64,
) -> Result<ConfidenceReport, BaselineError> {
    let n = records.len() as u64;
    let mut c_n = 0u64;
    let mut checked = 0u64;
    let mut hits = 0u64;
    for rec in records {
        if rec.y != 0 {
            c_n += 1;
            continue;
        }
        let x = rec.x.ok_or(BaselineError::InvalidRecord {
            index: rec.i,
            reason: "spot-checked trial (y = 0) is missing x".into(),
        })?;
        checked += 1;
        if (x - br.x_ub).abs() <= BINARY_TOL {
            hits += 1;
        } else if (x - br.x_lb).abs() > BINARY_TOL {
            return Err(BaselineError::NonBinaryValue { index: rec.i, x });
        }
    }
    // θ̄_obs = x_lb when nothing was spot-checked
    let p_obs = if checked == 0 { 0.0 } else { hits as f64 / checked as f64 };
    let theta_lb = gocanin_theta_lb(p_obs, br, omega, epsilon, n);
    let s_lb = n as f64 * theta_lb - (n - c_n) as f64 * br.theta_max;
    let average_lb = if c_n == 0 { br.x_lb } else { s_lb / c_n as f64 };
    Ok(ConfidenceReport {
        s_lb,
        c_n,
        average_lb,
        log_ef_sum: 0.0,
        beta: 0.0,
        epsilon,
    })
}

/// Outcome of the Gočanin minimum-trials analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GocaninTrials {
    Finite(u64),
    /// No finite `n` achieves the gap threshold: `δ_th ≤ (ω/(1−ω))(θ_max−θ)`.
    Divergent,
}

/// Minimal `n` such that the expected Gočanin bound is within `n(1−ω)δ_th`
/// of the target: `f_n(p_θ) ≥ ((1−ω)(θ−δ_th) + ω·θ_max − x_lb)/(x_ub−x_lb)`.
pub fn gocanin_min_trials(
    theta: f64,
    br: &BinaryRange,
    omega: f64,
    epsilon: f64,
    delta_th: f64,
) -> Result<GocaninTrials, BaselineError> {
    if !(theta >= br.x_lb && theta <= br.x_ub) {
        return Err(BaselineError::InvalidParameter(format!(
            "theta = {theta} outside [{}, {}]",
            br.x_lb, br.x_ub
        )));
    }
    let range = br.x_ub - br.x_lb;
    let p_theta = (theta - br.x_lb) / range;
    let rhs = ((1.0 - omega) * (theta - delta_th) + omega * br.theta_max - br.x_lb) / range;
    // f(p) ≤ p makes the target unreachable when rhs ≥ p_θ
    if rhs >= p_theta {
        return Ok(GocaninTrials::Divergent);
    }
    let ok = |n: u64| {
        let Some(d) = divergence_budget(omega, epsilon, n) else {
            return false;
        };
        f_of_p(p_theta, d) >= rhs
    };
    match smallest_satisfying(ok, 1, MIN_TRIALS_CEILING) {
        Some(n) => Ok(GocaninTrials::Finite(n)),
        None => Ok(GocaninTrials::Divergent),
    }
}

/// The Serfling bound on `Σ Y·X` over unchecked trials.
///
/// `ε = 1` is accepted (zero penalty). `beta`/`log_ef_sum` are set to 0 as
/// for [`gocanin_bound`].
pub fn serfling_bound(
    records: &[TrialRecord],
    x_lb: f64,
    x_ub: f64,
    omega: f64,
    epsilon: f64,
) -> Result<ConfidenceReport, BaselineError> {
    if !(x_lb < x_ub) {
        return Err(BaselineError::InvalidParameter(format!(
            "need x_lb < x_ub, got [{x_lb}, {x_ub}]"
        )));
    }
    let n = records.len() as u64;
    let mut c_n = 0u64;
    let mut checked_sum = 0.0;
    for rec in records {
        if rec.y != 0 {
            c_n += 1;
            continue;
        }
        let x = rec.x.ok_or(BaselineError::InvalidRecord {
            index: rec.i,
            reason: "spot-checked trial (y = 0) is missing x".into(),
        })?;
        if x < x_lb - BINARY_TOL || x > x_ub + BINARY_TOL {
            return Err(BaselineError::InvalidRecord {
                index: rec.i,
                reason: format!("x = {x} outside the declared range [{x_lb}, {x_ub}]"),
            });
        }
        checked_sum += x;
    }
    let penalty = serfling_penalty(n, x_lb, x_ub, omega, epsilon);
    let s_lb = (1.0 - omega) / omega * checked_sum - penalty;
    let average_lb = if c_n == 0 { x_lb } else { s_lb / c_n as f64 };
    Ok(ConfidenceReport {
        s_lb,
        c_n,
        average_lb,
        log_ef_sum: 0.0,
        beta: 0.0,
        epsilon,
    })
}

/// The subtracted Serfling term `√(n(1−ω+1/n)ln(1/ε)/(2ω))·(x_ub−x_lb)`,
/// which is also exactly the expected gap under i.i.d. trials.
pub fn serfling_penalty(n: u64, x_lb: f64, x_ub: f64, omega: f64, epsilon: f64) -> f64 {
    let nf = n as f64;
    (nf * (1.0 - omega + 1.0 / nf) * (1.0 / epsilon).ln() / (2.0 * omega)).sqrt()
        * (x_ub - x_lb)
}

/// Minimal `n` with penalty ≤ `n(1−ω)δ_th` (clamped at the shared search
/// ceiling, which only binds for vanishing `δ_th`).
pub fn serfling_min_trials(
    theta: f64,
    x_lb: f64,
    x_ub: f64,
    omega: f64,
    epsilon: f64,
    delta_th: f64,
) -> Result<u64, BaselineError> {
    if !(delta_th > 0.0) {
        return Err(BaselineError::InvalidParameter(format!(
            "delta_th must be positive, got {delta_th}"
        )));
    }
    if !(theta >= x_lb && theta <= x_ub) {
        return Err(BaselineError::InvalidParameter(format!(
            "theta = {theta} outside [{x_lb}, {x_ub}]"
        )));
    }
    let ok = |n: u64| {
        serfling_penalty(n, x_lb, x_ub, omega, epsilon) <= n as f64 * (1.0 - omega) * delta_th
    };
    Ok(smallest_satisfying(ok, 1, MIN_TRIALS_CEILING).unwrap_or(MIN_TRIALS_CEILING))
}
