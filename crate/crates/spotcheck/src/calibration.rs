//! Moment estimation from calibration trials, regularization, and planning
//! of calibration sample sizes.
//!
//! Calibration produces estimates `(θ_e, σ_e²)` feeding the closed-form
//! constructions in [`crate::analytic`]. Two estimators are provided: the
//! usual pooled sample mean/variance, and the split estimator whose
//! performance bounds are proved in the paper trail — `θ_e` from the first
//! `n_a` samples and `σ_e² = Σᵢ(X₂ᵢ − X₂ᵢ₋₁)²/(2n_v)` from the next `2n_v`.
//!
//! Regularization guards against small-sample pathologies:
//!
//! * a variance floor `σ̃² = σ_e² + r²` keeps the power `β̃` finite, and
//! * a mean cap `θ̃ = min(θ_e, θ_u)` with `θ_u = ω/(4β_r)` keeps
//!   `β̃·θ̃ ≤ ω/4`, which pins the penalty factor `B(β̃θ̃) ≤ 2`.
//!
//! The planner evaluates the full finite-`n_a`,`n_v` expected-gap bound and
//! walks a doubling ladder until the bound is within a requested relative
//! inflation of its infinite-calibration limit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CalibError {
    #[error("need at least {needed} calibration samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// `θ_u < theta_hint` at the given `(n, ω)`: the regularized mean cap
    /// would truncate the anticipated mean. `min_n_omega` is the smallest
    /// `n·ω` restoring `θ_u ≥ theta_hint`.
    #[error("theta_u < theta_hint at this (n, ω); need n·ω ≥ {min_n_omega:.3}")]
    InfeasiblePlan { min_n_omega: f64 },
    #[error("no (n_a, n_v) on the ladder up to 2^20 meets max_inflation = {max_inflation}")]
    LadderExhausted { max_inflation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Pooled,
    Split { n_a: u64, n_v: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub theta_e: f64,
    pub sigma2_e: f64,
    pub n_used: u64,
    pub estimator: Estimator,
}

/// Output of [`regularize`]; feeds `β̃`, `θ̃` into bound construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedMoments {
    pub theta_tilde: f64,
    pub sigma2_tilde: f64,
    pub beta_tilde: f64,
    pub theta_u: f64,
    pub r2: f64,
}

/// Planned calibration sizes from [`plan_calibration`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub n_a: u64,
    pub n_v: u64,
    pub r2: f64,
    /// The planning bound at `(n_a, n_v)`.
    pub bound: f64,
    /// The `n_a, n_v → ∞` limit of the planning bound.
    pub limit_bound: f64,
    /// True when `m₄` was defaulted to `σ⁴_upper`, which is
    /// conservative-by-construction only for two-point distributions.
    pub conservative_m4: bool,
}

/// Sample mean and unbiased sample variance (divisor `n_c − 1`).
pub fn estimate_pooled(samples: &[f64]) -> Result<CalibrationResult, CalibError> {
    let n = samples.len();
    if n < 2 {
        return Err(CalibError::TooFewSamples { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    Ok(CalibrationResult {
        theta_e: mean,
        sigma2_e: ss / (n as f64 - 1.0),
        n_used: n as u64,
        estimator: Estimator::Pooled,
    })
}

/// Split estimator: `θ_e` from the first `n_a` samples,
/// `σ_e² = Σᵢ(X₂ᵢ − X₂ᵢ₋₁)²/(2n_v)` from the following `2n_v` samples,
/// sliced deterministically in input order.
pub fn estimate_split(
    samples: &[f64],
    n_a: usize,
    n_v: usize,
) -> Result<CalibrationResult, CalibError> {
    if n_a < 1 || n_v < 1 {
        return Err(CalibError::InvalidParameter(format!(
            "n_a and n_v must be ≥ 1, got n_a = {n_a}, n_v = {n_v}"
        )));
    }
    let needed = n_a + 2 * n_v;
    if samples.len() < needed {
        return Err(CalibError::TooFewSamples { needed, got: samples.len() });
    }
    let theta_e = samples[..n_a].iter().sum::<f64>() / n_a as f64;
    let pairs = &samples[n_a..n_a + 2 * n_v];
    let ss = pairs
        .chunks_exact(2)
        .map(|p| (p[1] - p[0]) * (p[1] - p[0]))
        .sum::<f64>();
    Ok(CalibrationResult {
        theta_e,
        sigma2_e: ss / (2.0 * n_v as f64),
        n_used: needed as u64,
        estimator: Estimator::Split { n_a: n_a as u64, n_v: n_v as u64 },
    })
}

/// `θ_u = (1/4)·√(r²·n·ω·(1−ω)/(2 ln(1/ε)))`, the mean cap guaranteeing
/// `B(β̃·θ_u) ≤ 2`.
pub fn theta_cap(r2: f64, omega: f64, epsilon: f64, n: u64) -> f64 {
    0.25 * (r2 * n as f64 * omega * (1.0 - omega) / (2.0 * (1.0 / epsilon).ln())).sqrt()
}

/// Applies the variance floor and mean cap to raw calibration estimates.
///
/// Negative `θ_e` (possible with noisy shifted data) is clamped to 0 so the
/// resulting construction stays inside the `θ_e ≥ 0` contract.
pub fn regularize(
    cr: &CalibrationResult,
    r2: f64,
    omega: f64,
    epsilon: f64,
    n: u64,
) -> Result<RegularizedMoments, CalibError> {
    if !(r2 > 0.0) {
        return Err(CalibError::InvalidParameter(format!("r2 must be positive, got {r2}")));
    }
    let sigma2_tilde = cr.sigma2_e + r2;
    let beta_tilde = (2.0 * omega * (1.0 / epsilon).ln()
        / (sigma2_tilde * n as f64 * (1.0 - omega)))
        .sqrt();
    let theta_u = theta_cap(r2, omega, epsilon, n);
    let theta_tilde = cr.theta_e.max(0.0).min(theta_u);
    Ok(RegularizedMoments { theta_tilde, sigma2_tilde, beta_tilde, theta_u, r2 })
}

/// `c(n_v) = (m₄ + σ⁴)/(2·n_v·r²·(σ² + r²))`, the variance-estimate
/// fluctuation coefficient.
pub fn c_coefficient(m4: f64, sigma2: f64, r2: f64, n_v: u64) -> f64 {
    (m4 + sigma2 * sigma2) / (2.0 * n_v as f64 * r2 * (sigma2 + r2))
}

/// Evaluates the full planning bound on `E(Δ̃)`, `Δ̃ = √(ω/n)·E(Δ)`, for
/// the split estimator with regularization `r²` at calibration sizes
/// `(n_a, n_v)`, under anticipated true moments `(θ, σ², m₃,abs, m₄)`.
#[allow(clippy::too_many_arguments)]
pub fn tilde_delta_bound(
    theta: f64,
    sigma2: f64,
    m3_abs: f64,
    m4: f64,
    r2: f64,
    omega: f64,
    epsilon: f64,
    n: u64,
    n_a: u64,
    n_v: u64,
) -> f64 {
    let l = (1.0 / epsilon).ln();
    let v = sigma2 + r2;
    let pref = (2.0 * (1.0 - omega) * l).sqrt() * v.sqrt();
    let c = c_coefficient(m4, sigma2, r2, n_v);
    let na = n_a as f64;
    let lead = 1.0 - r2 / (2.0 * v);
    let mid = 0.5 * (1.0 - r2 / v) * (1.0 / na + c / (2.0 * na) + 0.5 * c);
    let tail = 2.0 * (1.0 / (omega * n as f64)).sqrt() * (2.0 * l / (1.0 - omega)).sqrt()
        / (v * v.sqrt())
        * (theta * sigma2 + theta * sigma2 / na + m3_abs / (na * na))
        * (1.0 + c);
    pref * (lead + mid + tail)
}

/// The `n_a, n_v → ∞` limit of [`tilde_delta_bound`].
pub fn tilde_delta_limit(
    theta: f64,
    sigma2: f64,
    r2: f64,
    omega: f64,
    epsilon: f64,
    n: u64,
) -> f64 {
    let l = (1.0 / epsilon).ln();
    let v = sigma2 + r2;
    let pref = (2.0 * (1.0 - omega) * l).sqrt() * v.sqrt();
    let lead = 1.0 - r2 / (2.0 * v);
    let tail = 2.0 * (1.0 / (omega * n as f64)).sqrt() * (2.0 * l / (1.0 - omega)).sqrt()
        / (v * v.sqrt())
        * theta
        * sigma2;
    pref * (lead + tail)
}

/// Picks `(n_a, n_v, r²)` so the planning bound is within `max_inflation`
/// relative of its infinite-calibration limit.
///
/// `sigma2_range = (σ²_lower, σ²_upper)` brackets the anticipated variance;
/// `r² = σ²_lower/4` by the regularization recommendation, and the bound is
/// evaluated pessimistically at `σ² = σ²_upper`. Missing `m₄` defaults to
/// `σ⁴_upper` (the value for a symmetric two-point distribution — flagged
/// as non-conservative elsewhere); missing `m₃,abs` defaults to the
/// Cauchy–Schwarz ceiling `√m₄·σ_upper`.
#[allow(clippy::too_many_arguments)]
pub fn plan_calibration(
    theta_hint: f64,
    sigma2_range: (f64, f64),
    m3_hint: Option<f64>,
    m4_hint: Option<f64>,
    omega: f64,
    epsilon: f64,
    n: u64,
    max_inflation: f64,
) -> Result<CalibrationPlan, CalibError> {
    let (s2_lo, s2_hi) = sigma2_range;
    if !(s2_lo > 0.0) || s2_hi < s2_lo {
        return Err(CalibError::InvalidParameter(format!(
            "sigma2_range must satisfy 0 < lower ≤ upper, got ({s2_lo}, {s2_hi})"
        )));
    }
    if !(max_inflation > 0.0) {
        return Err(CalibError::InvalidParameter(format!(
            "max_inflation must be positive, got {max_inflation}"
        )));
    }
    let r2 = s2_lo / 4.0;
    let theta_u = theta_cap(r2, omega, epsilon, n);
    if theta_u < theta_hint {
        let min_n_omega =
            32.0 * theta_hint * theta_hint * (1.0 / epsilon).ln() / (r2 * (1.0 - omega));
        return Err(CalibError::InfeasiblePlan { min_n_omega });
    }
    let conservative_m4 = m4_hint.is_none();
    let m4 = m4_hint.unwrap_or(s2_hi * s2_hi);
    let m3_abs = m3_hint.unwrap_or(m4.sqrt() * s2_hi.sqrt());
    let limit = tilde_delta_limit(theta_hint, s2_hi, r2, omega, epsilon, n);
    let target = limit * (1.0 + max_inflation);
    for k in 0..=20u32 {
        let m = 1u64 << k;
        let bound =
            tilde_delta_bound(theta_hint, s2_hi, m3_abs, m4, r2, omega, epsilon, n, m, m);
        if bound <= target {
            return Ok(CalibrationPlan {
                n_a: m,
                n_v: m,
                r2,
                bound,
                limit_bound: limit,
                conservative_m4,
            });
        }
    }
    Err(CalibError::LadderExhausted { max_inflation })
}
