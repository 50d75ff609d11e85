//! Closed-form estimation-factor constructions from summary statistics, and
//! evaluable theoretical gap bounds.
//!
//! All constructions work in shifted units (support in `[0, ∞)`, so the
//! returned factors carry `b = 0`; callers shift their data or set `b`
//! afterwards via [`ExtremalEF`]'s fields).
//!
//! The central closed form sets
//!
//! ```text
//! β₁ = √( 2ω·ln(1/ε) / (σ_e²·n·(1−ω)) ),     t = e^{β·θ_e},
//! ```
//!
//! valid when `t ≤ 1/(1−ω)`, i.e. `n ≥ ñ_th`. The performance penalty of
//! using estimates `(θ_e, σ_e²)` in place of the true `(θ, σ²)` is governed
//! by the function
//!
//! ```text
//! B(z₀) = ω²·e^{z₀} / (1 − (1−ω)·e^{z₀})²,    0 ≤ z₀ < ln(1/(1−ω)),
//! ```
//!
//! which is 1 at 0, increasing, and convex.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{CoreError, ExtremalEF};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("z0 = {z0} is outside [0, ln(1/(1−ω))) = [0, {z_inf})")]
    DomainError { z0: f64, z_inf: f64 },
    /// `n` is below the moment-construction threshold `ñ_th`; fall back to
    /// `tightness_ef` (β capped at `β_ub`).
    #[error("n = {n} is below the moment-construction threshold ñ_th = {n_th:.3}")]
    BelowThreshold { n: u64, n_th: f64 },
    /// `δ_th` exceeds the §IX feasibility ceiling
    /// `σ_e²·ln(1/(1−ω))/(ω·θ_e)`.
    #[error("delta_th = {delta_th} exceeds the feasibility ceiling {ceiling:.6}")]
    GapTooLarge { delta_th: f64, ceiling: f64 },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Moment estimates in shifted units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    /// Mean estimate, `≥ 0` in shifted units.
    pub theta_e: f64,
    /// Variance estimate or bound, `≥ 0`.
    pub sigma2_e: f64,
    /// Optional bound on the third absolute central moment.
    pub m3_abs: Option<f64>,
    /// Optional fourth central moment.
    pub m4: Option<f64>,
}

impl MomentSpec {
    pub fn new(
        theta_e: f64,
        sigma2_e: f64,
        m3_abs: Option<f64>,
        m4: Option<f64>,
    ) -> Result<Self, AnalyticError> {
        if !(theta_e >= 0.0) {
            return Err(AnalyticError::InvalidParameter(format!(
                "theta_e must be ≥ 0 in shifted units, got {theta_e}"
            )));
        }
        if !(sigma2_e >= 0.0) {
            return Err(AnalyticError::InvalidParameter(format!(
                "sigma2_e must be ≥ 0, got {sigma2_e}"
            )));
        }
        if let Some(m4v) = m4 {
            if !(m4v >= 0.0) {
                return Err(AnalyticError::InvalidParameter(format!("m4 must be ≥ 0, got {m4v}")));
            }
            if let Some(m3) = m3_abs {
                // Cauchy–Schwarz: m₃,abs ≤ √m₄·σ
                if m3 > m4v.sqrt() * sigma2_e.sqrt() + 1e-9 {
                    return Err(AnalyticError::InvalidParameter(format!(
                        "m3_abs = {m3} violates the Cauchy–Schwarz ceiling √m₄·σ = {}",
                        m4v.sqrt() * sigma2_e.sqrt()
                    )));
                }
            }
        }
        Ok(Self { theta_e, sigma2_e, m3_abs, m4 })
    }
}

/// An evaluated theoretical gap bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    pub value: f64,
    /// The `B(z₀)` factor entering the bound.
    pub b_factor: f64,
    pub regime: GapRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapRegime {
    Feasible,
    InfeasibleT,
}

/// `B(z₀) = ω²·e^{z₀}/(1 − (1−ω)·e^{z₀})²` on `[0, ln(1/(1−ω)))`.
pub fn b_function(z0: f64, omega: f64) -> Result<f64, AnalyticError> {
    let z_inf = (1.0 / (1.0 - omega)).ln();
    if !(z0 >= 0.0) || z0 >= z_inf {
        return Err(AnalyticError::DomainError { z0, z_inf });
    }
    let e = z0.exp();
    let denom = 1.0 - (1.0 - omega) * e;
    Ok(omega * omega * e / (denom * denom))
}

/// `β₁ = √(2ω ln(1/ε)/(σ²·n·(1−ω)))`, the variance-matched power.
pub fn beta1(sigma2: f64, omega: f64, epsilon: f64, n: u64) -> f64 {
    (2.0 * omega * (1.0 / epsilon).ln() / (sigma2 * n as f64 * (1.0 - omega))).sqrt()
}

/// Threshold `ñ_th = 2ω·θ_e²·ln(1/ε)/((1−ω)·σ_e²·ln²(1/(1−ω)))` above which
/// the moment construction's `t = e^{β₁θ_e}` stays feasible.
pub fn moment_threshold(ms: &MomentSpec, omega: f64, epsilon: f64) -> f64 {
    let z = (1.0 / (1.0 - omega)).ln();
    2.0 * omega * ms.theta_e * ms.theta_e * (1.0 / epsilon).ln()
        / ((1.0 - omega) * ms.sigma2_e * z * z)
}

/// The moment-based construction `β = β₁`, `t = e^{βθ_e}` (App. §V).
///
/// Errors with [`AnalyticError::BelowThreshold`] when `n < ñ_th`; callers
/// may fall back to [`tightness_ef`], whose capped β is always valid.
pub fn moment_ef(
    ms: &MomentSpec,
    omega: f64,
    epsilon: f64,
    n: u64,
) -> Result<ExtremalEF, AnalyticError> {
    if !(ms.sigma2_e > 0.0) {
        return Err(AnalyticError::InvalidParameter(
            "moment_ef requires sigma2_e > 0 (use regularization)".into(),
        ));
    }
    let n_th = moment_threshold(ms, omega, epsilon);
    if (n as f64) < n_th {
        return Err(AnalyticError::BelowThreshold { n, n_th });
    }
    let beta = beta1(ms.sigma2_e, omega, epsilon, n);
    let t = (beta * ms.theta_e).exp();
    Ok(ExtremalEF::new(beta, t, omega, 0.0)?)
}

/// The always-valid fixed construction `β = min(β₁, β_ub)`,
/// `β_ub = ln(1/(1−ω))/θ_e`, `t = e^{βθ_e}` (App. §VIII closing).
///
/// `θ_e = 0` means `t = 1` is feasible for every β, so no cap applies.
pub fn tightness_ef(
    theta_e: f64,
    sigma2: f64,
    omega: f64,
    epsilon: f64,
    n: u64,
) -> Result<ExtremalEF, AnalyticError> {
    if !(sigma2 > 0.0) {
        return Err(AnalyticError::InvalidParameter(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if !(theta_e >= 0.0) {
        return Err(AnalyticError::InvalidParameter(format!(
            "theta_e must be ≥ 0 in shifted units, got {theta_e}"
        )));
    }
    let b1 = beta1(sigma2, omega, epsilon, n);
    let beta = if theta_e > 0.0 {
        b1.min((1.0 / (1.0 - omega)).ln() / theta_e)
    } else {
        b1
    };
    let t = (beta * theta_e).exp();
    Ok(ExtremalEF::new(beta, t, omega, 0.0)?)
}

/// Convenience overload for values bounded on `[0, u]`: the no-calibration
/// fixed factor with `θ_e = u/2`, `σ² = u²/4` (App. Eq. (eq:analytic_EF)).
pub fn tightness_ef_bounded(
    u: f64,
    omega: f64,
    epsilon: f64,
    n: u64,
) -> Result<ExtremalEF, AnalyticError> {
    if !(u > 0.0) {
        return Err(AnalyticError::InvalidParameter(format!("u must be positive, got {u}")));
    }
    tightness_ef(u / 2.0, u * u / 4.0, omega, epsilon, n)
}

/// The §IX gap-threshold construction `β₂ = ω·δ_th/(σ_e² + δ_th²)`,
/// `t = e^{β(θ_e − δ_th)}`, feasible while
/// `δ_th ≤ σ_e²·ln(1/(1−ω))/(ω·θ_e)`.
pub fn gap_ef(
    theta_e: f64,
    sigma2_e: f64,
    omega: f64,
    delta_th: f64,
) -> Result<ExtremalEF, AnalyticError> {
    if !(delta_th > 0.0) {
        return Err(AnalyticError::InvalidParameter(format!(
            "delta_th must be positive, got {delta_th}"
        )));
    }
    if !(sigma2_e > 0.0) {
        return Err(AnalyticError::InvalidParameter(format!(
            "sigma2_e must be positive, got {sigma2_e}"
        )));
    }
    if theta_e > 0.0 {
        let ceiling = sigma2_e * (1.0 / (1.0 - omega)).ln() / (omega * theta_e);
        if delta_th > ceiling {
            return Err(AnalyticError::GapTooLarge { delta_th, ceiling });
        }
    }
    let beta = omega * delta_th / (sigma2_e + delta_th * delta_th);
    let t = (beta * (theta_e - delta_th)).exp();
    Ok(ExtremalEF::new(beta, t, omega, 0.0)?)
}

/// Evaluates Prop. 2's bound (App. Eq. (eq:deltae_bnd)) on the expected gap
/// `E(S_U − S_lb)` under i.i.d. trials with true mean `θ` and variance
/// `σ²_true`, for the moment construction built from `ms`:
///
/// ```text
/// E(Δ) ≤ σ·√(n(1−ω)ln(1/ε)/(2ω)) ·
///         ( B(β₁θ_e/… z₀)·(σ/σ_e + (θ−θ_e)²/(σσ_e)) + σ_e/σ ),
/// z₀ = (θ_e/σ_e)·√(2ω ln(1/ε)/(n(1−ω))).
/// ```
pub fn expected_gap_bound(
    theta: f64,
    ms: &MomentSpec,
    omega: f64,
    epsilon: f64,
    n: u64,
    sigma2_true: f64,
) -> Result<GapBound, AnalyticError> {
    let n_th = moment_threshold(ms, omega, epsilon);
    if (n as f64) < n_th {
        return Err(AnalyticError::BelowThreshold { n, n_th });
    }
    let sigma = sigma2_true.sqrt();
    let sigma_e = ms.sigma2_e.sqrt();
    if !(sigma > 0.0 && sigma_e > 0.0) {
        return Err(AnalyticError::InvalidParameter(
            "expected_gap_bound needs positive σ and σ_e".into(),
        ));
    }
    let ln_eps = (1.0 / epsilon).ln();
    let z0 = (ms.theta_e / sigma_e)
        * (2.0 * omega * ln_eps / (n as f64 * (1.0 - omega))).sqrt();
    let b = b_function(z0, omega)?;
    let lead = sigma * (n as f64 * (1.0 - omega) * ln_eps / (2.0 * omega)).sqrt();
    let dm = theta - ms.theta_e;
    let value = lead * (b * (sigma / sigma_e + dm * dm / (sigma * sigma_e)) + sigma_e / sigma);
    Ok(GapBound { value, b_factor: b, regime: GapRegime::Feasible })
}

/// The large-`n` asymptotic gap bound `σ·√(2n(1−ω)ln(1/ε)/ω)` of
/// App. Eq. (eq:expgap), with its `(1 + O(1/√n))` factor dropped.
pub fn expgap_leading(sigma: f64, omega: f64, epsilon: f64, n: u64) -> f64 {
    sigma * (2.0 * n as f64 * (1.0 - omega) * (1.0 / epsilon).ln() / omega).sqrt()
}

/// Lower bound on the expected number of spot checks for the constant-n̄s
/// regime to apply: `n̄_{s,lb} = 32(θ/σ)²·ln(1/ε)`.
pub fn constant_ns_floor(theta: f64, sigma: f64, epsilon: f64) -> f64 {
    32.0 * (theta / sigma) * (theta / sigma) * (1.0 / epsilon).ln()
}

/// The constant-n̄s expected-gap bound on `E(Δ)/n` (App. Eq. (eq:avgapns)),
/// with the `(1 + O(1/n))` factor dropped:
///
/// ```text
/// σ√(2 ln(1/ε)/n̄s)·(1 + (c/(√n̄s − c))·(1 + c/(2(√n̄s − c)))),
/// c = (θ/σ)√(2 ln(1/ε)).
/// ```
pub fn constant_ns_gap_bound(
    theta: f64,
    sigma: f64,
    ns_bar: f64,
    epsilon: f64,
    n: u64,
) -> Result<f64, AnalyticError> {
    if !(sigma > 0.0) {
        return Err(AnalyticError::PreconditionFailed(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let floor = constant_ns_floor(theta, sigma, epsilon);
    if !(ns_bar > floor) {
        return Err(AnalyticError::PreconditionFailed(format!(
            "ns_bar = {ns_bar} must exceed n̄_s,lb = {floor}"
        )));
    }
    let n_floor = ns_bar / (1.0 - floor / ns_bar);
    if (n as f64) < n_floor {
        return Err(AnalyticError::PreconditionFailed(format!(
            "n = {n} must be at least n̄_s/(1 − n̄_s,lb/n̄_s) = {n_floor}"
        )));
    }
    let ln_eps = (1.0 / epsilon).ln();
    let c = (theta / sigma) * (2.0 * ln_eps).sqrt();
    let root = ns_bar.sqrt();
    let corr = c / (root - c);
    Ok(sigma * (2.0 * ln_eps / ns_bar).sqrt() * (1.0 + corr * (1.0 + 0.5 * corr)))
}
