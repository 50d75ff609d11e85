//! Numerical construction of optimal extremal estimation factors for a
//! reference distribution, and minimum-trial computation.
//!
//! For i.i.d. trials under a reference distribution `ν` on `[0, ∞)` (already
//! shifted), check probability `ω`, error bound `ε`, and `n` trials, the
//! expected lower confidence bound per trial — up to the additive constant
//! `(1−ω)·E_ν(X)` — is the objective
//!
//! ```text
//! 𝒪(β, t) = ( ω(E_ν ln(1 − (1−ω)·t·e^{−βX}) − ln ω)
//!             + (1−ω)·ln t + ln(ε)/n ) / β.
//! ```
//!
//! At fixed `β` the objective is strictly concave in `t` and the optimum
//! `t_β` solves `E_ν( ω·t / (e^{βX} − (1−ω)·t) ) = 1`, whose left side is
//! monotone increasing in `t`; the feasible optimum is
//! `t'_β = min(t_β, 1/(1−ω))`. The search over `β` uses the analytic cutoff
//! `𝒪 ≤ (H_e(ω) + ln(ε)/n)/β` to confine the range once any positive
//! objective value is found.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::ReferenceDistribution;
use crate::numeric::{golden_section_maximize, smallest_satisfying};

/// Ceiling for minimum-trial searches; beyond it the problem is reported as
/// divergent.
pub const MIN_TRIALS_CEILING: u64 = 1_000_000_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OptError {
    /// `H_e(ω) + ln(ε)/n ≤ 0` and no feasible `(β, t)` evaluates to a finite
    /// objective: increase `n` or `ε`.
    #[error("no feasible beta: the objective is unbounded below everywhere")]
    NoFeasibleBeta,
    /// Minimum-trial search exceeded the ceiling of 10¹² trials.
    #[error("minimum-trials search diverged (no n ≤ 10^12 satisfies the gap constraint)")]
    Divergent,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Inputs of the expected-bound objective.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub dist: ReferenceDistribution,
    pub omega: f64,
    pub epsilon: f64,
    pub n: u64,
}

impl ObjectiveContext {
    pub fn new(
        dist: ReferenceDistribution,
        omega: f64,
        epsilon: f64,
        n: u64,
    ) -> Result<Self, OptError> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(OptError::InvalidParameter(format!(
                "omega must lie in (0,1), got {omega}"
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(OptError::InvalidParameter(format!(
                "epsilon must lie in (0,1], got {epsilon}"
            )));
        }
        if n == 0 {
            return Err(OptError::InvalidParameter("n must be at least 1".into()));
        }
        if dist.min_value() < 0.0 {
            return Err(OptError::InvalidParameter(format!(
                "distribution support must lie in [0,∞) (shifted), found min {}",
                dist.min_value()
            )));
        }
        Ok(Self { dist, omega, epsilon, n })
    }

    /// `H_e(ω) = −(1−ω)ln(1−ω) − ω·ln ω`, the binary entropy in nats.
    pub fn entropy(&self) -> f64 {
        let w = self.omega;
        -(1.0 - w) * (1.0 - w).ln() - w * w.ln()
    }

    /// Numerator of the analytic cutoff bound `𝒪 ≤ (H_e(ω) + ln(ε)/n)/β`.
    pub fn cutoff_numerator(&self) -> f64 {
        self.entropy() + self.epsilon.ln() / self.n as f64
    }
}

/// Result of the `(β, t)` optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub beta: f64,
    pub t: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Evaluates `𝒪(β, t)`; returns `−∞` when `1 − (1−ω)·t·e^{−βx} ≤ 0` for
/// some support point (infeasible pair).
pub fn objective(ctx: &ObjectiveContext, beta: f64, t: f64) -> f64 {
    let w = ctx.omega;
    if beta <= 0.0 || t <= 0.0 || t > 1.0 / (1.0 - w) {
        return f64::NEG_INFINITY;
    }
    // Every numerator term is O(β) near the β → 0 limit, so compute each
    // relative to its limit (expm1/ln_1p) to keep the division by β stable:
    // ln((1 − (1−ω)·t·e^{−βx})/ω) = ln1p(−(1−ω)·expm1(ln t − βx)/ω).
    let t_ln = t.ln();
    let mut e_ln_rel = 0.0;
    for &(x, p) in ctx.dist.support() {
        let g = -(1.0 - w) * f64::exp_m1(t_ln - beta * x) / w;
        if g <= -1.0 {
            return f64::NEG_INFINITY;
        }
        e_ln_rel += p * g.ln_1p();
    }
    (w * e_ln_rel + (1.0 - w) * t_ln + ctx.epsilon.ln() / ctx.n as f64) / beta
}

/// The `t`-optimum at fixed `β`: `t'_β = min(t_β, 1/(1−ω))`, where `t_β`
/// solves `E_ν( ω·t / (e^{βX} − (1−ω)·t) ) = 1` by bracketed bisection on
/// the monotone-increasing left side over `[1, t_sup)`,
/// `t_sup = e^{β·x_min}/(1−ω)`.
pub fn optimal_t(ctx: &ObjectiveContext, beta: f64) -> f64 {
    let w = ctx.omega;
    let t_cap = 1.0 / (1.0 - w);
    let t_sup = (beta * ctx.dist.min_value()).exp() / (1.0 - w);
    let hi = t_cap.min(t_sup * (1.0 - 1e-14));
    if hi <= 1.0 {
        return 1.0;
    }
    // h(t) = E_ν( ω t / (e^{βX} − (1−ω)t) ) − 1, increasing in t on [1, t_sup)
    let h = |t: f64| -> f64 {
        ctx.dist.expect(|x| {
            let denom = (beta * x).exp() - (1.0 - w) * t;
            w * t / denom
        }) - 1.0
    };
    if h(hi) <= 0.0 {
        return hi;
    }
    // h(1) ≤ 0 for support ⊆ [0,∞) since e^{βx} − (1−ω) ≥ ω. Bisect.
    let mut lo = 1.0;
    let mut hi_b = hi;
    for _ in 0..200 {
        if hi_b - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi_b);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi_b = mid;
        }
    }
    0.5 * (lo + hi_b)
}

/// Maximizes `𝒪(β, t'_β)` over `β`.
///
/// Search strategy (the paper guarantees a cutoff but no method): a coarse
/// log-spaced scan establishes the adaptive cutoff
/// `β ≤ (H_e(ω) + ln(ε)/n)/o₁` from the first positive objective `o₁`, then
/// golden-section refinement runs on the scan's bracketing interval and on
/// decade brackets around the seeds `1e−4`, `1e−2`, `1`. Best objective
/// wins; ties break to the smallest `β`.
///
/// When `H_e(ω) + ln(ε)/n ≤ 0` the objective is nonpositive everywhere
/// (analytic bound), and the best nonpositive value found is returned with
/// `converged = false`.
pub fn optimize_ef(ctx: &ObjectiveContext) -> Result<OptResult, OptError> {
    const BETA_LO: f64 = 1e-12;
    let g = |beta: f64| objective(ctx, beta, optimal_t(ctx, beta));

    let numerator = ctx.cutoff_numerator();
    // Upper limit for β before any positive objective is known: the cutoff
    // applies only once o₁ > 0 exists, so start from a generous fixed cap.
    let mut beta_cut: f64 = 1e3;

    // Coarse scan over log β; tracks the best point and updates the cutoff.
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    let mut best_idx = None;
    let scan_points = 400;
    let (lo_l, hi_l) = (BETA_LO.ln(), beta_cut.ln());
    let mut scan: Vec<(f64, f64)> = Vec::with_capacity(scan_points);
    for i in 0..scan_points {
        let lb = lo_l + (hi_l - lo_l) * i as f64 / (scan_points - 1) as f64;
        let beta = lb.exp();
        if beta > beta_cut {
            break;
        }
        let v = g(beta);
        scan.push((beta, v));
        if v > best.1 {
            best = (beta, v);
            best_idx = Some(scan.len() - 1);
        }
        if v > 0.0 && numerator > 0.0 {
            beta_cut = beta_cut.min(numerator / v);
        }
    }

    let refine = |a: f64, b: f64, best: &mut (f64, f64)| {
        let (lx, lv) = golden_section_maximize(|lb: f64| g(lb.exp()), a.ln(), b.ln(), 200, 1e-10);
        let bx = lx.exp();
        if lv > best.1 || (lv == best.1 && bx < best.0) {
            *best = (bx, lv);
        }
    };

    // Refine around the scan's best bracket.
    if let Some(i) = best_idx {
        let a = if i == 0 { scan[0].0 / 4.0 } else { scan[i - 1].0 };
        let b = if i + 1 < scan.len() { scan[i + 1].0 } else { scan[i].0 * 4.0 };
        refine(a.max(BETA_LO), b.min(beta_cut), &mut best);
    }
    // Multi-seed restarts to dodge plateaus.
    for seed in [1e-4f64, 1e-2, 1.0] {
        let a = (seed / 100.0).max(BETA_LO);
        let b = (seed * 100.0).min(beta_cut);
        if a < b {
            refine(a, b, &mut best);
        }
    }

    if !best.1.is_finite() {
        return Err(OptError::NoFeasibleBeta);
    }
    let t = optimal_t(ctx, best.0);
    Ok(OptResult {
        beta: best.0,
        t,
        objective: best.1,
        converged: numerator > 0.0 && best.1 > 0.0,
    })
}

/// Which minimum-trials formulation to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinTrialsForm {
    /// The concave program `n = ⌈ln(1/ε) / (ω·sup_β E_ν ln F'_{β,t}(X))⌉`
    /// with `t = e^{β(θ−δ_th)}` and `β ∈ (0, β_ub]`. Default.
    ConcaveProgram,
    /// Doubling plus binary search for the smallest `n` with
    /// `G(n) = (1−ω)θ − 𝒪*(n) − (1−ω)δ_th ≤ 0`, `𝒪*` the optimized
    /// objective (G is decreasing in n).
    GapObjective,
}

/// The per-trial gap function `G(n)` of the `GapObjective` formulation.
pub fn gap_g(
    dist: &ReferenceDistribution,
    omega: f64,
    epsilon: f64,
    delta_th: f64,
    n: u64,
) -> Result<f64, OptError> {
    let ctx = ObjectiveContext::new(dist.clone(), omega, epsilon, n)?;
    let opt = optimize_ef(&ctx)?;
    let theta = dist.mean();
    Ok((1.0 - omega) * theta - opt.objective - (1.0 - omega) * delta_th)
}

/// Smallest `n` whose optimized expected gap per unchecked trial is at most
/// `delta_th`, together with the `(β, t)` construction used at the optimum.
///
/// `dist` must already be shifted to `[0, ∞)`.
pub fn min_trials(
    dist: &ReferenceDistribution,
    omega: f64,
    epsilon: f64,
    delta_th: f64,
    form: MinTrialsForm,
) -> Result<(u64, OptResult), OptError> {
    if !(delta_th > 0.0) {
        return Err(OptError::InvalidParameter(format!(
            "delta_th must be positive, got {delta_th}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(OptError::InvalidParameter(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    match form {
        MinTrialsForm::ConcaveProgram => min_trials_concave(dist, omega, epsilon, delta_th),
        MinTrialsForm::GapObjective => min_trials_gap(dist, omega, epsilon, delta_th),
    }
}

fn min_trials_concave(
    dist: &ReferenceDistribution,
    omega: f64,
    epsilon: f64,
    delta_th: f64,
) -> Result<(u64, OptResult), OptError> {
    let theta = dist.mean();
    let theta_e = theta - delta_th;
    // E_ν ln F'_{β,t}(X) with t = e^{βθ_e},
    // F' = (1 − (1−ω)e^{−β(X−θ_e)})/ω; concave in β.
    let e_ln_f = |beta: f64| -> f64 {
        let mut acc = 0.0;
        for &(x, p) in dist.support() {
            let inner = 1.0 - (1.0 - omega) * (-beta * (x - theta_e)).exp();
            if inner <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += p * (inner / omega).ln();
        }
        acc
    };
    // β_ub = ln(1/(1−ω))/θ_e keeps t = e^{βθ_e} ≤ 1/(1−ω); with θ_e ≤ 0,
    // t ≤ 1 for every β and no cap is needed.
    let beta_hi = if theta_e > 0.0 {
        (1.0 / (1.0 - omega)).ln() / theta_e
    } else {
        1e6
    };
    let (lb, sup) =
        golden_section_maximize(|lb: f64| e_ln_f(lb.exp()), (1e-15f64).ln(), beta_hi.ln(), 300, 1e-12);
    let beta_star = lb.exp();
    if !(sup > 0.0) {
        return Err(OptError::Divergent);
    }
    let n_raw = (1.0 / epsilon).ln() / (omega * sup);
    if !n_raw.is_finite() || n_raw > MIN_TRIALS_CEILING as f64 {
        return Err(OptError::Divergent);
    }
    let n_min = (n_raw.ceil() as u64).max(1);
    Ok((
        n_min,
        OptResult {
            beta: beta_star,
            t: (beta_star * theta_e).exp(),
            objective: sup,
            converged: true,
        },
    ))
}

fn min_trials_gap(
    dist: &ReferenceDistribution,
    omega: f64,
    epsilon: f64,
    delta_th: f64,
) -> Result<(u64, OptResult), OptError> {
    let ok = |n: u64| -> bool {
        gap_g(dist, omega, epsilon, delta_th, n).map(|g| g <= 0.0).unwrap_or(false)
    };
    let n_min =
        smallest_satisfying(ok, 1, MIN_TRIALS_CEILING).ok_or(OptError::Divergent)?;
    let ctx = ObjectiveContext::new(dist.clone(), omega, epsilon, n_min)?;
    let opt = optimize_ef(&ctx)?;
    Ok((n_min, opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chsh_shifted(p: f64) -> ReferenceDistribution {
        // Two-point CHSH distribution shifted to [0, u].
        let u = 5.535_533_905_932_737_6;
        ReferenceDistribution::two_point(0.0, u, p).unwrap()
    }

    #[test]
    fn objective_point_mass_t_one() {
        let ctx = ObjectiveContext::new(ReferenceDistribution::point_mass(0.0), 0.3, 0.05, 100)
            .unwrap();
        for beta in [0.01, 0.5, 2.0] {
            let v = objective(&ctx, beta, 1.0);
            let expect = 0.05f64.ln() / (100.0 * beta);
            assert!((v - expect).abs() < 1e-12, "beta={beta}: {v} vs {expect}");
        }
    }

    #[test]
    fn objective_respects_analytic_upper_bounds() {
        let ctx = ObjectiveContext::new(chsh_shifted(0.8375), 0.1, 0.01, 10_000).unwrap();
        let theta = ctx.dist.mean();
        for &beta in &[1e-3, 1e-2, 0.1, 0.5] {
            for &t in &[0.5, 1.0, 1.05, 1.11] {
                let v = objective(&ctx, beta, t);
                if v.is_finite() {
                    assert!(v <= ctx.cutoff_numerator() / beta + 1e-12);
                    assert!(v <= (1.0 - ctx.omega) * theta + 1e-12);
                }
            }
        }
    }

    #[test]
    fn optimal_t_point_mass_closed_form() {
        // Deterministic X at x₀: t_β = e^{βx₀}, capped at 1/(1−ω).
        let omega = 0.1;
        let x0 = 0.7;
        let ctx =
            ObjectiveContext::new(ReferenceDistribution::point_mass(x0), omega, 0.01, 1000).unwrap();
        for beta in [0.01, 0.1, 0.5, 1.0] {
            let expect = (beta * x0).exp().min(1.0 / (1.0 - omega));
            let got = optimal_t(&ctx, beta);
            assert!((got - expect).abs() < 1e-9, "beta={beta}: {got} vs {expect}");
        }
    }

    #[test]
    fn optimal_t_at_least_one() {
        let ctx = ObjectiveContext::new(chsh_shifted(0.3), 0.25, 0.05, 500).unwrap();
        for beta in [1e-4, 1e-2, 0.3, 2.0] {
            assert!(optimal_t(&ctx, beta) >= 1.0);
        }
    }

    #[test]
    fn optimal_t_matches_frozen_oracle() {
        // Bisection root frozen from an mpmath solve at β = 0.02, ω = 0.1,
        // two-point CHSH dist with p = 0.8375.
        let ctx = ObjectiveContext::new(chsh_shifted(0.8375), 0.1, 0.01, 10_000).unwrap();
        let t = optimal_t(&ctx, 0.02);
        assert!((t - 1.066_517_444_270_176_4).abs() < 1e-9, "{t}");
    }

    #[test]
    fn optimal_t_satisfies_first_order_condition() {
        let ctx = ObjectiveContext::new(chsh_shifted(0.8375), 0.1, 0.01, 10_000).unwrap();
        let beta = 0.02;
        let t = optimal_t(&ctx, beta);
        let w = ctx.omega;
        let lhs = ctx.dist.expect(|x| w * t / ((beta * x).exp() - (1.0 - w) * t));
        assert!((lhs - 1.0).abs() < 1e-9, "first-order residual {}", lhs - 1.0);
    }

    #[test]
    fn objective_concave_in_t() {
        let ctx = ObjectiveContext::new(chsh_shifted(0.7), 0.15, 0.02, 2_000).unwrap();
        let beta = 0.05;
        let t_hi = 1.0 / (1.0 - ctx.omega);
        let steps = 60;
        let h = (t_hi - 1e-3) / steps as f64;
        for i in 1..steps - 1 {
            let t = 1e-3 + i as f64 * h;
            let f0 = objective(&ctx, beta, t - h);
            let f1 = objective(&ctx, beta, t);
            let f2 = objective(&ctx, beta, t + h);
            if f0.is_finite() && f1.is_finite() && f2.is_finite() {
                assert!(f0 + f2 - 2.0 * f1 <= 1e-10, "second difference positive at t={t}");
            }
        }
    }

    #[test]
    fn optimize_ef_matches_frozen_oracle() {
        // Dense mpmath grid + golden-section refinement found
        // β = 4.4543e−3, 𝒪 = 3.9758901551… for these parameters.
        let ctx = ObjectiveContext::new(chsh_shifted(0.8375), 0.1, 0.01, 10_000).unwrap();
        let r = optimize_ef(&ctx).unwrap();
        assert!(r.converged);
        assert!((r.objective - 3.975_890_155_115_93).abs() < 1e-6, "{}", r.objective);
        assert!((r.beta - 4.454e-3).abs() < 2e-4, "{}", r.beta);
    }

    #[test]
    fn optimize_ef_epsilon_one_approaches_expectation() {
        let ctx = ObjectiveContext::new(chsh_shifted(0.6), 0.2, 1.0, 100).unwrap();
        let r = optimize_ef(&ctx).unwrap();
        let cap = (1.0 - ctx.omega) * ctx.dist.mean();
        assert!(r.objective <= cap + 1e-12, "obj {} cap {cap} beta {}", r.objective, r.beta);
        // as β → 0 the objective approaches the cap; the optimum gets close
        assert!(r.objective > 0.98 * cap, "{} vs {cap}", r.objective);
    }

    #[test]
    fn optimize_ef_optimal_beta_decreases_in_n() {
        let mut last = f64::INFINITY;
        for k in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000] {
            let ctx = ObjectiveContext::new(chsh_shifted(0.8375), 0.1, 0.01, k).unwrap();
            let r = optimize_ef(&ctx).unwrap();
            assert!(r.beta <= last * 1.05, "β not decreasing at n={k}");
            last = r.beta;
        }
    }

    #[test]
    fn min_trials_concave_matches_frozen_oracle() {
        // Frozen from an independent mpmath golden-section maximization of
        // E_ν ln F' (Î = 2.7 CHSH, ω = 0.1, ε = 0.01, δ_th = 0.0098).
        let (n, opt) =
            min_trials(&chsh_shifted(0.8375), 0.1, 0.01, 0.0098, MinTrialsForm::ConcaveProgram)
                .unwrap();
        assert_eq!(n, 4_468_283);
        assert!((opt.beta - 2.330_6e-4).abs() < 1e-6);
    }

    #[test]
    fn min_trials_gap_brackets_g_zero() {
        let dist = chsh_shifted(0.8375);
        let (n, _) =
            min_trials(&dist, 0.1, 0.01, 0.25, MinTrialsForm::GapObjective).unwrap();
        let g_at = gap_g(&dist, 0.1, 0.01, 0.25, n).unwrap();
        assert!(g_at <= 0.0, "G(n_min) = {g_at} > 0");
        if n > 1 {
            let g_before = gap_g(&dist, 0.1, 0.01, 0.25, n - 1).unwrap();
            assert!(g_before > 0.0, "G(n_min−1) = {g_before} ≤ 0");
        }
    }

    #[test]
    fn min_trials_large_delta_small_n() {
        let dist = chsh_shifted(0.8375);
        let theta = dist.mean();
        let (n, _) =
            min_trials(&dist, 0.1, 0.01, theta * 1.5, MinTrialsForm::GapObjective).unwrap();
        assert!(n < 2_000, "n = {n}");
    }

    #[test]
    fn min_trials_quarter_scaling() {
        let dist = chsh_shifted(0.8375);
        let mut prev = None;
        for k in 0..3 {
            let d = 0.02 * 0.5f64.powi(k);
            let (n, _) =
                min_trials(&dist, 0.1, 0.01, d, MinTrialsForm::ConcaveProgram).unwrap();
            if let Some(p) = prev {
                let ratio = n as f64 / p as f64;
                assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(n);
        }
    }

    #[test]
    fn min_trials_respects_paper_bound() {
        // n_min ≤ 2 ln(1/ε)(σ²+δ²)(1+O(δ))/(ω(1−ω)δ²)
        let dist = chsh_shifted(0.8375);
        let sigma2 = dist.variance();
        for &d in &[0.0098, 0.02, 0.05] {
            let (n, _) = min_trials(&dist, 0.1, 0.01, d, MinTrialsForm::ConcaveProgram).unwrap();
            let bound = 2.0 * (1.0f64 / 0.01).ln() * (sigma2 + d * d) / (0.1 * 0.9 * d * d);
            assert!(
                (n as f64) <= bound * (1.0 + 5.0 * d),
                "n = {n} exceeds bound {bound} at δ = {d}"
            );
        }
    }

    #[test]
    fn concave_program_inner_objective_concave_in_beta() {
        let dist = chsh_shifted(0.8375);
        let omega = 0.1;
        let delta_th = 0.01;
        let theta_e = dist.mean() - delta_th;
        let e_ln_f = |beta: f64| -> f64 {
            dist.expect(|x| {
                ((1.0 - (1.0 - omega) * (-beta * (x - theta_e)).exp()) / omega).ln()
            })
        };
        let beta_hi = (1.0 / (1.0 - omega)).ln() / theta_e;
        let h = beta_hi / 80.0;
        for i in 1..79 {
            let b = i as f64 * h;
            let d2 = e_ln_f(b - h) + e_ln_f(b + h) - 2.0 * e_ln_f(b);
            assert!(d2 <= 1e-10, "positive second difference at β = {b}");
        }
    }
}
