//! Acceptance suite: one test per criterion, each ending in a single
//! `criterion N: PASS` line (a failed assertion is the FAIL signal).
//!
//! Criteria 1–10 exercise the library directly; criterion 11 runs the
//! installed `spotcheck` binary.

use std::process::Command;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use spotcheck::analytic::{
    constant_ns_gap_bound, expected_gap_bound, moment_ef, tightness_ef_bounded, MomentSpec,
};
use spotcheck::baselines::{gocanin_min_trials, serfling_min_trials, BinaryRange, GocaninTrials};
use spotcheck::chsh::{chsh_x_range, run_bound_figure, ChshParams, Method, SimConfig};
use spotcheck::core::{
    ef_inequality_lhs, BoundAccumulator, ExtremalEF, ReferenceDistribution,
};
use spotcheck::optimizer::{
    min_trials, objective, optimize_ef, MinTrialsForm, ObjectiveContext,
};
use spotcheck::variants::{biased_ef_value, early_stop_n, multi_choice_ef_value, BiasModel,
    MultiChoiceModel};

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn random_dist(rng: &mut StdRng, max_points: usize) -> ReferenceDistribution {
    let k = rng.random_range(1..=max_points);
    let mut support: Vec<(f64, f64)> = (0..k)
        .map(|_| (10.0 * rng.random::<f64>(), rng.random::<f64>() + 1e-3))
        .collect();
    let total: f64 = support.iter().map(|&(_, p)| p).sum();
    for pair in &mut support {
        pair.1 /= total;
    }
    ReferenceDistribution::new(support).expect("valid random distribution")
}

/// One simulated spot-checking replication on a shifted two-point
/// distribution `{0, u}` with `P(X = u) = p`; returns `(s_lb, s, s_prime)`.
fn simulate_rep(
    rng: &mut StdRng,
    ef: &ExtremalEF,
    n: u64,
    omega: f64,
    epsilon: f64,
    u: f64,
    p: f64,
) -> (f64, f64, f64) {
    let mut acc = BoundAccumulator::new(ef.beta, 0.0, epsilon);
    let mut s_prime = 0.0;
    let mut c_n = 0u64;
    for _ in 0..n {
        let checked = rng.random::<f64>() < omega;
        let x = if rng.random::<f64>() < p { u } else { 0.0 };
        if checked {
            acc.push(ef, Some(x), 0).expect("feasible factor");
        } else {
            acc.push(ef, None, 1).expect("unchecked push");
            s_prime += x;
            c_n += 1;
        }
    }
    let report = acc.finalize();
    (report.s_lb, p * u * c_n as f64, s_prime)
}

struct CoverageStats {
    miss_s: u64,
    miss_s_prime: u64,
    reps: u64,
    mean_gap: f64,
    sd_gap: f64,
}

/// Criterion-2 configuration: fixed EF, CHSH at Î = 2.5.
fn run_coverage_sim() -> CoverageStats {
    let params = ChshParams::new(2.5).unwrap();
    let (u, p) = (params.range(), params.p_theta);
    let (n, omega, epsilon, reps) = (1000u64, 0.1, 0.05, 10_000u64);
    let ef = tightness_ef_bounded(u, omega, epsilon, n).unwrap();

    let mut miss_s = 0u64;
    let mut miss_s_prime = 0u64;
    let mut gaps = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let mut rng = StdRng::seed_from_u64(0xACC0_0002 ^ rep);
        let (s_lb, s, s_prime) = simulate_rep(&mut rng, &ef, n, omega, epsilon, u, p);
        if s_lb > s {
            miss_s += 1;
        }
        if s_lb > s_prime {
            miss_s_prime += 1;
        }
        gaps.push(s_prime - s_lb);
    }
    let mean_gap = gaps.iter().sum::<f64>() / reps as f64;
    let var = gaps.iter().map(|g| (g - mean_gap).powi(2)).sum::<f64>() / (reps - 1) as f64;
    CoverageStats { miss_s, miss_s_prime, reps, mean_gap, sd_gap: var.sqrt() }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_ef_inequality_property_suite() {
    let mut rng = StdRng::seed_from_u64(0xACC0_0001);
    let tuples = 10_000;
    for _ in 0..tuples {
        let dist = random_dist(&mut rng, 8);
        let omega = 0.01 + 0.98 * rng.random::<f64>();
        let beta = 5.0 * rng.random::<f64>().max(1e-6);

        // Extremal family: t feasible on support ⊆ [0, ∞) iff t ≤ 1/(1−ω).
        let t = rng.random::<f64>() / (1.0 - omega);
        let ef = ExtremalEF::new(beta, t, omega, 0.0).unwrap();
        let lhs = ef_inequality_lhs(&ef, &dist, omega);
        assert!(lhs <= 1.0 + 1e-9, "extremal lhs = {lhs} at ω = {omega}, β = {beta}, t = {t}");

        // Bias model: the min-form factor must satisfy the inequality for
        // every true check probability ω̃ ∈ [ω', ω] (linear in ω̃, but the
        // midpoint is checked as well).
        let omega_lo = omega * (0.2 + 0.8 * rng.random::<f64>());
        let bm = BiasModel::new(omega, omega_lo).unwrap();
        let tb = rng.random::<f64>() / (1.0 - omega_lo);
        for frac in [0.0, 0.5, 1.0] {
            let w = omega_lo + frac * (omega - omega_lo);
            let lhs = dist.expect(|x| {
                let checked = biased_ef_value(beta, tb, &bm, x, 0).unwrap();
                w * checked + (1.0 - w) * tb * (-beta * x).exp()
            });
            assert!(lhs <= 1.0 + 1e-9, "biased lhs = {lhs} at ω̃ = {w}");
        }

        // Three-valued checks with the discard factor fixed at 1.
        let w0 = 0.05 + 0.5 * rng.random::<f64>();
        let w1 = (1.0 - w0) * (0.1 + 0.8 * rng.random::<f64>());
        let w2 = 1.0 - w0 - w1;
        let mc = MultiChoiceModel::new(w0, w1, w2).unwrap();
        let t1 = rng.random::<f64>() * (1.0 - w2) / w1;
        let lhs = dist.expect(|x| {
            let checked = multi_choice_ef_value(beta, t1, &mc, x, 0).unwrap();
            w0 * checked + w1 * t1 * (-beta * x).exp() + w2
        });
        assert!(lhs <= 1.0 + 1e-9, "three-valued lhs = {lhs}");
    }
    println!("criterion 1: PASS");
}

#[test]
fn criterion_02_coverage() {
    let stats = run_coverage_sim();
    let epsilon = 0.05;
    let threshold =
        epsilon + 3.0 * (epsilon * (1.0 - epsilon) / stats.reps as f64).sqrt();
    let rate_s = stats.miss_s as f64 / stats.reps as f64;
    let rate_sp = stats.miss_s_prime as f64 / stats.reps as f64;
    assert!(rate_s <= threshold, "miss rate for S: {rate_s} > {threshold}");
    assert!(rate_sp <= threshold, "miss rate for S': {rate_sp} > {threshold}");
    println!("criterion 2: PASS");
}

#[test]
fn criterion_03_soundness() {
    let stats = run_coverage_sim();
    // mean(S_lb) ≤ mean(S_U) + 3·SE  ⇔  mean(S_U − S_lb) ≥ −3·SE.
    let se = stats.sd_gap / (stats.reps as f64).sqrt();
    assert!(
        stats.mean_gap >= -3.0 * se,
        "mean(S_U − S_lb) = {} < −3·SE = {}",
        stats.mean_gap,
        -3.0 * se
    );
    println!("criterion 3: PASS");
}

#[test]
fn criterion_04_figure1_scaled_reproduction() {
    let cfg = SimConfig {
        n: 10_000,
        omega: 0.1,
        epsilon: 0.01,
        reps: 200,
        base_seed: 4,
        i_hat: 2.7,
        calibration_n: Some(100),
    };
    let grid = [2.34, 2.66, 2.7];
    let data = run_bound_figure(&cfg, &grid).unwrap();

    let mean_of = |i_hat: f64, method: Method| -> f64 {
        data.summary
            .iter()
            .find(|r| r.i_hat == i_hat && r.method == method)
            .expect("summary row present")
            .mean_xi_lb
    };

    for &i_hat in &grid {
        let calibrated = mean_of(i_hat, Method::EfCalibrated);
        let gocanin = mean_of(i_hat, Method::Gocanin);
        let serfling = mean_of(i_hat, Method::Serfling);
        assert!(
            calibrated >= gocanin,
            "Î = {i_hat}: calibrated EF {calibrated} < Gočanin {gocanin}"
        );
        assert!(
            calibrated >= serfling,
            "Î = {i_hat}: calibrated EF {calibrated} < Serfling {serfling}"
        );

        // Mean gap to the asymptotic bound Ξ̌, for both EF variants, against
        // the Prop.-2 expected-gap bound per unchecked trial (+10% slack).
        let params = ChshParams::new(i_hat).unwrap();
        let u = params.range();
        let theta = params.theta_shifted();
        let sigma2 = params.p_theta * (1.0 - params.p_theta) * u * u;
        let ms = MomentSpec::new(u / 2.0, u * u / 4.0, None, None).unwrap();
        let gap_bound = expected_gap_bound(theta, &ms, cfg.omega, cfg.epsilon, cfg.n, sigma2)
            .unwrap()
            .value;
        let per_trial = gap_bound / (cfg.n as f64 * (1.0 - cfg.omega));
        let allowance = 1.1 * per_trial;
        let xi_check = params.asymptotic_xi();
        for method in [Method::EfCalibrated, Method::EfFixed] {
            let gap = xi_check - mean_of(i_hat, method);
            assert!(
                gap <= allowance,
                "Î = {i_hat}, {:?}: mean gap {gap} > bound {allowance}",
                method
            );
        }
    }
    println!("criterion 4: PASS");
}

#[test]
fn criterion_05_figure2_divergence() {
    let params = ChshParams::new(2.7).unwrap();
    let (x_lb, x_ub) = chsh_x_range();
    let br = BinaryRange::new(x_lb, x_ub, 1.0).unwrap();
    let (omega, epsilon) = (0.1, 0.01);
    let theta = params.mean();

    // Gočanin diverges at and below the paper's δ_th = 0.0098 …
    for delta_th in [0.002, 0.005, 0.0098] {
        let r = gocanin_min_trials(theta, &br, omega, epsilon, delta_th).unwrap();
        assert!(
            matches!(r, GocaninTrials::Divergent),
            "expected divergence at δ_th = {delta_th}, got {r:?}"
        );
    }
    // … and is finite from 0.0105 up.
    for delta_th in [0.0105, 0.02, 0.1] {
        let r = gocanin_min_trials(theta, &br, omega, epsilon, delta_th).unwrap();
        assert!(
            matches!(r, GocaninTrials::Finite(_)),
            "expected finite trials at δ_th = {delta_th}, got {r:?}"
        );
    }

    // The EF program stays finite where Gočanin diverges.
    let dist = params.shifted_distribution();
    let (n_ef, _) =
        min_trials(&dist, omega, epsilon, 0.0098, MinTrialsForm::ConcaveProgram).unwrap();
    assert!(n_ef > 0, "EF min-trials not finite at δ_th = 0.0098");

    // EF ≤ Serfling across a 20-point δ_th grid.
    for k in 0..20 {
        let delta_th = (0.005f64.ln() + (0.2f64.ln() - 0.005f64.ln()) * k as f64 / 19.0).exp();
        let (n_ef, _) =
            min_trials(&dist, omega, epsilon, delta_th, MinTrialsForm::ConcaveProgram).unwrap();
        let n_serf = serfling_min_trials(theta, x_lb, x_ub, omega, epsilon, delta_th).unwrap();
        assert!(
            n_ef <= n_serf,
            "δ_th = {delta_th}: EF n_min {n_ef} > Serfling n_min {n_serf}"
        );
    }
    println!("criterion 5: PASS");
}

#[test]
fn criterion_06_optimizer_grid_equivalence() {
    let mut rng = StdRng::seed_from_u64(0xACC0_0006);
    let mut tested = 0;
    while tested < 20 {
        let raw = random_dist(&mut rng, 4);
        // Shift the support to start at 0 (the optimizer's domain).
        let dist = raw.shifted(raw.min_value());
        let omega = 0.05 + 0.85 * rng.random::<f64>();
        let epsilon = 10f64.powf(-3.0 * rng.random::<f64>()).min(0.5);
        let n = rng.random_range(100..1_000_000);
        let ctx = ObjectiveContext::new(dist, omega, epsilon, n).unwrap();
        let opt = match optimize_ef(&ctx) {
            Ok(r) if r.converged => r,
            _ => continue, // objective nonpositive everywhere: not an instance
        };
        tested += 1;

        // Dense 2-D grid with three zoom rounds around the running best.
        let t_cap = 1.0 / (1.0 - omega);
        let (mut beta_lo, mut beta_hi) = (1e-6f64, 1e2f64);
        let (mut t_lo, mut t_hi) = (1e-9f64, t_cap);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..4 {
            let mut best_bt = (beta_lo, t_lo);
            for i in 0..=200 {
                let beta =
                    (beta_lo.ln() + (beta_hi.ln() - beta_lo.ln()) * i as f64 / 200.0).exp();
                for j in 0..=200 {
                    let t = t_lo + (t_hi - t_lo) * j as f64 / 200.0;
                    let v = objective(&ctx, beta, t);
                    if v > best {
                        best = v;
                        best_bt = (beta, t);
                    }
                }
            }
            let (bb, bt) = best_bt;
            beta_lo = (bb / 3.0).max(1e-9);
            beta_hi = bb * 3.0;
            t_lo = (bt - (t_hi - t_lo) / 50.0).max(0.0);
            t_hi = (bt + (t_hi - t_lo) / 50.0).min(t_cap);
        }
        assert!(
            (opt.objective - best).abs() <= 1e-6,
            "optimizer {} vs grid {} (ω = {omega}, ε = {epsilon}, n = {n})",
            opt.objective,
            best
        );
    }
    println!("criterion 6: PASS");
}

#[test]
fn criterion_07_inverse_square_scaling() {
    let dist = ChshParams::new(2.7).unwrap().shifted_distribution();
    let (omega, epsilon) = (0.1, 0.01);
    let mut lnd = Vec::new();
    let mut lnn = Vec::new();
    for k in 0..5 {
        let delta_th = 0.02 * 0.5f64.powi(k);
        let (n, _) =
            min_trials(&dist, omega, epsilon, delta_th, MinTrialsForm::ConcaveProgram).unwrap();
        lnd.push(delta_th.ln());
        lnn.push((n as f64).ln());
    }
    let slope = least_squares_slope(&lnd, &lnn);
    assert!(
        (slope - (-2.0)).abs() <= 0.1,
        "fitted exponent {slope}, expected −2.0 ± 0.1"
    );
    println!("criterion 7: PASS");
}

#[test]
fn criterion_08_constant_ns_regime() {
    let params = ChshParams::new(2.7).unwrap();
    let (u, p) = (params.range(), params.p_theta);
    let theta = params.theta_shifted();
    let sigma2 = p * (1.0 - p) * u * u;
    let (n, omega, epsilon, reps) = (100_000u64, 0.01, 0.01, 2000u64);
    let ns_bar = n as f64 * omega;

    // §VII uses the moment construction at the true moments.
    let ms = MomentSpec::new(theta, sigma2, None, None).unwrap();
    let ef = moment_ef(&ms, omega, epsilon, n).unwrap();

    let mut deltas = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let mut rng = StdRng::seed_from_u64(0xACC0_0008 ^ rep);
        let (s_lb, _, s_prime) = simulate_rep(&mut rng, &ef, n, omega, epsilon, u, p);
        deltas.push((s_prime - s_lb) / n as f64);
    }
    let mean = deltas.iter().sum::<f64>() / reps as f64;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;

    let bound = constant_ns_gap_bound(theta, sigma2.sqrt(), ns_bar, epsilon, n).unwrap();
    assert!(mean <= bound, "mean Δ/n = {mean} > constant-n̄s bound {bound}");

    // The paper's Var(Δ/n) = σ²/n̄s claim holds only at leading order in
    // 1/n̄s.  For this two-point distribution the exact variance is available
    // in closed form from eq:vardeltan, Var(Δ/n) = Var(W)/n with the
    // per-trial W = ⟦checked⟧·(−ln T(X,0))/β (unchecked trials contribute
    // exactly 0 since ln t/β = θ).  At n̄s = 10³ the exact value is
    // ≈ 1.20·σ²/n̄s — the ln T nonlinearity over the support width is an
    // O(1/√n̄s) effect — so the Monte Carlo is pinned to the exact variance
    // and the leading-order claim is checked with the matching slack.
    let w_checked = |x: f64| {
        let t_shifted = (1.0 - (1.0 - omega) * ef.t * (-ef.beta * x).exp()) / omega;
        -t_shifted.ln() / ef.beta
    };
    let (w0, wu) = (w_checked(0.0), w_checked(u));
    let e_w = omega * ((1.0 - p) * w0 + p * wu);
    let e_w2 = omega * ((1.0 - p) * w0 * w0 + p * wu * wu);
    let exact_var = (e_w2 - e_w * e_w) / n as f64;

    assert!(
        var >= 0.85 * exact_var && var <= 1.15 * exact_var,
        "Var(Δ/n) = {var} outside ±15% of the exact closed form {exact_var}"
    );
    let leading = sigma2 / ns_bar;
    let finite_ns_ratio = exact_var / leading;
    assert!(
        (0.85..=1.25).contains(&finite_ns_ratio),
        "exact Var(Δ/n) = {exact_var} strays from σ²/n̄s = {leading} beyond \
         the expected O(1/√n̄s) correction (ratio {finite_ns_ratio})"
    );
    println!("criterion 8: PASS");
}

#[test]
fn criterion_09_early_stopping() {
    let params = ChshParams::new(2.7).unwrap();
    let (u, p) = (params.range(), params.p_theta);
    let (m, omega, gamma, epsilon, reps) = (100u64, 0.1, 3.0, 0.05, 10_000u64);
    let n_budget = early_stop_n(m, omega, gamma);
    let ef = tightness_ef_bounded(u, omega, epsilon, n_budget).unwrap();

    let mut failures = 0u64;
    let mut successes = 0u64;
    let mut cond_miss = 0u64;
    for rep in 0..reps {
        let mut rng = StdRng::seed_from_u64(0xACC0_0009 ^ rep);
        let mut acc = BoundAccumulator::new(ef.beta, 0.0, epsilon);
        let mut s_prime = 0.0;
        let mut unchecked = 0u64;
        for _ in 0..n_budget {
            let checked = rng.random::<f64>() < omega;
            let x = if rng.random::<f64>() < p { u } else { 0.0 };
            if checked {
                acc.push(&ef, Some(x), 0).unwrap();
            } else {
                acc.push(&ef, None, 1).unwrap();
                s_prime += x;
                unchecked += 1;
            }
            if unchecked == m {
                break; // later trials: ω = 1, T = 1 — they contribute ln 1.
            }
        }
        if unchecked < m {
            failures += 1;
            continue;
        }
        successes += 1;
        if acc.finalize().s_lb > s_prime {
            cond_miss += 1;
        }
    }

    let fail_bound = (-gamma as f64).exp();
    let fail_rate = failures as f64 / reps as f64;
    let fail_se = (fail_bound * (1.0 - fail_bound) / reps as f64).sqrt();
    assert!(
        fail_rate <= fail_bound + 3.0 * fail_se,
        "failure rate {fail_rate} > e^−γ + 3·SE = {}",
        fail_bound + 3.0 * fail_se
    );

    let cond_bound = epsilon / (1.0 - (-gamma as f64).exp());
    let cond_rate = cond_miss as f64 / successes as f64;
    let cond_se = (cond_bound * (1.0 - cond_bound) / successes as f64).sqrt();
    assert!(
        cond_rate <= cond_bound + 3.0 * cond_se,
        "conditional miss rate {cond_rate} > ε/(1−e^−γ) + 3·SE = {}",
        cond_bound + 3.0 * cond_se
    );
    println!("criterion 9: PASS");
}

#[test]
fn criterion_10_non_iid_robustness() {
    // Adversary: the per-trial success probability flips ±0.1 around the
    // base value depending on the parity of spot checks seen so far — a
    // past-measurable strategy. Values stay in [0, u], so the u-based
    // tightness construction's variance premise (σ² = u²/4) still holds.
    let params = ChshParams::new(2.7).unwrap();
    let (u, p_base) = (params.range(), params.p_theta);
    let (n, omega, epsilon, reps) = (1000u64, 0.1, 0.05, 10_000u64);
    let ef = tightness_ef_bounded(u, omega, epsilon, n).unwrap();

    let mut miss_s = 0u64;
    let mut miss_s_prime = 0u64;
    for rep in 0..reps {
        let mut rng = StdRng::seed_from_u64(0xACC0_0010 ^ rep);
        let mut acc = BoundAccumulator::new(ef.beta, 0.0, epsilon);
        let mut s = 0.0;
        let mut s_prime = 0.0;
        let mut checks_seen = 0u64;
        for _ in 0..n {
            let p_i = if checks_seen % 2 == 0 { p_base + 0.1 } else { p_base - 0.1 };
            let checked = rng.random::<f64>() < omega;
            let x = if rng.random::<f64>() < p_i { u } else { 0.0 };
            if checked {
                acc.push(&ef, Some(x), 0).unwrap();
                checks_seen += 1;
            } else {
                acc.push(&ef, None, 1).unwrap();
                s += p_i * u; // Θ_i = E(X_i | Past_i)
                s_prime += x;
            }
        }
        let s_lb = acc.finalize().s_lb;
        if s_lb > s {
            miss_s += 1;
        }
        if s_lb > s_prime {
            miss_s_prime += 1;
        }
    }
    let threshold = epsilon + 3.0 * (epsilon * (1.0 - epsilon) / reps as f64).sqrt();
    let rate_s = miss_s as f64 / reps as f64;
    let rate_sp = miss_s_prime as f64 / reps as f64;
    assert!(rate_s <= threshold, "adversarial miss rate for S: {rate_s} > {threshold}");
    assert!(rate_sp <= threshold, "adversarial miss rate for S': {rate_sp} > {threshold}");
    println!("criterion 10: PASS");
}

#[test]
fn criterion_11_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_spotcheck");
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [dir_a.path(), dir_b.path()] {
        let status = Command::new(bin)
            .args(["simulate", "fig1", "--n", "1000", "--reps", "10", "--seed", "7"])
            .arg("--out-dir")
            .arg(dir)
            .status()
            .expect("run spotcheck simulate");
        assert!(status.success(), "simulate exited with {status}");
    }
    for file in ["fig1_figure1.csv", "fig1_summary.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        assert!(!a.is_empty(), "{file} is empty");
        assert_eq!(a, b, "{file} differs between identically seeded runs");
    }
    println!("criterion 11: PASS");
}
