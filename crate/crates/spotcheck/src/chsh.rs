//! Seeded CHSH spot-checking simulations and conversion of confidence
//! bounds to Bell-state extractability bounds; drives figure reproduction.
//!
//! The per-trial variable is the binary
//!
//! ```text
//! X = 1/2 + (I(R) − I_th)/(2(2√2 − I_th)),    I(R) ∈ {−4, +4},
//! ```
//!
//! with `I_th = (16+14√2)/17`, so `X ∈ {x_lb, x_ub}` and a true CHSH value
//! `Î` fixes `P(X = x_ub) = p_θ`. A lower confidence bound `S_lb` on the
//! sum over unchecked trials converts to a bound on the average
//! extractability via `Ξ̄_lb = max(S_lb/C_n, 1/2)` (`1/2` when `C_n = 0`).
//!
//! Simulations use a counter-based keyed generator: every trial's draws are
//! a pure function of `(base_seed, rep, stream, trial_index)`, so any trial
//! is reproducible in isolation and replications parallelize without
//! sharing state. Records are never materialized for analysis — the
//! two-point structure means all four methods only need the counts
//! `(C_n, #x_lb, #x_ub)`, accumulated in one streaming pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::baselines::{self, BaselineError, BinaryRange, GocaninTrials};
use crate::core::{
    BoundAccumulator, ConfidenceReport, CoreError, ExtremalEF, ReferenceDistribution,
    TrialRecord,
};
use crate::optimizer::{self, MinTrialsForm, ObjectiveContext, OptError};

/// `I_th = (16 + 14√2)/17`, the extractability threshold CHSH value.
pub const I_TH: f64 = 2.105_822_933_719_019_5;

const SQRT8: f64 = 2.828_427_124_746_190_1;

/// RNG stream tags: spot-check coins, trial values, calibration values.
const STREAM_Y: u64 = 0;
const STREAM_X: u64 = 1;
const STREAM_CAL: u64 = 2;

#[derive(Debug, Error)]
pub enum ChshError {
    #[error("i_hat = {0} outside [−2√2, 2√2]")]
    IHatOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Optimizer(#[from] OptError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("csv write failed: {0}")]
    Csv(String),
}

/// Derived constants for a true CHSH value `Î`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshParams {
    pub i_hat: f64,
    pub x_lb: f64,
    pub x_ub: f64,
    /// `P(X = x_ub) = (E(X) − x_lb)/(x_ub − x_lb)`.
    pub p_theta: f64,
}

impl ChshParams {
    pub fn new(i_hat: f64) -> Result<Self, ChshError> {
        if !((-SQRT8..=SQRT8).contains(&i_hat)) {
            return Err(ChshError::IHatOutOfRange(i_hat));
        }
        let (x_lb, x_ub) = chsh_x_range();
        let e_x = 0.5 + (i_hat - I_TH) / (2.0 * (SQRT8 - I_TH));
        Ok(Self { i_hat, x_lb, x_ub, p_theta: (e_x - x_lb) / (x_ub - x_lb) })
    }

    /// True mean `E(X) = 1/2 + (Î − I_th)/(2(2√2 − I_th))`.
    pub fn mean(&self) -> f64 {
        self.x_lb + self.p_theta * (self.x_ub - self.x_lb)
    }

    /// Value range `u = x_ub − x_lb = 4/(2√2 − I_th)`.
    pub fn range(&self) -> f64 {
        self.x_ub - self.x_lb
    }

    /// Shifted mean `θ = E(X) − x_lb`.
    pub fn theta_shifted(&self) -> f64 {
        self.p_theta * self.range()
    }

    /// True two-point distribution in shifted units `{0, u}`.
    pub fn shifted_distribution(&self) -> ReferenceDistribution {
        two_point_shifted(self.range(), self.p_theta)
    }

    /// The asymptotic extractability bound `Ξ̌ = clip(E(X), [1/2, 1])`.
    pub fn asymptotic_xi(&self) -> f64 {
        self.mean().clamp(0.5, 1.0)
    }
}

/// `(x_lb, x_ub)` with `x_lb = 1/2 − (4+I_th)/(2(2√2−I_th))` and
/// `x_ub = 1/2 + (4−I_th)/(2(2√2−I_th))`.
pub fn chsh_x_range() -> (f64, f64) {
    let d = 2.0 * (SQRT8 - I_TH);
    (0.5 - (4.0 + I_TH) / d, 0.5 + (4.0 - I_TH) / d)
}

fn two_point_shifted(u: f64, p: f64) -> ReferenceDistribution {
    if p <= 0.0 {
        ReferenceDistribution::point_mass(0.0)
    } else if p >= 1.0 {
        ReferenceDistribution::point_mass(u)
    } else {
        ReferenceDistribution::two_point(0.0, u, p).expect("valid two-point weights")
    }
}

/// Simulation configuration; identical configs give bit-identical outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: u64,
    pub omega: f64,
    pub epsilon: f64,
    pub reps: u64,
    pub base_seed: u64,
    pub i_hat: f64,
    /// Calibration trials per replication for the calibrated EF method.
    pub calibration_n: Option<u64>,
}

impl SimConfig {
    /// Paper-default configuration for a figure kind.
    pub fn defaults_for(kind: FigureKind, base_seed: u64) -> Self {
        let mut cfg = Self {
            n: 100_000,
            omega: 0.1,
            epsilon: 0.01,
            reps: 1000,
            base_seed,
            i_hat: 2.7,
            calibration_n: Some(100),
        };
        match kind {
            FigureKind::Fig1 | FigureKind::Fig2 => {}
            FigureKind::SiFig1 | FigureKind::SiFig2 => cfg.omega = 0.5,
            FigureKind::SiFig3 => {
                cfg.n = 1_000_000_000;
                cfg.omega = 1.0e-5;
            }
        }
        cfg
    }

    fn validate(&self) -> Result<(), ChshError> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(ChshError::InvalidParameter(format!(
                "omega must lie in (0,1), got {}",
                self.omega
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ChshError::InvalidParameter(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if self.reps < 1 {
            return Err(ChshError::InvalidParameter("reps must be ≥ 1".into()));
        }
        if self.n < 1 {
            return Err(ChshError::InvalidParameter("n must be ≥ 1".into()));
        }
        Ok(())
    }
}

// --- counter-based keyed RNG ------------------------------------------------

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Pure function of the key tuple; any draw is reproducible in isolation.
fn keyed_u64(base_seed: u64, rep: u64, stream: u64, index: u64) -> u64 {
    let mut z = base_seed ^ GOLDEN.wrapping_mul(rep.wrapping_add(1));
    z = mix64(z);
    z ^= GOLDEN.wrapping_mul(stream.wrapping_add(2));
    z = mix64(z);
    z ^= GOLDEN.wrapping_mul(index.wrapping_add(3));
    mix64(z)
}

fn keyed_unit(base_seed: u64, rep: u64, stream: u64, index: u64) -> f64 {
    (keyed_u64(base_seed, rep, stream, index) >> 11) as f64 / (1u64 << 53) as f64
}

// --- simulation -------------------------------------------------------------

/// Sufficient statistics of one simulated replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub n: u64,
    pub c_n: u64,
    /// Spot-checked trials observed at `x_lb`.
    pub n_lb: u64,
    /// Spot-checked trials observed at `x_ub`.
    pub n_ub: u64,
}

/// Streams one replication and accumulates counts in O(1) memory.
pub fn simulate_counts(cfg: &SimConfig, rep: u64, params: &ChshParams) -> TrialCounts {
    let mut c = TrialCounts { n: cfg.n, c_n: 0, n_lb: 0, n_ub: 0 };
    for i in 0..cfg.n {
        if keyed_unit(cfg.base_seed, rep, STREAM_Y, i) < cfg.omega {
            if keyed_unit(cfg.base_seed, rep, STREAM_X, i) < params.p_theta {
                c.n_ub += 1;
            } else {
                c.n_lb += 1;
            }
        } else {
            c.c_n += 1;
        }
    }
    c
}

/// Materializes one replication as trial records (same draws as
/// [`simulate_counts`]).
pub fn simulate_trials(cfg: &SimConfig, rep: u64, params: &ChshParams) -> Vec<TrialRecord> {
    (0..cfg.n)
        .map(|i| {
            if keyed_unit(cfg.base_seed, rep, STREAM_Y, i) < cfg.omega {
                let x = if keyed_unit(cfg.base_seed, rep, STREAM_X, i) < params.p_theta {
                    params.x_ub
                } else {
                    params.x_lb
                };
                TrialRecord::checked(i + 1, x)
            } else {
                TrialRecord::unchecked(i + 1)
            }
        })
        .collect()
}

/// Draws the calibration sample for one replication (disjoint RNG stream).
pub fn simulate_calibration(cfg: &SimConfig, rep: u64, params: &ChshParams) -> Vec<f64> {
    let n_c = cfg.calibration_n.unwrap_or(100);
    (0..n_c)
        .map(|i| {
            if keyed_unit(cfg.base_seed, rep, STREAM_CAL, i) < params.p_theta {
                params.x_ub
            } else {
                params.x_lb
            }
        })
        .collect()
}

/// `Ξ̄_lb = max(S_lb/C_n, 1/2)` clipped to `[1/2, 1]`; `1/2` when `C_n = 0`.
pub fn extractability_bound(report: &ConfidenceReport) -> f64 {
    if report.c_n == 0 {
        return 0.5;
    }
    (report.s_lb / report.c_n as f64).clamp(0.5, 1.0)
}

// --- per-replication analyses ----------------------------------------------

/// Re-bases an estimation factor constructed in shifted units (`b = 0`) onto
/// the raw value range with lower bound `b`.
fn unshift_ef(beta: f64, t_shifted: f64, omega: f64, b: f64) -> Result<ExtremalEF, CoreError> {
    ExtremalEF::new(beta, t_shifted * (beta * b).exp(), omega, b)
}

fn ef_report_from_counts(
    ef: &ExtremalEF,
    counts: &TrialCounts,
    params: &ChshParams,
    epsilon: f64,
) -> Result<ConfidenceReport, CoreError> {
    let mut acc = BoundAccumulator::new(ef.beta, ef.b, epsilon);
    acc.push_unchecked_bulk(ef, counts.c_n);
    acc.push_checked_bulk(ef, params.x_lb, counts.n_lb)?;
    acc.push_checked_bulk(ef, params.x_ub, counts.n_ub)?;
    Ok(acc.finalize())
}

/// The numerically optimized EF built from a replication's calibration
/// sample (empirical two-point reference distribution). Falls back to the
/// fixed construction when the optimizer finds no productive power (e.g. a
/// degenerate all-`x_lb` calibration sample).
fn calibrated_ef(
    cfg: &SimConfig,
    rep: u64,
    params: &ChshParams,
) -> Result<ExtremalEF, ChshError> {
    let cal = simulate_calibration(cfg, rep, params);
    let hits = cal.iter().filter(|&&x| x > (params.x_lb + params.x_ub) / 2.0).count();
    let p_hat = hits as f64 / cal.len().max(1) as f64;
    let dist = two_point_shifted(params.range(), p_hat);
    let ctx = ObjectiveContext::new(dist, cfg.omega, cfg.epsilon, cfg.n)?;
    match optimizer::optimize_ef(&ctx) {
        Ok(opt) if opt.converged => {
            Ok(unshift_ef(opt.beta, opt.t, cfg.omega, params.x_lb)?)
        }
        Ok(_) | Err(OptError::NoFeasibleBeta) => Ok(fixed_ef(cfg, params)?),
        Err(e) => Err(e.into()),
    }
}

fn fixed_ef(cfg: &SimConfig, params: &ChshParams) -> Result<ExtremalEF, ChshError> {
    let ef = analytic::tightness_ef_bounded(params.range(), cfg.omega, cfg.epsilon, cfg.n)?;
    Ok(unshift_ef(ef.beta, ef.t, cfg.omega, params.x_lb)?)
}

fn gocanin_report_from_counts(
    counts: &TrialCounts,
    params: &ChshParams,
    omega: f64,
    epsilon: f64,
) -> ConfidenceReport {
    let br = BinaryRange { x_lb: params.x_lb, x_ub: params.x_ub, theta_max: 1.0 };
    let checked = counts.n_lb + counts.n_ub;
    let p_obs = if checked == 0 { 0.0 } else { counts.n_ub as f64 / checked as f64 };
    let theta_lb = baselines::gocanin_theta_lb(p_obs, &br, omega, epsilon, counts.n);
    let s_lb = counts.n as f64 * theta_lb - (counts.n - counts.c_n) as f64 * br.theta_max;
    let average_lb = if counts.c_n == 0 { br.x_lb } else { s_lb / counts.c_n as f64 };
    ConfidenceReport { s_lb, c_n: counts.c_n, average_lb, log_ef_sum: 0.0, beta: 0.0, epsilon }
}

fn serfling_report_from_counts(
    counts: &TrialCounts,
    params: &ChshParams,
    omega: f64,
    epsilon: f64,
) -> ConfidenceReport {
    let checked_sum = counts.n_lb as f64 * params.x_lb + counts.n_ub as f64 * params.x_ub;
    let penalty =
        baselines::serfling_penalty(counts.n, params.x_lb, params.x_ub, omega, epsilon);
    let s_lb = (1.0 - omega) / omega * checked_sum - penalty;
    let average_lb = if counts.c_n == 0 { params.x_lb } else { s_lb / counts.c_n as f64 };
    ConfidenceReport { s_lb, c_n: counts.c_n, average_lb, log_ef_sum: 0.0, beta: 0.0, epsilon }
}

// --- figures ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    Fig1,
    Fig2,
    SiFig1,
    SiFig2,
    SiFig3,
}

impl FigureKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig1" => Some(Self::Fig1),
            "fig2" => Some(Self::Fig2),
            "si_fig1" => Some(Self::SiFig1),
            "si_fig2" => Some(Self::SiFig2),
            "si_fig3" => Some(Self::SiFig3),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::SiFig1 => "si_fig1",
            Self::SiFig2 => "si_fig2",
            Self::SiFig3 => "si_fig3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EfCalibrated,
    EfFixed,
    Gocanin,
    Serfling,
    Asymptotic,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::EfCalibrated => "ef_calibrated",
            Self::EfFixed => "ef_fixed",
            Self::Gocanin => "gocanin",
            Self::Serfling => "serfling",
            Self::Asymptotic => "asymptotic",
        }
    }
}

/// One per-replication extractability bound (`figure1` CSV row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepRow {
    pub i_hat: f64,
    pub method: Method,
    pub rep: u64,
    pub xi_lb: f64,
}

/// Per-`Î`, per-method aggregate (`summary` CSV row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub i_hat: f64,
    pub method: Method,
    pub mean_xi_lb: f64,
    pub stderr: f64,
}

/// One minimum-trials result (`figure2` CSV row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinTrialsRow {
    pub delta_th: f64,
    pub method: Method,
    pub n_min: u64,
    pub divergent: bool,
}

#[derive(Debug, Clone, Default)]
pub struct FigureData {
    pub per_rep: Vec<RepRow>,
    pub summary: Vec<SummaryRow>,
    pub min_trials: Vec<MinTrialsRow>,
}

/// The `Î` grid used by the bound figures: 33 evenly spaced points on
/// `[2, 2√2]`.
pub fn i_hat_grid() -> Vec<f64> {
    (0..33).map(|k| 2.0 + (SQRT8 - 2.0) * k as f64 / 32.0).collect()
}

/// The `δ_th` grid used by the minimum-trials figures: 25 log-spaced points
/// on `[0.005, 0.2]`.
pub fn delta_th_grid() -> Vec<f64> {
    let (lo, hi) = (0.005f64, 0.2f64);
    (0..25)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / 24.0).exp())
        .collect()
}

fn bound_methods() -> [Method; 4] {
    [Method::EfCalibrated, Method::EfFixed, Method::Gocanin, Method::Serfling]
}

/// Runs one replication of the four bound methods at one `Î`.
fn run_rep(
    cfg: &SimConfig,
    rep: u64,
    params: &ChshParams,
) -> Result<[(Method, f64); 4], ChshError> {
    let counts = simulate_counts(cfg, rep, params);
    let cal_ef = calibrated_ef(cfg, rep, params)?;
    let fix_ef = fixed_ef(cfg, params)?;
    let r_cal = ef_report_from_counts(&cal_ef, &counts, params, cfg.epsilon)?;
    let r_fix = ef_report_from_counts(&fix_ef, &counts, params, cfg.epsilon)?;
    let r_goc = gocanin_report_from_counts(&counts, params, cfg.omega, cfg.epsilon);
    let r_ser = serfling_report_from_counts(&counts, params, cfg.omega, cfg.epsilon);
    Ok([
        (Method::EfCalibrated, extractability_bound(&r_cal)),
        (Method::EfFixed, extractability_bound(&r_fix)),
        (Method::Gocanin, extractability_bound(&r_goc)),
        (Method::Serfling, extractability_bound(&r_ser)),
    ])
}

/// Bound-versus-`Î` figure data (fig1/si_fig1/si_fig3).
pub fn run_bound_figure(cfg: &SimConfig, grid: &[f64]) -> Result<FigureData, ChshError> {
    let mut data = FigureData::default();
    for &i_hat in grid {
        let params = ChshParams::new(i_hat)?;
        let rows: Result<Vec<_>, ChshError> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(cfg, rep, &params).map(|r| (rep, r)))
            .collect();
        let rows = rows?;
        for method in bound_methods() {
            let vals: Vec<f64> = rows
                .iter()
                .map(|(_, r)| r.iter().find(|(m, _)| *m == method).unwrap().1)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (vals.len() - 1) as f64
            } else {
                0.0
            };
            let stderr = (var / vals.len() as f64).sqrt();
            data.summary.push(SummaryRow { i_hat, method, mean_xi_lb: mean, stderr });
        }
        data.summary.push(SummaryRow {
            i_hat,
            method: Method::Asymptotic,
            mean_xi_lb: params.asymptotic_xi(),
            stderr: 0.0,
        });
        for (rep, per_method) in rows {
            for (method, xi_lb) in per_method {
                data.per_rep.push(RepRow { i_hat, method, rep, xi_lb });
            }
        }
    }
    Ok(data)
}

/// Minimum-trials figure data (fig2/si_fig2).
pub fn run_min_trials_figure(cfg: &SimConfig, grid: &[f64]) -> Result<FigureData, ChshError> {
    let params = ChshParams::new(cfg.i_hat)?;
    let dist = params.shifted_distribution();
    let br = BinaryRange { x_lb: params.x_lb, x_ub: params.x_ub, theta_max: 1.0 };
    let mut data = FigureData::default();
    for &delta_th in grid {
        match optimizer::min_trials(
            &dist,
            cfg.omega,
            cfg.epsilon,
            delta_th,
            MinTrialsForm::ConcaveProgram,
        ) {
            Ok((n, _)) => data.min_trials.push(MinTrialsRow {
                delta_th,
                method: Method::EfCalibrated,
                n_min: n,
                divergent: false,
            }),
            Err(OptError::Divergent) => data.min_trials.push(MinTrialsRow {
                delta_th,
                method: Method::EfCalibrated,
                n_min: 0,
                divergent: true,
            }),
            Err(e) => return Err(e.into()),
        }
        match baselines::gocanin_min_trials(
            params.mean(),
            &br,
            cfg.omega,
            cfg.epsilon,
            delta_th,
        )? {
            GocaninTrials::Finite(n) => data.min_trials.push(MinTrialsRow {
                delta_th,
                method: Method::Gocanin,
                n_min: n,
                divergent: false,
            }),
            GocaninTrials::Divergent => data.min_trials.push(MinTrialsRow {
                delta_th,
                method: Method::Gocanin,
                n_min: 0,
                divergent: true,
            }),
        }
        let n_serf = baselines::serfling_min_trials(
            params.mean(),
            params.x_lb,
            params.x_ub,
            cfg.omega,
            cfg.epsilon,
            delta_th,
        )?;
        data.min_trials.push(MinTrialsRow {
            delta_th,
            method: Method::Serfling,
            n_min: n_serf,
            divergent: false,
        });
    }
    Ok(data)
}

/// Produces one figure's data tables; deterministic for a given config.
pub fn run_figure(kind: FigureKind, cfg: &SimConfig) -> Result<FigureData, ChshError> {
    cfg.validate()?;
    match kind {
        FigureKind::Fig1 | FigureKind::SiFig1 | FigureKind::SiFig3 => {
            run_bound_figure(cfg, &i_hat_grid())
        }
        FigureKind::Fig2 | FigureKind::SiFig2 => run_min_trials_figure(cfg, &delta_th_grid()),
    }
}

// --- CSV emission -----------------------------------------------------------

/// 17 significant digits, the shortest round-trip-safe fixed width.
fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_figure1_csv<W: std::io::Write>(w: W, rows: &[RepRow]) -> Result<(), ChshError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["i_hat", "method", "rep", "xi_lb"])
        .map_err(|e| ChshError::Csv(e.to_string()))?;
    for r in rows {
        wtr.write_record([
            fmt_g17(r.i_hat),
            r.method.as_str().to_string(),
            r.rep.to_string(),
            fmt_g17(r.xi_lb),
        ])
        .map_err(|e| ChshError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| ChshError::Csv(e.to_string()))
}

pub fn write_summary_csv<W: std::io::Write>(w: W, rows: &[SummaryRow]) -> Result<(), ChshError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["i_hat", "method", "mean_xi_lb", "stderr"])
        .map_err(|e| ChshError::Csv(e.to_string()))?;
    for r in rows {
        wtr.write_record([
            fmt_g17(r.i_hat),
            r.method.as_str().to_string(),
            fmt_g17(r.mean_xi_lb),
            fmt_g17(r.stderr),
        ])
        .map_err(|e| ChshError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| ChshError::Csv(e.to_string()))
}

pub fn write_figure2_csv<W: std::io::Write>(
    w: W,
    rows: &[MinTrialsRow],
) -> Result<(), ChshError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["delta_th", "method", "n_min", "divergent"])
        .map_err(|e| ChshError::Csv(e.to_string()))?;
    for r in rows {
        wtr.write_record([
            fmt_g17(r.delta_th),
            r.method.as_str().to_string(),
            r.n_min.to_string(),
            r.divergent.to_string(),
        ])
        .map_err(|e| ChshError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| ChshError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SimConfig {
        SimConfig {
            n: 2_000,
            omega: 0.1,
            epsilon: 0.01,
            reps: 8,
            base_seed: 42,
            i_hat: 2.7,
            calibration_n: Some(100),
        }
    }

    #[test]
    fn constants_frozen() {
        assert!((I_TH - (16.0 + 14.0 * 2.0f64.sqrt()) / 17.0).abs() < 1e-15);
        let (x_lb, x_ub) = chsh_x_range();
        assert!((x_lb - -3.724_873_734_152_916_3).abs() < 1e-12);
        assert!((x_ub - 1.810_660_171_779_821_3).abs() < 1e-12);
        // x_ub − x_lb = 4/(2√2 − I_th)
        assert!((x_ub - x_lb - 4.0 / (SQRT8 - I_TH)).abs() < 1e-12);
    }

    #[test]
    fn mean_at_2_7_matches_paper() {
        let p = ChshParams::new(2.7).unwrap();
        assert!((p.mean() - 0.911_135_912_065_751_42).abs() < 1e-12);
        assert!((p.asymptotic_xi() - 0.9111).abs() < 1e-4);
    }

    #[test]
    fn p_theta_extremes() {
        // The per-trial Bell score stays ±4-valued even at the Tsirelson
        // extremes, so p_θ = (Î+4)/8 never reaches 0 or 1 on [−2√2, 2√2].
        let hi = ChshParams::new(SQRT8).unwrap().p_theta;
        let lo = ChshParams::new(-SQRT8).unwrap().p_theta;
        assert!((hi - (SQRT8 + 4.0) / 8.0).abs() < 1e-12, "{hi}");
        assert!((lo - (4.0 - SQRT8) / 8.0).abs() < 1e-12, "{lo}");
        assert!((hi + lo - 1.0).abs() < 1e-12);
        assert!(ChshParams::new(3.0).is_err());
    }

    #[test]
    fn spot_fraction_binomial_tolerance() {
        let cfg = SimConfig { n: 1_000_000, ..small_cfg() };
        let params = ChshParams::new(2.7).unwrap();
        let counts = simulate_counts(&cfg, 0, &params);
        let frac = (counts.n_lb + counts.n_ub) as f64 / cfg.n as f64;
        let tol = 4.0 * (cfg.omega * (1.0 - cfg.omega) / cfg.n as f64).sqrt();
        assert!((frac - cfg.omega).abs() < tol, "fraction {frac}");
    }

    #[test]
    fn counts_match_records() {
        let cfg = small_cfg();
        let params = ChshParams::new(2.5).unwrap();
        for rep in 0..3 {
            let counts = simulate_counts(&cfg, rep, &params);
            let records = simulate_trials(&cfg, rep, &params);
            let c_n = records.iter().filter(|r| r.y != 0).count() as u64;
            let n_ub = records
                .iter()
                .filter(|r| r.x.map_or(false, |x| x > 0.0))
                .count() as u64;
            assert_eq!(counts.c_n, c_n);
            assert_eq!(counts.n_ub, n_ub);
            assert_eq!(counts.n_lb + counts.n_ub + counts.c_n, cfg.n);
        }
    }

    #[test]
    fn extractability_clipping() {
        let mut rep = ConfidenceReport {
            s_lb: -5.0,
            c_n: 10,
            average_lb: -0.5,
            log_ef_sum: 0.0,
            beta: 1.0,
            epsilon: 0.01,
        };
        assert_eq!(extractability_bound(&rep), 0.5);
        rep.s_lb = 9.0;
        assert_eq!(extractability_bound(&rep), 0.9);
        rep.c_n = 0;
        assert_eq!(extractability_bound(&rep), 0.5);
        rep.c_n = 5;
        rep.s_lb = 50.0;
        assert_eq!(extractability_bound(&rep), 1.0);
    }

    #[test]
    fn rng_streams_disjoint_and_stable() {
        // Frozen draw: the keyed generator must never change.
        assert_eq!(keyed_u64(42, 0, 0, 0), keyed_u64(42, 0, 0, 0));
        assert_ne!(keyed_u64(42, 0, 0, 0), keyed_u64(42, 0, 1, 0));
        assert_ne!(keyed_u64(42, 0, 0, 0), keyed_u64(42, 1, 0, 0));
        assert_ne!(keyed_u64(42, 0, 0, 0), keyed_u64(43, 0, 0, 0));
        let u = keyed_unit(7, 3, 1, 99);
        assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn run_figure_deterministic() {
        let cfg = small_cfg();
        let a = run_figure(FigureKind::Fig1, &cfg).unwrap();
        let b = run_figure(FigureKind::Fig1, &cfg).unwrap();
        assert_eq!(a.per_rep.len(), b.per_rep.len());
        assert_eq!(a.per_rep.len() as u64, 33 * cfg.reps * 4);
        for (x, y) in a.per_rep.iter().zip(&b.per_rep) {
            assert_eq!(x, y);
        }
        for (x, y) in a.summary.iter().zip(&b.summary) {
            assert_eq!(x, y);
        }
        let mut seeded = cfg;
        seeded.base_seed = 43;
        let c = run_figure(FigureKind::Fig1, &seeded).unwrap();
        assert!(a.per_rep.iter().zip(&c.per_rep).any(|(x, y)| x.xi_lb != y.xi_lb));
    }

    #[test]
    fn summary_consistent_with_per_rep() {
        let cfg = small_cfg();
        let data = run_figure(FigureKind::Fig1, &cfg).unwrap();
        let i_hat = data.summary[0].i_hat;
        for method in bound_methods() {
            let vals: Vec<f64> = data
                .per_rep
                .iter()
                .filter(|r| r.i_hat == i_hat && r.method == method)
                .map(|r| r.xi_lb)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let srow = data
                .summary
                .iter()
                .find(|s| s.i_hat == i_hat && s.method == method)
                .unwrap();
            assert!((srow.mean_xi_lb - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn fig2_rows_cover_methods_and_divergence() {
        let cfg = SimConfig::defaults_for(FigureKind::Fig2, 1);
        let data = run_figure(FigureKind::Fig2, &cfg).unwrap();
        assert_eq!(data.min_trials.len(), delta_th_grid().len() * 3);
        // Gočanin diverges below 0.009874 and is finite above it
        for row in data.min_trials.iter().filter(|r| r.method == Method::Gocanin) {
            if row.delta_th < 0.00987 {
                assert!(row.divergent, "expected divergence at δ = {}", row.delta_th);
            } else if row.delta_th > 0.0105 {
                assert!(!row.divergent);
            }
        }
        // EF and Serfling always finite on the grid
        for row in &data.min_trials {
            if row.method != Method::Gocanin {
                assert!(!row.divergent);
                assert!(row.n_min > 0);
            }
        }
    }

    #[test]
    fn csv_emission_golden_shape() {
        let rows = vec![RepRow {
            i_hat: 2.7,
            method: Method::EfCalibrated,
            rep: 0,
            xi_lb: 0.875,
        }];
        let mut buf = Vec::new();
        write_figure1_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "i_hat,method,rep,xi_lb\n2.7000000000000002e0,ef_calibrated,0,8.7500000000000000e-1\n"
        );
    }
}
