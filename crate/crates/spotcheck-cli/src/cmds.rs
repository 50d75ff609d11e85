//! Subcommand implementations: calibrate, construct, analyze, plan,
//! simulate. Each emits one JSON document (or, for simulate, CSV files plus
//! a resolved-config JSON) and echoes every resolved parameter so a run is
//! auditable from its output alone.

use std::path::{Path, PathBuf};

use spotcheck::analytic::{gap_ef, moment_ef, tightness_ef_bounded, MomentSpec};
use spotcheck::baselines::{
    gocanin_bound, gocanin_min_trials, serfling_bound, serfling_min_trials, BinaryRange,
    GocaninTrials,
};
use spotcheck::calibration::{
    estimate_pooled, estimate_split, plan_calibration, CalibrationResult, Estimator,
};
use spotcheck::chsh::{
    self, chsh_x_range, extractability_bound, ChshParams, FigureKind, SimConfig,
};
use spotcheck::core::{
    confidence_bound, BoundAccumulator, ConfidenceReport, ExtremalEF, TrialRecord,
};
use spotcheck::optimizer::{min_trials, optimize_ef, MinTrialsForm, ObjectiveContext, OptError};
use spotcheck::variants::{conditional_coverage, early_stop_n};

use crate::util::*;
use crate::{
    AnalyzeArgs, CalibrateArgs, ConstructArgs, PlanCalibrationArgs, PlanEarlyStopArgs,
    PlanMinTrialsArgs, SimulateArgs,
};

pub const SPEC_VERSION: &str = env!("CARGO_PKG_VERSION");

fn header(command: &str) -> Json {
    let mut j = Json::new();
    j.str_("spec_version", SPEC_VERSION).str_("command", command);
    j
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

pub fn cmd_calibrate(args: CalibrateArgs, cfg: &FileConfig) -> CliResult<()> {
    let input = need_path(args.input, cfg, "input")?;
    let values = read_values(&input)?;
    let estimator = opt_string(args.estimator, cfg, "estimator", "pooled");
    let result: CalibrationResult = match estimator.as_str() {
        "pooled" => estimate_pooled(&values).map_err(calib_err)?,
        "split" => {
            let n_a = need_u64(args.n_a, cfg, "n_a")?;
            let n_v = need_u64(args.n_v, cfg, "n_v")?;
            estimate_split(&values, n_a as usize, n_v as usize).map_err(calib_err)?
        }
        other => {
            return Err(input_err(format!(
                "unknown estimator {other:?}; expected pooled or split"
            )))
        }
    };

    let mut params = Json::new();
    params.str_("input", &input.display().to_string());
    params.str_("estimator", &estimator);
    if let Estimator::Split { n_a, n_v } = result.estimator {
        params.int("n_a", n_a).int("n_v", n_v);
    }

    let mut j = header("calibrate");
    j.obj("params", params)
        .num("theta_e", result.theta_e)
        .num("sigma2_e", result.sigma2_e)
        .int("n_used", result.n_used);
    emit(args.output.as_deref(), &j.end())
}

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

pub fn cmd_construct(args: ConstructArgs, cfg: &FileConfig) -> CliResult<()> {
    let method = opt_string(args.method, cfg, "method", "");
    if method.is_empty() {
        return Err(input_err(
            "missing required parameter `method` (numerical, moments, fixed, or gap)",
        ));
    }
    let omega = need_f64(args.omega, cfg, "omega")?;

    let mut inputs = Json::new();
    inputs.num("omega", omega);

    // The analytic constructions operate in shifted units (support in
    // [0, ∞)); the emitted EF is re-based onto the declared lower bound b.
    let (ef, extra): (ExtremalEF, Option<Json>) = match method.as_str() {
        "fixed" => {
            let u = need_f64(args.u, cfg, "u")?;
            let epsilon = need_f64(args.epsilon, cfg, "epsilon")?;
            let n = need_u64(args.n, cfg, "n")?;
            let b = opt_f64(args.b, cfg, "b", 0.0)?;
            inputs.num("u", u).num("epsilon", epsilon).int("n", n).num("b", b);
            let ef = tightness_ef_bounded(u, omega, epsilon, n).map_err(analytic_err)?;
            (unshift(&ef, b)?, None)
        }
        "moments" => {
            let theta_e = need_f64(args.theta_e, cfg, "theta_e")?;
            let sigma2_e = need_f64(args.sigma2_e, cfg, "sigma2_e")?;
            let epsilon = need_f64(args.epsilon, cfg, "epsilon")?;
            let n = need_u64(args.n, cfg, "n")?;
            let b = opt_f64(args.b, cfg, "b", 0.0)?;
            inputs
                .num("theta_e", theta_e)
                .num("sigma2_e", sigma2_e)
                .num("epsilon", epsilon)
                .int("n", n)
                .num("b", b);
            let ms = MomentSpec::new(theta_e - b, sigma2_e, args.m3_abs, args.m4)
                .map_err(analytic_err)?;
            let ef = moment_ef(&ms, omega, epsilon, n).map_err(analytic_err)?;
            (unshift(&ef, b)?, None)
        }
        "gap" => {
            let theta_e = need_f64(args.theta_e, cfg, "theta_e")?;
            let sigma2_e = need_f64(args.sigma2_e, cfg, "sigma2_e")?;
            let delta_th = need_f64(args.delta_th, cfg, "delta_th")?;
            let b = opt_f64(args.b, cfg, "b", 0.0)?;
            inputs
                .num("theta_e", theta_e)
                .num("sigma2_e", sigma2_e)
                .num("delta_th", delta_th)
                .num("b", b);
            let ef = gap_ef(theta_e - b, sigma2_e, omega, delta_th).map_err(analytic_err)?;
            (unshift(&ef, b)?, None)
        }
        "numerical" => {
            let dist_path = need_path(args.dist, cfg, "dist")?;
            let epsilon = need_f64(args.epsilon, cfg, "epsilon")?;
            let n = need_u64(args.n, cfg, "n")?;
            let dist = read_dist(&dist_path)?;
            let b = match args.b {
                Some(b) => b,
                None => cfg.f64("b")?.unwrap_or_else(|| dist.min_value()),
            };
            if dist.min_value() < b {
                return Err(input_err(format!(
                    "distribution support extends below b = {b}"
                )));
            }
            inputs
                .str_("dist", &dist_path.display().to_string())
                .num("epsilon", epsilon)
                .int("n", n)
                .num("b", b);
            let ctx = ObjectiveContext::new(dist.shifted(b), omega, epsilon, n)
                .map_err(opt_err)?;
            let r = optimize_ef(&ctx).map_err(opt_err)?;
            let mut extra = Json::new();
            extra.num("objective", r.objective).bool_("converged", r.converged);
            let ef = ExtremalEF::new(r.beta, r.t, omega, 0.0).map_err(core_err)?;
            (unshift(&ef, b)?, Some(extra))
        }
        other => {
            return Err(input_err(format!(
                "unknown method {other:?}; expected numerical, moments, fixed, or gap"
            )))
        }
    };

    let mut j = header("construct");
    j.str_("method", &method)
        .obj("inputs", inputs)
        .num("beta", ef.beta)
        .num("t", ef.t)
        .num("omega", ef.omega)
        .num("b", ef.b);
    if let Some(extra) = extra {
        j.obj("optimizer", extra);
    }
    emit(args.output.as_deref(), &j.end())
}

fn unshift(ef: &ExtremalEF, b: f64) -> CliResult<ExtremalEF> {
    ExtremalEF::new(ef.beta, ef.t * (ef.beta * b).exp(), ef.omega, b).map_err(core_err)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// One entry of an estimation-factor file: a bare EF applies to every
/// record; an entry with `count` covers the next `count` records (the
/// per-block list Protocol 1 permits for mid-experiment updates).
struct EfBlock {
    count: Option<u64>,
    ef: ExtremalEF,
}

fn read_ef_file(path: &Path) -> CliResult<Vec<EfBlock>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| input_err(format!("{}: invalid JSON: {e}", path.display())))?;
    let parse_one = |obj: &serde_json::Value| -> CliResult<EfBlock> {
        let field = |key: &str| -> CliResult<f64> {
            obj.get(key)
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| {
                    input_err(format!("{}: missing numeric field {key:?}", path.display()))
                })
        };
        let count = obj.get("count").and_then(serde_json::Value::as_u64);
        let ef = ExtremalEF::new(field("beta")?, field("t")?, field("omega")?, field("b")?)
            .map_err(core_err)?;
        Ok(EfBlock { count, ef })
    };
    match v.get("blocks").and_then(serde_json::Value::as_array) {
        Some(blocks) if !blocks.is_empty() => blocks.iter().map(parse_one).collect(),
        Some(_) => Err(input_err(format!("{}: empty blocks array", path.display()))),
        None => Ok(vec![parse_one(&v)?]),
    }
}

pub fn cmd_analyze(args: AnalyzeArgs, cfg: &FileConfig) -> CliResult<()> {
    let records_path = need_path(args.records, cfg, "records")?;
    let records = read_records(&records_path, args.format.as_deref())?;
    let epsilon = need_f64(args.epsilon, cfg, "epsilon")?;
    let method = opt_string(args.method, cfg, "method", "ef");

    // --chsh supplies the CHSH value range and emits the extractability
    // bound Ξ̄_lb alongside the confidence report.
    let (chsh_lb, chsh_ub) = chsh_x_range();

    let mut params = Json::new();
    params
        .str_("records", &records_path.display().to_string())
        .num("epsilon", epsilon)
        .str_("method", &method)
        .bool_("chsh", args.chsh);

    let report: ConfidenceReport = match method.as_str() {
        "ef" => {
            let ef_path = need_path(args.ef, cfg, "ef")?;
            params.str_("ef", &ef_path.display().to_string());
            let blocks = read_ef_file(&ef_path)?;
            let beta = blocks[0].ef.beta;
            if let Some(expect) = args.expect_beta {
                params.num("expect_beta", expect);
                let tol = 1e-12 * expect.abs().max(1.0);
                if (beta - expect).abs() > tol {
                    return Err(CliError::Protocol(format!(
                        "estimation-factor power β = {beta:.17e} does not match the \
                         pre-registered --expect-beta {expect:.17e}"
                    )));
                }
            }
            analyze_ef(&records, &blocks, epsilon)?
        }
        "gocanin" => {
            let omega = need_f64(args.omega, cfg, "omega")?;
            let (x_lb, x_ub, theta_max) = if args.chsh {
                (chsh_lb, chsh_ub, args.theta_max.unwrap_or(1.0))
            } else {
                (
                    need_f64(args.x_lb, cfg, "x_lb")?,
                    need_f64(args.x_ub, cfg, "x_ub")?,
                    need_f64(args.theta_max, cfg, "theta_max")?,
                )
            };
            params.num("omega", omega).num("x_lb", x_lb).num("x_ub", x_ub);
            params.num("theta_max", theta_max);
            let br = BinaryRange::new(x_lb, x_ub, theta_max).map_err(baseline_err)?;
            gocanin_bound(&records, &br, omega, epsilon).map_err(baseline_err)?
        }
        "serfling" => {
            let omega = need_f64(args.omega, cfg, "omega")?;
            let (x_lb, x_ub) = if args.chsh {
                (chsh_lb, chsh_ub)
            } else {
                (need_f64(args.x_lb, cfg, "x_lb")?, need_f64(args.x_ub, cfg, "x_ub")?)
            };
            params.num("omega", omega).num("x_lb", x_lb).num("x_ub", x_ub);
            serfling_bound(&records, x_lb, x_ub, omega, epsilon).map_err(baseline_err)?
        }
        other => {
            return Err(input_err(format!(
                "unknown method {other:?}; expected ef, gocanin, or serfling"
            )))
        }
    };

    let mut j = header("analyze");
    j.obj("params", params)
        .num("s_lb", report.s_lb)
        .int("c_n", report.c_n)
        .num("average_lb", report.average_lb)
        .num("log_ef_sum", report.log_ef_sum)
        .num("beta", report.beta)
        .num("epsilon", report.epsilon);
    if args.chsh {
        j.num("xi_lb", extractability_bound(&report));
    }
    emit(args.output.as_deref(), &j.end())
}

fn analyze_ef(
    records: &[TrialRecord],
    blocks: &[EfBlock],
    epsilon: f64,
) -> CliResult<ConfidenceReport> {
    if blocks.len() == 1 && blocks[0].count.is_none() {
        let factors = vec![blocks[0].ef; records.len().max(1)];
        return confidence_bound(records, &factors, epsilon).map_err(analyze_core_err);
    }
    // Per-block list: each block covers its `count` next records.
    let total: u64 = blocks
        .iter()
        .map(|b| b.count.unwrap_or(0))
        .sum();
    if total != records.len() as u64 || blocks.iter().any(|b| b.count.is_none()) {
        return Err(input_err(format!(
            "block counts must each be present and sum to the record count \
             ({} records, blocks cover {total})",
            records.len()
        )));
    }
    let anchor = &blocks[0].ef;
    let mut acc = BoundAccumulator::new(anchor.beta, anchor.b, epsilon);
    let mut offset = 0usize;
    for block in blocks {
        let count = block.count.unwrap() as usize;
        for rec in &records[offset..offset + count] {
            rec.validate(Some(block.ef.b)).map_err(analyze_core_err)?;
            acc.push(&block.ef, rec.x, rec.y).map_err(analyze_core_err)?;
        }
        offset += count;
    }
    Ok(acc.finalize())
}

/// Record-content problems are input errors (exit 2); factor infeasibility
/// and parameter problems stay domain errors (exit 3).
fn analyze_core_err(e: spotcheck::core::CoreError) -> CliError {
    match &e {
        spotcheck::core::CoreError::InvalidRecord { .. } => input_err(e.to_string()),
        _ => core_err(e),
    }
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

pub fn cmd_plan_min_trials(args: PlanMinTrialsArgs, cfg: &FileConfig) -> CliResult<()> {
    let method = opt_string(args.method, cfg, "method", "ef");
    let omega = need_f64(args.omega, cfg, "omega")?;
    let epsilon = need_f64(args.epsilon, cfg, "epsilon")?;
    let delta_th = need_f64(args.delta_th, cfg, "delta_th")?;

    // The target distribution: either the CHSH two-point family at Î, or an
    // explicit reference-distribution file.
    let i_hat = match args.i_hat {
        Some(v) => Some(v),
        None => cfg.f64("i_hat")?,
    };
    let (dist_shifted, theta, x_lb, x_ub, dist_label) = match (i_hat, args.dist) {
        (Some(i_hat), None) => {
            let p = ChshParams::new(i_hat)
                .map_err(|e| input_err(e.to_string()))?;
            let (lo, hi) = chsh_x_range();
            (p.shifted_distribution(), p.mean(), lo, hi, format!("chsh i_hat={i_hat}"))
        }
        (None, Some(path)) => {
            let dist = read_dist(&path)?;
            let lo = dist.min_value();
            let hi = dist
                .support()
                .iter()
                .map(|&(x, _)| x)
                .fold(f64::NEG_INFINITY, f64::max);
            let theta = dist.mean();
            (dist.shifted(lo), theta, lo, hi, path.display().to_string())
        }
        _ => {
            return Err(input_err(
                "exactly one of --i-hat and --dist must be given",
            ))
        }
    };

    let mut params = Json::new();
    params
        .str_("method", &method)
        .str_("dist", &dist_label)
        .num("omega", omega)
        .num("epsilon", epsilon)
        .num("delta_th", delta_th);

    let mut j = header("plan.min-trials");
    match method.as_str() {
        "ef" => {
            match min_trials(&dist_shifted, omega, epsilon, delta_th, MinTrialsForm::ConcaveProgram)
            {
                Ok((n, opt)) => {
                    j.obj("params", params)
                        .int("n_min", n)
                        .bool_("divergent", false)
                        .num("beta", opt.beta)
                        .num("t", opt.t)
                        .num("objective", opt.objective);
                }
                Err(OptError::Divergent) => {
                    j.obj("params", params).int("n_min", 0).bool_("divergent", true);
                }
                Err(e) => return Err(opt_err(e)),
            }
        }
        "gocanin" => {
            let theta_max = opt_f64(args.theta_max, cfg, "theta_max", 1.0)?;
            params.num("theta_max", theta_max).num("theta", theta);
            let br = BinaryRange::new(x_lb, x_ub, theta_max).map_err(baseline_err)?;
            match gocanin_min_trials(theta, &br, omega, epsilon, delta_th)
                .map_err(baseline_err)?
            {
                GocaninTrials::Finite(n) => {
                    j.obj("params", params).int("n_min", n).bool_("divergent", false);
                }
                GocaninTrials::Divergent => {
                    j.obj("params", params).int("n_min", 0).bool_("divergent", true);
                }
            }
        }
        "serfling" => {
            params.num("theta", theta);
            let n = serfling_min_trials(theta, x_lb, x_ub, omega, epsilon, delta_th)
                .map_err(baseline_err)?;
            j.obj("params", params).int("n_min", n).bool_("divergent", false);
        }
        other => {
            return Err(input_err(format!(
                "unknown method {other:?}; expected ef, gocanin, or serfling"
            )))
        }
    }
    emit(args.output.as_deref(), &j.end())
}

pub fn cmd_plan_early_stop(args: PlanEarlyStopArgs, cfg: &FileConfig) -> CliResult<()> {
    let m = need_u64(args.m, cfg, "m")?;
    let omega = need_f64(args.omega, cfg, "omega")?;
    let gamma = need_f64(args.gamma, cfg, "gamma")?;
    if m < 1 {
        return Err(input_err("m must be ≥ 1"));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(input_err(format!("omega must lie in (0,1), got {omega}")));
    }
    if !(gamma > 0.0) {
        return Err(input_err(format!("gamma must be positive, got {gamma}")));
    }
    let n = early_stop_n(m, omega, gamma);

    let mut params = Json::new();
    params.int("m", m).num("omega", omega).num("gamma", gamma);
    let mut j = header("plan.early-stop");
    j.obj("params", params).int("n", n).num("failure_probability", (-gamma).exp());
    if let Some(epsilon) = args.epsilon {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(input_err(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        j.num("epsilon", epsilon);
        j.num("conditional_epsilon", conditional_coverage(epsilon, gamma));
    }
    emit(args.output.as_deref(), &j.end())
}

pub fn cmd_plan_calibration(args: PlanCalibrationArgs, cfg: &FileConfig) -> CliResult<()> {
    let theta_hint = need_f64(args.theta_hint, cfg, "theta_hint")?;
    let sigma2_lo = need_f64(args.sigma2_lo, cfg, "sigma2_lo")?;
    let sigma2_hi = need_f64(args.sigma2_hi, cfg, "sigma2_hi")?;
    let omega = need_f64(args.omega, cfg, "omega")?;
    let epsilon = need_f64(args.epsilon, cfg, "epsilon")?;
    let n = need_u64(args.n, cfg, "n")?;
    let max_inflation = opt_f64(args.max_inflation, cfg, "max_inflation", 0.1)?;

    let plan = plan_calibration(
        theta_hint,
        (sigma2_lo, sigma2_hi),
        args.m3_abs,
        args.m4,
        omega,
        epsilon,
        n,
        max_inflation,
    )
    .map_err(calib_err)?;

    let mut params = Json::new();
    params
        .num("theta_hint", theta_hint)
        .num("sigma2_lo", sigma2_lo)
        .num("sigma2_hi", sigma2_hi)
        .num("omega", omega)
        .num("epsilon", epsilon)
        .int("n", n)
        .num("max_inflation", max_inflation);
    let mut j = header("plan.calibration");
    j.obj("params", params)
        .int("n_a", plan.n_a)
        .int("n_v", plan.n_v)
        .num("r2", plan.r2)
        .num("bound", plan.bound)
        .num("limit_bound", plan.limit_bound)
        .bool_("conservative_m4", plan.conservative_m4);
    emit(args.output.as_deref(), &j.end())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn cmd_simulate(args: SimulateArgs, cfg: &FileConfig) -> CliResult<()> {
    let kind = FigureKind::parse(&args.figure).ok_or_else(|| {
        input_err(format!(
            "unknown figure {:?}; expected fig1, fig2, si_fig1, si_fig2, or si_fig3",
            args.figure
        ))
    })?;

    let seed = match args.seed.or(cfg.u64("seed")?) {
        Some(s) => s,
        None => match std::env::var("SPOTCHECK_SEED") {
            Ok(v) => v
                .parse()
                .map_err(|_| input_err(format!("SPOTCHECK_SEED is not an integer: {v:?}")))?,
            Err(_) => 0,
        },
    };

    let mut sim = SimConfig::defaults_for(kind, seed);
    if let Some(n) = args.n.or(cfg.u64("n")?) {
        sim.n = n;
    }
    if let Some(omega) = args.omega.or(cfg.f64("omega")?) {
        sim.omega = omega;
    }
    if let Some(epsilon) = args.epsilon.or(cfg.f64("epsilon")?) {
        sim.epsilon = epsilon;
    }
    if let Some(reps) = args.reps.or(cfg.u64("reps")?) {
        sim.reps = reps;
    }
    if let Some(c) = args.calibration_n.or(cfg.u64("calibration_n")?) {
        sim.calibration_n = Some(c);
    }
    let out_dir = args
        .out_dir
        .or_else(|| cfg.string("out_dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| input_err(format!("cannot create {}: {e}", out_dir.display())))?;

    let data = chsh::run_figure(kind, &sim).map_err(chsh_err)?;

    // Resolved configuration is part of the audit trail.
    let mut j = header("simulate");
    j.str_("figure", kind.as_str())
        .int("n", sim.n)
        .num("omega", sim.omega)
        .num("epsilon", sim.epsilon)
        .int("reps", sim.reps)
        .int("seed", sim.base_seed);
    if let Some(c) = sim.calibration_n {
        j.int("calibration_n", c);
    }
    let config_doc = format!("{}\n", j.end());

    let mut written: Vec<PathBuf> = Vec::new();
    let prefix = kind.as_str();
    if !data.per_rep.is_empty() {
        let mut buf = Vec::new();
        chsh::write_figure1_csv(&mut buf, &data.per_rep).map_err(chsh_err)?;
        let path = out_dir.join(format!("{prefix}_figure1.csv"));
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    if !data.summary.is_empty() {
        let mut buf = Vec::new();
        chsh::write_summary_csv(&mut buf, &data.summary).map_err(chsh_err)?;
        let path = out_dir.join(format!("{prefix}_summary.csv"));
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    if !data.min_trials.is_empty() {
        let mut buf = Vec::new();
        chsh::write_figure2_csv(&mut buf, &data.min_trials).map_err(chsh_err)?;
        let path = out_dir.join(format!("{prefix}_figure2.csv"));
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    let config_path = out_dir.join(format!("{prefix}_config.json"));
    write_atomic(&config_path, config_doc.as_bytes())?;
    written.push(config_path);

    print_summary(&data);
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_summary(data: &chsh::FigureData) {
    if !data.summary.is_empty() {
        println!("{:>10}  {:>13}  {:>22}  {:>22}", "i_hat", "method", "mean_xi_lb", "stderr");
        for row in &data.summary {
            println!(
                "{:>10.6}  {:>13}  {:>22.15e}  {:>22.15e}",
                row.i_hat,
                row.method.as_str(),
                row.mean_xi_lb,
                row.stderr
            );
        }
    }
    if !data.min_trials.is_empty() {
        println!("{:>12}  {:>10}  {:>14}  {:>9}", "delta_th", "method", "n_min", "divergent");
        for row in &data.min_trials {
            println!(
                "{:>12.6}  {:>10}  {:>14}  {:>9}",
                row.delta_th,
                row.method.as_str(),
                row.n_min,
                row.divergent
            );
        }
    }
}
