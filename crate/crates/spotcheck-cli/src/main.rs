//! `spotcheck` — estimation-factor confidence bounds for sequential
//! spot-checking experiments.
//!
//! Subcommands mirror the experimental workflow: `calibrate` estimates
//! moments from a calibration sample, `construct` builds an estimation
//! factor (fixing its power β *before* the data is analyzed), `analyze`
//! computes the confidence bound from trial records, `plan` sizes an
//! experiment, and `simulate` reproduces the paper's CHSH figures.
//!
//! Exit codes are a stable contract: 0 success, 2 input error, 3
//! domain/infeasibility error, 4 protocol violation (β pre-registration
//! mismatch).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmds;
mod util;

use util::{CliError, FileConfig};

#[derive(Parser)]
#[command(name = "spotcheck", version, about = "Estimation-factor confidence bounds for spot-checking experiments")]
struct Cli {
    /// Flat key=value configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate calibration moments (θ_e, σ_e²) from a sample file.
    Calibrate(CalibrateArgs),
    /// Construct an estimation factor (β, t) by one of four methods.
    Construct(ConstructArgs),
    /// Compute the lower confidence bound from trial records.
    Analyze(AnalyzeArgs),
    /// Size an experiment: minimum trials, early stopping, calibration.
    Plan {
        #[command(subcommand)]
        mode: PlanCmd,
    },
    /// Run a seeded figure simulation and emit its CSV data.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum PlanCmd {
    /// Minimum trials to certify a target gap δ_th.
    MinTrials(PlanMinTrialsArgs),
    /// Trials needed before early stopping at m unchecked trials.
    EarlyStop(PlanEarlyStopArgs),
    /// Calibration split sizes (n_a, n_v) and regularization r².
    Calibration(PlanCalibrationArgs),
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// Calibration sample: one numeric value per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Moment estimator: pooled (default) or split.
    #[arg(long)]
    estimator: Option<String>,
    /// Mean-block size for the split estimator.
    #[arg(long)]
    n_a: Option<u64>,
    /// Variance pair count for the split estimator (uses 2·n_v samples).
    #[arg(long)]
    n_v: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConstructArgs {
    /// Construction method: numerical, moments, fixed, or gap.
    #[arg(long)]
    method: Option<String>,
    /// Spot-check probability ω.
    #[arg(long)]
    omega: Option<f64>,
    /// Error bound ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Planned number of trials n.
    #[arg(long)]
    n: Option<u64>,
    /// Lower bound b on X (default 0; numerical defaults to the support minimum).
    #[arg(long)]
    b: Option<f64>,
    /// Estimated mean θ_e (moments, gap).
    #[arg(long)]
    theta_e: Option<f64>,
    /// Estimated variance σ_e² (moments, gap).
    #[arg(long)]
    sigma2_e: Option<f64>,
    /// Absolute third central moment (moments; optional).
    #[arg(long)]
    m3_abs: Option<f64>,
    /// Fourth central moment (moments; optional).
    #[arg(long)]
    m4: Option<f64>,
    /// Value range width u for the bounded fixed construction.
    #[arg(long)]
    u: Option<f64>,
    /// Gap threshold δ_th (gap).
    #[arg(long)]
    delta_th: Option<f64>,
    /// Reference distribution CSV (`x,p` header) for the numerical method.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Write the EF JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Trial records (CSV `i,y,x` or JSONL).
    #[arg(long)]
    records: Option<PathBuf>,
    /// Record format override: csv or jsonl.
    #[arg(long)]
    format: Option<String>,
    /// Estimation-factor JSON from `construct` (or a `{"blocks": […]}` list).
    #[arg(long)]
    ef: Option<PathBuf>,
    /// Bound method: ef (default), gocanin, or serfling.
    #[arg(long)]
    method: Option<String>,
    /// Error bound ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Pre-registered power β; mismatch with the EF file exits 4.
    #[arg(long)]
    expect_beta: Option<f64>,
    /// Use the CHSH value range and report the extractability bound Ξ̄_lb.
    #[arg(long)]
    chsh: bool,
    /// Spot-check probability ω (gocanin, serfling).
    #[arg(long)]
    omega: Option<f64>,
    /// Lower end of the two-element value set (gocanin, serfling).
    #[arg(long)]
    x_lb: Option<f64>,
    /// Upper end of the two-element value set (gocanin, serfling).
    #[arg(long)]
    x_ub: Option<f64>,
    /// Worst-case unchecked mean θ_max (gocanin).
    #[arg(long)]
    theta_max: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlanMinTrialsArgs {
    /// Bound method: ef (default), gocanin, or serfling.
    #[arg(long)]
    method: Option<String>,
    /// Spot-check probability ω.
    #[arg(long)]
    omega: Option<f64>,
    /// Error bound ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Target expected gap per unchecked trial δ_th.
    #[arg(long)]
    delta_th: Option<f64>,
    /// CHSH value Î: plan against the CHSH two-point distribution.
    #[arg(long)]
    i_hat: Option<f64>,
    /// Reference distribution CSV (`x,p` header); alternative to --i-hat.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Worst-case unchecked mean θ_max (gocanin; default 1).
    #[arg(long)]
    theta_max: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlanEarlyStopArgs {
    /// Target number of unchecked trials m.
    #[arg(long)]
    m: Option<u64>,
    /// Spot-check probability ω.
    #[arg(long)]
    omega: Option<f64>,
    /// Failure exponent γ: stopping fails with probability ≤ e^{−γ}.
    #[arg(long)]
    gamma: Option<f64>,
    /// Also report the conditional error bound ε/(1−e^{−γ}).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlanCalibrationArgs {
    /// Anticipated (shifted) mean θ.
    #[arg(long)]
    theta_hint: Option<f64>,
    /// Lower bracket on the variance σ².
    #[arg(long)]
    sigma2_lo: Option<f64>,
    /// Upper bracket on the variance σ².
    #[arg(long)]
    sigma2_hi: Option<f64>,
    /// Absolute third central moment hint (optional).
    #[arg(long)]
    m3_abs: Option<f64>,
    /// Fourth central moment hint (optional).
    #[arg(long)]
    m4: Option<f64>,
    /// Spot-check probability ω.
    #[arg(long)]
    omega: Option<f64>,
    /// Error bound ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Planned number of trials n.
    #[arg(long)]
    n: Option<u64>,
    /// Allowed relative inflation of the planning bound over its
    /// infinite-calibration limit (default 0.1).
    #[arg(long)]
    max_inflation: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Figure tag: fig1, fig2, si_fig1, si_fig2, or si_fig3.
    figure: String,
    /// Trials per replication.
    #[arg(long)]
    n: Option<u64>,
    /// Spot-check probability ω.
    #[arg(long)]
    omega: Option<f64>,
    /// Error bound ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<u64>,
    /// Base seed (default: $SPOTCHECK_SEED, else 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Calibration trials per replication for the calibrated EF method.
    #[arg(long)]
    calibration_n: Option<u64>,
    /// Directory for the emitted CSV/JSON files (default: current).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Calibrate(args) => cmds::cmd_calibrate(args, &cfg),
        Cmd::Construct(args) => cmds::cmd_construct(args, &cfg),
        Cmd::Analyze(args) => cmds::cmd_analyze(args, &cfg),
        Cmd::Plan { mode } => match mode {
            PlanCmd::MinTrials(args) => cmds::cmd_plan_min_trials(args, &cfg),
            PlanCmd::EarlyStop(args) => cmds::cmd_plan_early_stop(args, &cfg),
            PlanCmd::Calibration(args) => cmds::cmd_plan_calibration(args, &cfg),
        },
        Cmd::Simulate(args) => cmds::cmd_simulate(args, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
