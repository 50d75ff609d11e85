//! Domain types, extremal estimation-factor evaluation, and confidence-bound
//! assembly.
//!
//! For a trial with spot-check indicator `Y` (`Y = 0` means checked, value
//! observed) and check probability `ω`, the extremal estimation factors of
//! power `β` form the family
//!
//! ```text
//! T(x, y) = (1 − y)·(1 − (1−ω)·t·e^{−βx})/ω + y·t,
//! ```
//!
//! valid for values bounded below by `b` when `0 ≤ t ≤ e^{βb}/(1−ω)`. All
//! internal arithmetic standardizes to shifted values `x − b` with
//! `t' = t·e^{−βb}` (the checked branch is algebraically identical either
//! way; only the unchecked branch changes), so one code path serves every
//! lower bound `b`.
//!
//! Given per-trial factors sharing one power `β`, the lower confidence bound
//! at error bound `ε` is `S_lb = (Σ ln Tᵢ + ln ε)/β` and holds
//! simultaneously for `Σ Y·X` and `Σ Y·E(X|Past)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::NeumaierSum;

/// Slack below zero tolerated in the checked branch before the parameters
/// are declared infeasible; values in `[−CLAMP_TOL, 0)` clamp to `0`.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CoreError {
    /// The checked-branch value fell below `−1e−12`: the `(β, t)` pair is
    /// infeasible for this observed value.
    #[error("checked-branch estimation factor is negative ({value:.6e}) at x = {x}")]
    NonPositiveFactor { value: f64, x: f64 },
    /// Estimation factors passed to one bound must share a single power β.
    #[error("estimation factors mix powers: found β = {found}, expected β = {expected}")]
    MixedPower { expected: f64, found: f64 },
    #[error("record/estimation-factor length mismatch: {records} records, {efs} factors")]
    LengthMismatch { records: usize, efs: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid record at index {index}: {reason}")]
    InvalidRecord { index: u64, reason: String },
}

/// One trial's spot-check flag and (possibly absent) observed value.
///
/// `y = 0` marks a spot-checked trial and requires `x` to be present;
/// any other `y` leaves the trial unchecked and `x` absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based trial index.
    pub i: u64,
    pub y: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

impl TrialRecord {
    pub fn checked(i: u64, x: f64) -> Self {
        Self { i, y: 0, x: Some(x) }
    }

    pub fn unchecked(i: u64) -> Self {
        Self { i, y: 1, x: None }
    }

    /// Validates the presence invariant and, when `b` is given, the lower
    /// bound on observed values.
    pub fn validate(&self, b: Option<f64>) -> Result<(), CoreError> {
        match (self.y, self.x) {
            (0, None) => Err(CoreError::InvalidRecord {
                index: self.i,
                reason: "spot-checked trial (y = 0) is missing x".into(),
            }),
            (0, Some(x)) => {
                if !x.is_finite() {
                    return Err(CoreError::InvalidRecord {
                        index: self.i,
                        reason: format!("x = {x} is not finite"),
                    });
                }
                if let Some(b) = b {
                    if x < b {
                        return Err(CoreError::InvalidRecord {
                            index: self.i,
                            reason: format!("x = {x} is below the declared lower bound b = {b}"),
                        });
                    }
                }
                Ok(())
            }
            (_, Some(_)) => Err(CoreError::InvalidRecord {
                index: self.i,
                reason: "unchecked trial (y ≠ 0) carries an x value".into(),
            }),
            (_, None) => Ok(()),
        }
    }
}

/// Per-experiment parameters of the basic spot-checking model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotModel {
    /// Spot-check probability, in (0, 1).
    pub omega: f64,
    /// Known lower bound on X.
    pub b: f64,
    /// Error bound (one minus the confidence level), in (0, 1).
    pub epsilon: f64,
    /// Total number of trials.
    pub n: u64,
}

impl SpotModel {
    pub fn new(omega: f64, b: f64, epsilon: f64, n: u64) -> Result<Self, CoreError> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "omega must lie in (0,1), got {omega}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        if n == 0 {
            return Err(CoreError::InvalidParameter("n must be at least 1".into()));
        }
        if !b.is_finite() {
            return Err(CoreError::InvalidParameter(format!("b must be finite, got {b}")));
        }
        Ok(Self { omega, b, epsilon, n })
    }
}

/// An extremal estimation factor `(β, t)` for check probability `ω` and
/// lower bound `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalEF {
    pub beta: f64,
    pub t: f64,
    pub omega: f64,
    pub b: f64,
}

impl ExtremalEF {
    /// Constructs the factor, enforcing `0 ≤ t·e^{−βb} ≤ 1/(1−ω)` (the
    /// nonnegativity of the checked branch on `[b, ∞)`).
    pub fn new(beta: f64, t: f64, omega: f64, b: f64) -> Result<Self, CoreError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !(omega > 0.0 && omega < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "omega must lie in (0,1), got {omega}"
            )));
        }
        let shifted = t * (-beta * b).exp();
        if !(t >= 0.0) || shifted > 1.0 / (1.0 - omega) * (1.0 + 1e-12) {
            return Err(CoreError::InvalidParameter(format!(
                "t = {t} violates 0 ≤ t·e^(−βb) ≤ 1/(1−ω) (shifted t' = {shifted})"
            )));
        }
        Ok(Self { beta, t, omega, b })
    }

    /// The unchecked-branch value after shifting, `t' = t·e^{−βb}`.
    pub fn t_shifted(&self) -> f64 {
        self.t * (-self.beta * self.b).exp()
    }
}

/// A finite discrete distribution of X: the reference distribution `ν` used
/// by optimization and simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    support: Vec<(f64, f64)>,
}

impl ReferenceDistribution {
    /// Builds a distribution from `(value, probability)` pairs. Probabilities
    /// must be nonnegative and sum to 1 within 1e−12; duplicate values merge.
    pub fn new(mut support: Vec<(f64, f64)>) -> Result<Self, CoreError> {
        if support.is_empty() {
            return Err(CoreError::InvalidParameter("empty support".into()));
        }
        let mut total = 0.0;
        for &(x, p) in &support {
            if !x.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "support value {x} is not finite"
                )));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "probability {p} at value {x} is negative or not finite"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1 within 1e-12"
            )));
        }
        support.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(support.len());
        for (x, p) in support {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += p,
                _ => merged.push((x, p)),
            }
        }
        Ok(Self { support: merged })
    }

    /// Point mass at `x`.
    pub fn point_mass(x: f64) -> Self {
        Self { support: vec![(x, 1.0)] }
    }

    /// Two-point distribution taking `hi` with probability `p` and `lo`
    /// otherwise.
    pub fn two_point(lo: f64, hi: f64, p: f64) -> Result<Self, CoreError> {
        Self::new(vec![(lo, 1.0 - p), (hi, p)])
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn min_value(&self) -> f64 {
        self.support[0].0
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(x, p)| x * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support.iter().map(|&(x, p)| p * (x - m) * (x - m)).sum()
    }

    /// Central moment of order `k`.
    pub fn central_moment(&self, k: u32) -> f64 {
        let m = self.mean();
        self.support
            .iter()
            .map(|&(x, p)| p * (x - m).powi(k as i32))
            .sum()
    }

    /// Expectation of `f(X)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support.iter().map(|&(x, p)| p * f(x)).sum()
    }

    /// The distribution of `X − b`.
    pub fn shifted(&self, b: f64) -> Self {
        Self {
            support: self.support.iter().map(|&(x, p)| (x - b, p)).collect(),
        }
    }

    /// Mixture `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self, CoreError> {
        let mut support: Vec<(f64, f64)> =
            self.support.iter().map(|&(x, p)| (x, lambda * p)).collect();
        support.extend(other.support.iter().map(|&(x, p)| (x, (1.0 - lambda) * p)));
        Self::new(support)
    }
}

/// The assembled lower confidence bound and its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    /// Lower confidence bound on the sum over unchecked trials; `−∞` is a
    /// valid (if vacuous) bound and is represented, never an error.
    pub s_lb: f64,
    /// Number of unchecked trials.
    pub c_n: u64,
    /// Lower confidence bound on the per-unchecked-trial average: `b` when
    /// `c_n = 0`, else `s_lb / c_n`.
    pub average_lb: f64,
    /// Unshifted `Σ ln Tᵢ`, so that `s_lb = (log_ef_sum + ln ε)/β` exactly.
    pub log_ef_sum: f64,
    pub beta: f64,
    pub epsilon: f64,
}

/// Evaluates the extremal estimation factor on one trial outcome.
///
/// Returns the *shifted* factor value: `t·e^{−βb}` for `y ≠ 0`, and
/// `(1 − (1−ω)·t·e^{−βx})/ω` for `y = 0` (identical in shifted and
/// unshifted form). Checked-branch values in `[−1e−12, 0)` clamp to `0`;
/// anything lower is an infeasibility error.
pub fn ef_value(ef: &ExtremalEF, x: f64, y: u8) -> Result<f64, CoreError> {
    if y != 0 {
        return Ok(ef.t_shifted());
    }
    let raw = (1.0 - (1.0 - ef.omega) * ef.t * (-ef.beta * x).exp()) / ef.omega;
    if raw < -CLAMP_TOL {
        return Err(CoreError::NonPositiveFactor { value: raw, x });
    }
    Ok(raw.max(0.0))
}

/// Streaming assembler of the confidence bound: one pass, O(1) memory.
///
/// Accumulates *shifted* log-factors with compensated summation; `finalize`
/// restores the unshifted sum by adding `β·b·C_n` (the two differ only in
/// the unchecked branch, by `ln e^{−βb}` per unchecked trial).
#[derive(Debug, Clone)]
pub struct BoundAccumulator {
    beta: f64,
    b: f64,
    epsilon: f64,
    shifted_log_sum: NeumaierSum,
    hit_zero: bool,
    c_n: u64,
    trials: u64,
}

impl BoundAccumulator {
    pub fn new(beta: f64, b: f64, epsilon: f64) -> Self {
        Self {
            beta,
            b,
            epsilon,
            shifted_log_sum: NeumaierSum::new(),
            hit_zero: false,
            c_n: 0,
            trials: 0,
        }
    }

    /// Adds one trial evaluated under `ef`; `x` is ignored unless `y = 0`.
    pub fn push(&mut self, ef: &ExtremalEF, x: Option<f64>, y: u8) -> Result<(), CoreError> {
        if ef.beta != self.beta {
            return Err(CoreError::MixedPower {
                expected: self.beta,
                found: ef.beta,
            });
        }
        self.trials += 1;
        if y != 0 {
            self.c_n += 1;
            self.push_ln(ef.t_shifted());
            return Ok(());
        }
        let x = x.ok_or(CoreError::InvalidRecord {
            index: self.trials,
            reason: "spot-checked trial (y = 0) is missing x".into(),
        })?;
        let value = ef_value(ef, x, 0)?;
        self.push_ln(value);
        Ok(())
    }

    /// Adds `count` unchecked trials sharing the factor value `t_shifted`.
    pub fn push_unchecked_bulk(&mut self, ef: &ExtremalEF, count: u64) {
        self.trials += count;
        self.c_n += count;
        if count > 0 {
            let ln_t = ef.t_shifted().ln();
            if ln_t == f64::NEG_INFINITY {
                self.hit_zero = true;
            } else {
                self.shifted_log_sum.add(ln_t * count as f64);
            }
        }
    }

    /// Adds `count` checked trials that all observed the same value `x`.
    pub fn push_checked_bulk(&mut self, ef: &ExtremalEF, x: f64, count: u64) -> Result<(), CoreError> {
        self.trials += count;
        if count > 0 {
            let v = ef_value(ef, x, 0)?;
            let ln_v = v.ln();
            if ln_v == f64::NEG_INFINITY {
                self.hit_zero = true;
            } else {
                self.shifted_log_sum.add(ln_v * count as f64);
            }
        }
        Ok(())
    }

    fn push_ln(&mut self, value: f64) {
        let ln_v = value.ln();
        if ln_v == f64::NEG_INFINITY {
            self.hit_zero = true;
        } else {
            self.shifted_log_sum.add(ln_v);
        }
    }

    pub fn c_n(&self) -> u64 {
        self.c_n
    }

    pub fn finalize(&self) -> ConfidenceReport {
        let log_ef_sum = if self.hit_zero {
            f64::NEG_INFINITY
        } else {
            self.shifted_log_sum.total() + self.beta * self.b * self.c_n as f64
        };
        let s_lb = (log_ef_sum + self.epsilon.ln()) / self.beta;
        let average_lb = if self.c_n == 0 {
            self.b
        } else {
            s_lb / self.c_n as f64
        };
        ConfidenceReport {
            s_lb,
            c_n: self.c_n,
            average_lb,
            log_ef_sum,
            beta: self.beta,
            epsilon: self.epsilon,
        }
    }
}

/// Computes the lower confidence bound from per-trial records and factors.
///
/// Requires one factor per trial, all sharing one power `β`. A degenerate
/// empty record list is accepted with a single anchor factor supplying
/// `β` and `b` (the pure-Markov budget `S_lb = ln(ε)/β`). A factor value of
/// exactly zero yields `S_lb = −∞`, which is a valid bound, not an error.
pub fn confidence_bound(
    records: &[TrialRecord],
    efs: &[ExtremalEF],
    epsilon: f64,
) -> Result<ConfidenceReport, CoreError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    let anchor = match (records.len(), efs.len()) {
        (0, 1) => &efs[0],
        (r, e) if r == e && r > 0 => &efs[0],
        (r, e) => return Err(CoreError::LengthMismatch { records: r, efs: e }),
    };
    let mut acc = BoundAccumulator::new(anchor.beta, anchor.b, epsilon);
    for (rec, ef) in records.iter().zip(efs) {
        rec.validate(Some(ef.b))?;
        acc.push(ef, rec.x, rec.y)?;
    }
    Ok(acc.finalize())
}

/// The estimation-factor inequality's left side,
/// `E_ν( T(X,Y)·e^{−β·⟦Y=1⟦·X} )` with `Y ⫫ X` and `P(Y=0) = ω`, as an
/// exact finite sum over the support.
///
/// Negative checked-branch values clamp to 0 (a nonnegativity violation of
/// the factor shows up here as a left side exceeding 1, not as an error).
pub fn ef_inequality_lhs(ef: &ExtremalEF, dist: &ReferenceDistribution, omega: f64) -> f64 {
    dist.expect(|x| {
        let checked = ((1.0 - (1.0 - ef.omega) * ef.t * (-ef.beta * x).exp()) / ef.omega).max(0.0);
        let unchecked = ef.t * (-ef.beta * x).exp();
        omega * checked + (1.0 - omega) * unchecked
    })
}

/// Evaluates the inequality's left side for both estimand conventions:
/// `U = X` (per-realization) and `U = E(X)` (per-mean).
///
/// Used by tests of the equivalence `lhs_x ≤ 1 ⇔ lhs_mean ≤ 1` over the
/// model family.
pub fn u_equivalence_check(
    ef: &ExtremalEF,
    dist: &ReferenceDistribution,
    omega: f64,
) -> (f64, f64) {
    let lhs_x = ef_inequality_lhs(ef, dist, omega);
    let checked_mean = dist.expect(|x| {
        ((1.0 - (1.0 - ef.omega) * ef.t * (-ef.beta * x).exp()) / ef.omega).max(0.0)
    });
    let lhs_mean =
        omega * checked_mean + (1.0 - omega) * ef.t * (-ef.beta * dist.mean()).exp();
    (lhs_x, lhs_mean)
}

// ---------------------------------------------------------------------------
// Serialization: JSONL and CSV trial-record formats.
// ---------------------------------------------------------------------------

/// Reads records from JSONL: one `{"i": …, "y": …, "x": …}` object per line,
/// `x` absent when the trial is unchecked.
pub fn read_records_jsonl<R: std::io::BufRead>(reader: R) -> Result<Vec<TrialRecord>, CoreError> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CoreError::InvalidRecord {
            index: lineno as u64 + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(&line).map_err(|e| CoreError::InvalidRecord {
            index: lineno as u64 + 1,
            reason: e.to_string(),
        })?;
        rec.validate(None)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records_jsonl<W: std::io::Write>(
    mut writer: W,
    records: &[TrialRecord],
) -> std::io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut writer, rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records from CSV with header `i,y,x`; `x` empty when unobserved.
pub fn read_records_csv<R: std::io::Read>(reader: R) -> Result<Vec<TrialRecord>, CoreError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out = Vec::new();
    for (rowno, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| CoreError::InvalidRecord {
            index: rowno as u64 + 1,
            reason: e.to_string(),
        })?;
        let rec = TrialRecord { i: row.i, y: row.y, x: row.x };
        rec.validate(None)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records_csv<W: std::io::Write>(
    writer: W,
    records: &[TrialRecord],
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["i", "y", "x"])?;
    for rec in records {
        let x = rec.x.map(|v| format!("{v:.17e}")).unwrap_or_default();
        wtr.write_record([rec.i.to_string(), rec.y.to_string(), x])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CsvRow {
    i: u64,
    y: u8,
    #[serde(deserialize_with = "csv::invalid_option")]
    x: Option<f64>,
}
