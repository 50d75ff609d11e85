//! Confidence bounds for sequential spot-checking experiments via the
//! estimation-factor method.
//!
//! A spot-checking experiment runs `n` sequential trials. Before each trial,
//! a coin with known probability `ω` of showing "check" decides whether the
//! trial's value `X` is observed (`Y = 0`) or left unchecked (`Y = 1`). The
//! goal is a high-confidence *lower* bound on the sum over unchecked trials,
//! either of the realized values, `S' = Σ Y·X`, or of the past-conditional
//! means, `S = Σ Y·E(X | Past)` — without assuming the trials are i.i.d.
//!
//! The method assigns each trial a nonnegative *estimation factor* `T(X, Y)`
//! of power `β > 0` satisfying
//!
//! ```text
//! E( T(X, Y) · exp(−β·⟦Y=1⟧·U) | Past ) ≤ 1,
//! ```
//!
//! where `U` is the per-trial contribution being estimated. Products of
//! estimation factors combine with Markov's inequality to give the lower
//! confidence bound
//!
//! ```text
//! S_lb = ( Σᵢ ln Tᵢ(Xᵢ, Yᵢ) + ln ε ) / β,      P(S < S_lb) ≤ ε.
//! ```
//!
//! Crate layout:
//!
//! * [`core`] — domain types, extremal estimation factors, bound assembly.
//! * [`optimizer`] — numerical optimization of the expected bound and
//!   minimum-trial computation.
//! * [`analytic`] — closed-form constructions from mean/variance summaries
//!   and evaluable gap bounds.
//! * [`calibration`] — moment estimation, regularization, and planning of
//!   calibration sample sizes.
//! * [`variants`] — biased spot-check probabilities, three-valued checks,
//!   and early stopping.
//! * [`baselines`] — the hypothesis-test-inversion (Gočanin-style) and
//!   Serfling bounds for comparison.
//! * [`chsh`] — seeded CHSH/extractability simulations and figure data.

pub mod analytic;
pub mod baselines;
pub mod calibration;
pub mod chsh;
pub mod core;
pub mod numeric;
pub mod optimizer;
pub mod variants;
