//! Closed-form information and risk budgets, and the report rows that
//! compare them against measurements.
//!
//! Each function here is one published formula: generalization error from an
//! information budget, or an information budget from a structural property
//! of the learner (VC dimension, compression size, stability, support size,
//! star number, leave-one-out error). The experiment harness evaluates them
//! next to measured quantities and emits one [`BoundReport`] row per audit.
//!
//! Information arguments are in nats; the log 2 factors of the source
//! formulas appear explicitly.

use serde::Serialize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::info::binary_entropy;

const LN2: f64 = std::f64::consts::LN_2;

/// Slack granted to exact comparisons, covering float round-off only.
pub const EXACT_TOL: f64 = 1e-9;

/// One audited comparison: a measured quantity against its closed-form
/// budget. `slack = bound - measured`; the verdict passes iff
/// `measured <= bound + 4·stderr` (plus round-off tolerance), so exact
/// quantities should report `stderr = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub measured: f64,
    pub stderr: f64,
    pub bound: f64,
    pub slack: f64,
    pub verdict: bool,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, measured: f64, stderr: f64, bound: f64) -> Self {
        BoundReport {
            name: name.into(),
            measured,
            stderr,
            bound,
            slack: bound - measured,
            verdict: measured <= bound + 4.0 * stderr + EXACT_TOL,
        }
    }

    pub const CSV_HEADER: &'static str = "name,measured,stderr,bound,slack,verdict";

    /// The report as one CSV data row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.name,
            self.measured,
            self.stderr,
            self.bound,
            self.slack,
            if self.verdict { "pass" } else { "fail" }
        )
    }
}

/// A leave-one-out error budget θ for n samples; the budget-to-information
/// conversion requires n ≥ 2θ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LooBudget {
    pub theta: f64,
    pub n: usize,
}

impl LooBudget {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "leave-one-out budget must be positive and finite, got {theta}"
            )));
        }
        if (n as f64) < 2.0 * theta {
            return Err(Error::InvalidArgument(format!(
                "leave-one-out budget {theta} needs n >= {}, got n = {n}",
                2.0 * theta
            )));
        }
        Ok(LooBudget { theta, n })
    }

    /// The information budget this leave-one-out bound certifies.
    pub fn bound(&self) -> f64 {
        self.theta * ((self.n as f64 + 1.0) / self.theta).ln() + 2.0 * self.theta * LN2
    }
}

fn require_positive_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    Ok(n as f64)
}

fn require_finite(what: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must be finite and >= 0, got {v}"
        )));
    }
    Ok(v)
}

/// Expected-generalization-error budget for [0,1]-bounded loss from
/// empirical risk and an output-information budget: 2·emp + 3·cmi/n.
pub fn ege_interpolate(emp: f64, cmi: f64, n: usize) -> Result<f64> {
    let n = require_positive_n(n)?;
    let emp = require_finite("empirical risk", emp)?;
    let cmi = require_finite("information budget", cmi)?;
    Ok(2.0 * emp + 3.0 * cmi / n)
}

/// Fast-rate risk budget for interpolating learners from output
/// information: cmi/(n·log 2). Computed as (cmi/log2)/n so that feeding a
/// budget of the form c·log 2 returns exactly c/n.
pub fn ege_fastrate_cmi(cmi: f64, n: usize) -> Result<f64> {
    let n = require_positive_n(n)?;
    let cmi = require_finite("information budget", cmi)?;
    Ok(cmi / LN2 / n)
}

/// Fast-rate risk budget for consistent learners from loss-table
/// information: 1.5·ecmi/n.
pub fn ege_fastrate_ecmi(ecmi: f64, n: usize) -> Result<f64> {
    let n = require_positive_n(n)?;
    let ecmi = require_finite("information budget", ecmi)?;
    Ok(1.5 * ecmi / n)
}

/// Loss-table information budget for any learner whose outputs come from a
/// class of VC dimension d: d·log(6n), valid for every fixed supersample.
pub fn cmi_bound_vc_ecmi(d: usize, n: usize) -> Result<f64> {
    let n = require_positive_n(n)?;
    Ok(d as f64 * (6.0 * n).ln())
}

/// Output-information budget for a size-k compression scheme: k·log(2n).
pub fn cmi_bound_compression(k: usize, n: usize) -> Result<f64> {
    let n = require_positive_n(n)?;
    Ok(k as f64 * (2.0 * n).ln())
}

/// Output-information budget for a *stable* size-k compression scheme:
/// 2k·log 2, uniform in n (≥ k).
pub fn cmi_bound_stable(k: usize) -> f64 {
    2.0 * k as f64 * LN2
}

/// Output-information budget for max-margin separation in dimension d:
/// 2(d+1)·log 2, from its stable compression onto the support vectors.
pub fn cmi_bound_svm(d: usize) -> f64 {
    2.0 * (d as f64 + 1.0) * LN2
}

/// Output-information budget for releasing the whole version space of a
/// class with star number s: 2s·log 2. A nontrivial class has s ≥ 1.
pub fn cmi_bound_version_space(s: usize) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "star number must be at least 1 for a nontrivial class".into(),
        ));
    }
    Ok(2.0 * s as f64 * LN2)
}

/// Output-information budget for the least-element empirical risk minimizer
/// in terms of its own expected risk: 2n·log 2·risk.
pub fn cmi_from_risk_erm(risk: f64, n: usize) -> Result<f64> {
    let n = require_positive_n(n)?;
    let risk = require_finite("risk", risk)?;
    Ok(2.0 * n * LN2 * risk)
}

/// Loss-table information budget from a leave-one-out error budget θ:
/// θ·log((n+1)/θ) + 2θ·log 2, requiring n ≥ 2θ (boundary included).
pub fn ecmi_bound_loo(theta: f64, n: usize) -> Result<f64> {
    Ok(LooBudget::new(theta, n)?.bound())
}

/// Two-sided consistency check between expected risk and loss-table
/// information of a consistent learner:
///
///   (2/3)·risk ≤ ecmi/n   and   ecmi/n ≤ h(risk) + risk·log 2,
///
/// where h is the binary entropy in nats. `tol` absorbs the sampling error
/// of measured inputs (use 0 for exact quantities; round-off slack is
/// always granted).
pub fn sandwich(risk: f64, ecmi: f64, n: usize, tol: f64) -> Result<(bool, bool)> {
    let n = require_positive_n(n)?;
    let risk = require_finite("risk", risk)?;
    let ecmi = require_finite("information value", ecmi)?;
    if risk > 1.0 + EXACT_TOL {
        return Err(Error::InvalidArgument(format!(
            "risk must lie in [0,1], got {risk}"
        )));
    }
    let rate = ecmi / n;
    let lower_ok = 2.0 / 3.0 * risk <= rate + tol + EXACT_TOL;
    let upper_ok = rate <= binary_entropy(risk.min(1.0)) + risk * LN2 + tol + EXACT_TOL;
    Ok((lower_ok, upper_ok))
}

/// Whether k draws with replacement from M equally likely items stay in the
/// regime where at least m items remain unseen with probability ≥ 1/2:
/// true iff k ≤ (M/2)·log(M/m).
pub fn coupon_guarantee(big_m: usize, m: usize, k: usize) -> Result<bool> {
    if m == 0 || m > big_m {
        return Err(Error::InvalidArgument(format!(
            "unseen count m = {m} must satisfy 1 <= m <= {big_m}"
        )));
    }
    Ok(k as f64 <= big_m as f64 / 2.0 * (big_m as f64 / m as f64).ln())
}

/// Monte-Carlo companion to [`coupon_guarantee`]: estimate
/// Pr(at least m of M items unseen after k draws) over `trials` seeded
/// trials. Returns (estimate, binomial standard error).
pub fn coupon_unseen_probability(
    big_m: usize,
    m: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if m == 0 || m > big_m {
        return Err(Error::InvalidArgument(format!(
            "unseen count m = {m} must satisfy 1 <= m <= {big_m}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut seen = vec![false; big_m];
    for _ in 0..trials {
        seen.fill(false);
        let mut distinct = 0usize;
        for _ in 0..k {
            let i = rng.gen_range(0..big_m);
            if !seen[i] {
                seen[i] = true;
                distinct += 1;
            }
        }
        if big_m - distinct >= m {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok((p, (p * (1.0 - p) / trials as f64).sqrt()))
}
