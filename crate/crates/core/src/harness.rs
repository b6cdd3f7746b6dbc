//! Config-driven experiment runners: the operational surface behind the CLI.
//!
//! A JSON [`ExperimentConfig`] names a learner, a data source, sample sizes,
//! a draw budget, a seed, and the budgets to audit. Running it produces a
//! [`RunRecord`]: per-n estimate rows (CSV columns
//! `n,mean_nats,stderr,draws,mode`), audit rows ([`BoundReport`] CSV), and a
//! JSON mirror of everything. Equal config and seed give byte-identical CSV,
//! regardless of thread count.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num::rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundReport};
use crate::class::FiniteClass;
use crate::combinatorics::{star_number, vc_dimension, StarNumber};
use crate::dist::{DataSpec, FiniteDistribution, Prob};
use crate::error::{Error, Result};
use crate::info::{
    binary_entropy, disintegrated_cmi, estimate_cmi, estimate_ecmi, estimate_risk_ecmi,
    estimate_vs_cmi, mix_seed, EstimateMode, MIEstimate, SelectionVector, Supersample,
};
use crate::learners::Learner;
use crate::oig::{loo_ecmi_bound, loo_error, oig_transductive_predict, singleton_predict};
use crate::sample::{Example, Label, LabeledSample};

/// Version stamp carried in every run record.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

const LN2: f64 = std::f64::consts::LN_2;

/// What a run measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Output information of the configured learner.
    Cmi,
    /// Loss-table information of the configured learner.
    Ecmi,
    /// Output information of the version space of the configured class.
    VsCmi,
    /// The version-space lower-bound construction on point functions.
    Lowerbound,
    /// Leave-one-out and information audit of a graph-based predictor.
    OigAudit,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Cmi => "cmi",
            RunMode::Ecmi => "ecmi",
            RunMode::VsCmi => "vs-cmi",
            RunMode::Lowerbound => "lowerbound",
            RunMode::OigAudit => "oig-audit",
        })
    }
}

/// A JSON experiment description. Exactly one of `n`/`ns` must be given;
/// `class`/`dist` may be inline or a path to a JSON file holding the same
/// content (paths are resolved relative to the process working directory).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<FiniteClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DataSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    pub draws: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_json_str(&text)
    }
}

/// A config with files pulled in, names resolved, and invariants checked.
struct ResolvedExperiment {
    mode: RunMode,
    learner: Option<Learner>,
    class: Option<FiniteClass>,
    spec: Option<DataSpec>,
    ns: Vec<usize>,
    draws: usize,
    seed: u64,
    bounds: Vec<String>,
    hash: String,
}

/// The canonical form that the config hash covers: file references replaced
/// by their content, learner names normalized. Field order is fixed by this
/// struct, so the serialization is deterministic.
#[derive(Serialize)]
struct CanonicalConfig<'a> {
    mode: RunMode,
    learner: Option<&'a str>,
    class: &'a Option<FiniteClass>,
    dist: &'a Option<DataSpec>,
    ns: &'a [usize],
    draws: usize,
    seed: u64,
    bounds: &'a [String],
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn resolve(config: &ExperimentConfig) -> Result<ResolvedExperiment> {
    let class = match (&config.class, &config.class_path) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give class inline or as class_path, not both".into(),
            ))
        }
        (Some(c), None) => Some(c.clone()),
        (None, Some(p)) => Some(
            FiniteClass::from_json_file(p)
                .map_err(|e| Error::Config(format!("class_path {}: {e}", p.display())))?,
        ),
        (None, None) => None,
    };
    let spec = match (&config.dist, &config.dist_path) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give dist inline or as dist_path, not both".into(),
            ))
        }
        (Some(d), None) => {
            d.validate().map_err(|e| Error::Config(e.to_string()))?;
            Some(d.clone())
        }
        (None, Some(p)) => Some(
            DataSpec::from_json_file(p)
                .map_err(|e| Error::Config(format!("dist_path {}: {e}", p.display())))?,
        ),
        (None, None) => None,
    };
    let ns = match (&config.n, &config.ns) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give n or ns, not both".into()));
        }
        (Some(n), None) => vec![*n],
        (None, Some(list)) if !list.is_empty() => list.clone(),
        _ => return Err(Error::Config("one of n or ns is required".into())),
    };
    if ns.iter().any(|&n| n == 0) {
        return Err(Error::Config("sample sizes must be >= 1".into()));
    }
    if config.draws < 2 {
        return Err(Error::Config(
            "draws must be >= 2 (a standard error needs two draws)".into(),
        ));
    }

    let learner = match config.mode {
        RunMode::Lowerbound => {
            if config.learner.is_some() {
                return Err(Error::Config(
                    "lowerbound mode fixes its own learner; remove the learner field".into(),
                ));
            }
            None
        }
        RunMode::VsCmi => {
            if class.is_none() {
                return Err(Error::Config("vs-cmi mode requires a class".into()));
            }
            None
        }
        _ => {
            let name = config.learner.as_deref().ok_or_else(|| {
                Error::Config(format!("mode {} requires a learner", config.mode))
            })?;
            Some(
                Learner::from_name(name, class.as_ref())
                    .map_err(|e| Error::Config(e.to_string()))?,
            )
        }
    };
    if matches!(config.mode, RunMode::OigAudit)
        && !matches!(learner, Some(Learner::Oig { .. }) | Some(Learner::OigSingleton))
    {
        return Err(Error::Config(
            "oig-audit mode requires the \"oig\" or \"oig-singleton\" learner".into(),
        ));
    }
    if !matches!(config.mode, RunMode::Lowerbound) && spec.is_none() {
        return Err(Error::Config(format!(
            "mode {} requires a data distribution",
            config.mode
        )));
    }

    let canonical = CanonicalConfig {
        mode: config.mode,
        learner: learner.as_ref().map(|l| l.name()),
        class: &class,
        dist: &spec,
        ns: &ns,
        draws: config.draws,
        seed: config.seed,
        bounds: &config.bounds,
    };
    let encoded = serde_json::to_string(&canonical)?;
    let hash = format!("{:016x}", fnv1a64(encoded.as_bytes()));

    Ok(ResolvedExperiment {
        mode: config.mode,
        learner,
        class,
        spec,
        ns,
        draws: config.draws,
        seed: config.seed,
        bounds: config.bounds.clone(),
        hash,
    })
}

/// One line of the estimates CSV.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateRow {
    pub n: usize,
    pub mean_nats: f64,
    pub stderr: f64,
    pub draws: usize,
    pub mode: EstimateMode,
}

impl EstimateRow {
    fn from_estimate(n: usize, est: &MIEstimate) -> Self {
        EstimateRow {
            n,
            mean_nats: est.mean,
            stderr: est.stderr,
            draws: est.draws,
            mode: est.mode,
        }
    }
}

/// The complete result of one experiment run.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub mode: RunMode,
    pub rows: Vec<EstimateRow>,
    pub reports: Vec<BoundReport>,
    pub wall_clock_secs: f64,
    pub artifact_version: String,
}

impl RunRecord {
    fn new(mode: RunMode, hash: String) -> Self {
        RunRecord {
            config_hash: hash,
            mode,
            rows: Vec::new(),
            reports: Vec::new(),
            wall_clock_secs: 0.0,
            artifact_version: ARTIFACT_VERSION.to_string(),
        }
    }

    /// The estimates table: `n,mean_nats,stderr,draws,mode`.
    pub fn estimates_csv(&self) -> String {
        let mut out = String::from("n,mean_nats,stderr,draws,mode\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.mean_nats, r.stderr, r.draws, r.mode
            ));
        }
        out
    }

    /// The audit table; one row per [`BoundReport`].
    pub fn reports_csv(&self) -> String {
        let mut out = String::from(BoundReport::CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// JSON mirror of the whole record.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// True when every audited budget held.
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.verdict)
    }
}

/// The dimension of the inputs a spec produces, when its inputs are
/// coordinate points (used to size halfspace budgets).
fn input_dimension(spec: &DataSpec) -> Option<usize> {
    match spec {
        DataSpec::Continuous(c) => Some(c.dim()),
        DataSpec::Finite(d) => d
            .atoms()
            .first()
            .and_then(|(e, _)| e.x.as_coords().map(|c| c.len())),
    }
}

/// Compression-set size of the learners that are compression schemes.
fn compression_size(learner: &Learner, spec: &DataSpec) -> Result<usize> {
    match learner {
        Learner::Threshold => Ok(1),
        Learner::Svm => {
            let d = input_dimension(spec).ok_or_else(|| {
                Error::Config("max-margin budgets need coordinate inputs".into())
            })?;
            Ok(d + 1)
        }
        other => Err(Error::Config(format!(
            "learner \"{}\" has no compression-size budget",
            other.name()
        ))),
    }
}

/// A VC-dimension figure for the learner's output class.
fn output_vc(learner: Option<&Learner>, class: Option<&FiniteClass>, spec: &DataSpec) -> Result<usize> {
    if let Some(c) = class {
        return Ok(vc_dimension(c));
    }
    match learner {
        Some(Learner::Threshold) | Some(Learner::LeakingErm) => Ok(1),
        Some(Learner::Svm) => {
            let d = input_dimension(spec).ok_or_else(|| {
                Error::Config("halfspace budgets need coordinate inputs".into())
            })?;
            Ok(d + 1)
        }
        Some(Learner::OigSingleton) => Ok(1),
        _ => Err(Error::Config(
            "cannot infer a VC dimension: provide a class".into(),
        )),
    }
}

/// Context handed to the audit-row registry for one n.
struct AuditContext<'a> {
    exp: &'a ResolvedExperiment,
    n: usize,
    est: &'a MIEstimate,
    /// Ghost-risk and information series on the same draws, computed once
    /// when some requested budget needs a risk figure.
    joint: Option<(MIEstimate, MIEstimate)>,
}

impl<'a> AuditContext<'a> {
    fn joint(&mut self) -> Result<&(MIEstimate, MIEstimate)> {
        if self.joint.is_none() {
            let learner = self.exp.learner.as_ref().ok_or_else(|| {
                Error::Config("risk-based budgets need a learner".into())
            })?;
            let spec = self.exp.spec.as_ref().expect("checked at resolution");
            self.joint = Some(estimate_risk_ecmi(
                learner,
                spec,
                self.n,
                self.exp.draws,
                self.exp.seed,
            )?);
        }
        Ok(self.joint.as_ref().unwrap())
    }
}

/// Evaluate one audit row by registry name. Names accepted:
/// `information-ceiling`, `stable-compression`, `compression`, `max-margin`,
/// `vc-ecmi`, `version-space`, `loo`, `erm-risk`, `fastrate-risk`,
/// `sandwich` (emits two rows).
fn audit_rows(name: &str, ctx: &mut AuditContext) -> Result<Vec<BoundReport>> {
    let n = ctx.n;
    let est = ctx.est;
    let tag = |base: &str| format!("{base}/n={n}");
    let spec = ctx.exp.spec.as_ref().expect("checked at resolution");
    let learner = ctx.exp.learner.as_ref();
    let one = |r: BoundReport| Ok(vec![r]);
    match name {
        "information-ceiling" => one(BoundReport::new(
            tag("information-ceiling"),
            est.mean,
            est.stderr,
            n as f64 * LN2,
        )),
        "stable-compression" => {
            let learner = learner
                .ok_or_else(|| Error::Config("stable-compression needs a learner".into()))?;
            let k = compression_size(learner, spec)?;
            one(BoundReport::new(
                tag("stable-compression"),
                est.mean,
                est.stderr,
                bounds::cmi_bound_stable(k),
            ))
        }
        "compression" => {
            let learner =
                learner.ok_or_else(|| Error::Config("compression needs a learner".into()))?;
            let k = compression_size(learner, spec)?;
            one(BoundReport::new(
                tag("compression"),
                est.mean,
                est.stderr,
                bounds::cmi_bound_compression(k, n)?,
            ))
        }
        "max-margin" => {
            if !matches!(learner, Some(Learner::Svm)) {
                return Err(Error::Config(
                    "the max-margin budget applies to the svm learner".into(),
                ));
            }
            let d = input_dimension(spec).ok_or_else(|| {
                Error::Config("max-margin budgets need coordinate inputs".into())
            })?;
            one(BoundReport::new(
                tag("max-margin"),
                est.mean,
                est.stderr,
                bounds::cmi_bound_svm(d),
            ))
        }
        "vc-ecmi" => {
            let d = output_vc(learner, ctx.exp.class.as_ref(), spec)?;
            one(BoundReport::new(
                tag("vc-ecmi"),
                est.mean,
                est.stderr,
                bounds::cmi_bound_vc_ecmi(d, n)?,
            ))
        }
        "version-space" => {
            let class = ctx.exp.class.as_ref().ok_or_else(|| {
                Error::Config("the version-space budget needs a class".into())
            })?;
            let s = match star_number(class, class.domain_size())? {
                StarNumber::Exact(s) => s,
                StarNumber::AtLeast(s) => {
                    return Err(Error::Config(format!(
                        "star number undetermined (>= {s}); the budget needs the exact value"
                    )))
                }
            };
            one(BoundReport::new(
                tag("version-space"),
                est.mean,
                est.stderr,
                bounds::cmi_bound_version_space(s)?,
            ))
        }
        "loo" => {
            let d = output_vc(learner, ctx.exp.class.as_ref(), spec)?;
            one(BoundReport::new(
                tag("loo"),
                est.mean,
                est.stderr,
                bounds::ecmi_bound_loo(d as f64, n)?,
            ))
        }
        "erm-risk" => {
            let (risk, info) = ctx.joint()?.clone();
            let factor = 2.0 * n as f64 * LN2;
            // Budget built from a measured risk: fold its uncertainty into
            // the row's standard error.
            let stderr = (info.stderr.powi(2) + (factor * risk.stderr).powi(2)).sqrt();
            one(BoundReport::new(
                tag("erm-risk"),
                info.mean,
                stderr,
                bounds::cmi_from_risk_erm(risk.mean, n)?,
            ))
        }
        "fastrate-risk" => {
            let (risk, info) = ctx.joint()?.clone();
            let (bound, factor) = match ctx.exp.mode {
                RunMode::Ecmi => (bounds::ege_fastrate_ecmi(info.mean, n)?, 1.5 / n as f64),
                RunMode::Cmi => (bounds::ege_fastrate_cmi(info.mean, n)?, 1.0 / (n as f64 * LN2)),
                _ => {
                    return Err(Error::Config(
                        "fastrate-risk applies to cmi or ecmi runs".into(),
                    ))
                }
            };
            let stderr = (risk.stderr.powi(2) + (factor * info.stderr).powi(2)).sqrt();
            one(BoundReport::new(tag("fastrate-risk"), risk.mean, stderr, bound))
        }
        "sandwich" => {
            let (risk, info) = ctx.joint()?.clone();
            let rate = info.mean / n as f64;
            let rate_se = info.stderr / n as f64;
            let lower = BoundReport::new(
                tag("sandwich-lower"),
                2.0 / 3.0 * risk.mean,
                (rate_se.powi(2) + (2.0 / 3.0 * risk.stderr).powi(2)).sqrt(),
                rate,
            );
            // The upper envelope h(r) + r·log 2 moves with the measured
            // risk; propagate that through its derivative.
            let r = risk.mean.clamp(0.0, 1.0);
            let envelope = binary_entropy(r) + r * LN2;
            let slope = if r <= 0.0 || r >= 1.0 {
                0.0
            } else {
                ((1.0 - r) / r).ln() + LN2
            };
            let upper = BoundReport::new(
                tag("sandwich-upper"),
                rate,
                (rate_se.powi(2) + (slope * risk.stderr).powi(2)).sqrt(),
                envelope,
            );
            Ok(vec![lower, upper])
        }
        other => Err(Error::Config(format!(
            "unknown bound name \"{other}\"; see the audit registry documentation"
        ))),
    }
}

/// Run a cmi / ecmi / vs-cmi estimation experiment (with optional audits),
/// or dispatch to the specialized runners for the other modes.
pub fn run_estimate(config: &ExperimentConfig) -> Result<RunRecord> {
    let exp = resolve(config)?;
    match exp.mode {
        RunMode::Lowerbound => return run_lowerbound_config(&exp),
        RunMode::OigAudit => return run_oig_audit_config(&exp),
        _ => {}
    }
    let start = Instant::now();
    let mut record = RunRecord::new(exp.mode, exp.hash.clone());
    let spec = exp.spec.as_ref().expect("checked at resolution");
    for &n in &exp.ns {
        let est = match exp.mode {
            RunMode::Cmi => estimate_cmi(
                exp.learner.as_ref().expect("checked at resolution"),
                spec,
                n,
                exp.draws,
                exp.seed,
            )?,
            RunMode::Ecmi => estimate_ecmi(
                exp.learner.as_ref().expect("checked at resolution"),
                spec,
                n,
                exp.draws,
                exp.seed,
            )?,
            RunMode::VsCmi => estimate_vs_cmi(
                exp.class.as_ref().expect("checked at resolution"),
                spec,
                n,
                exp.draws,
                exp.seed,
            )?,
            _ => unreachable!("dispatched above"),
        };
        let mut ctx = AuditContext {
            exp: &exp,
            n,
            est: &est,
            joint: None,
        };
        for name in &exp.bounds {
            let rows = audit_rows(name, &mut ctx)?;
            record.reports.extend(rows);
        }
        record.rows.push(EstimateRow::from_estimate(n, &est));
    }
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(record)
}

/// The hard-instance distribution for the version-space lower bound on the
/// point-function class over m domain points: atom 0 carries the leftover
/// weight 1 − (M−1)/n and atoms 1..M carry 1/n each, every label 0.
fn lowerbound_distribution(n: usize, m_atoms: usize) -> Result<DataSpec> {
    let n_i64 = i64::try_from(n)
        .map_err(|_| Error::InvalidArgument(format!("sample count {n} too large")))?;
    let m_i64 = m_atoms as i64;
    let mut atoms = Vec::with_capacity(m_atoms);
    atoms.push((
        Example::new(crate::sample::Input::Index(0), Label::Zero),
        Prob::Exact(Rational64::new(n_i64 - m_i64 + 1, n_i64)),
    ));
    for i in 1..m_atoms {
        atoms.push((
            Example::new(crate::sample::Input::Index(i), Label::Zero),
            Prob::Exact(Rational64::new(1, n_i64)),
        ));
    }
    Ok(DataSpec::Finite(FiniteDistribution::new(atoms)?))
}

/// Exact per-supersample expectation of the number of columns whose ghost
/// input never occurs in the training half (those columns' selection bits
/// are readable off the version space), in log-2 units of information.
fn recovered_bits(z: &Supersample) -> Result<f64> {
    let n = z.n();
    // Atom ids fit a small bitmask: the construction uses Index inputs.
    let id = |e: &Example| -> Result<u32> {
        e.x.as_index()
            .and_then(|i| u32::try_from(i).ok())
            .filter(|&i| i < 64)
            .ok_or_else(|| {
                Error::InvalidArgument("the lower-bound runner needs small domain-id inputs".into())
            })
    };
    let mut ids = [[0u32; 2]; 64];
    for (j, col) in z.columns().iter().enumerate() {
        ids[j] = [id(&col[0])?, id(&col[1])?];
    }
    let u_weight = 0.5f64.powi(n as i32);
    let mut total = 0.0;
    for bits in 0..1u64 << n {
        let u = SelectionVector::from_bits(bits, n)?;
        let mut seen = 0u64;
        for (j, pair) in ids.iter().enumerate().take(n) {
            seen |= 1 << pair[u.bit(j)];
        }
        let mut count = 0usize;
        for (j, pair) in ids.iter().enumerate().take(n) {
            if seen >> pair[1 - u.bit(j)] & 1 == 0 {
                count += 1;
            }
        }
        total += u_weight * count as f64;
    }
    Ok(total * LN2)
}

/// Measure the version-space information of the hard instance at one n:
/// the released-version-space information per draw, the recovered-bits
/// lower estimate from the same draws, and the analytic floor
/// (e⁻³·log 2/6)·(M−1). Reports compare measured information against both.
pub fn run_lowerbound_pointfunctions(n: usize, draws: usize, seed: u64) -> Result<RunRecord> {
    let config = ExperimentConfig {
        mode: RunMode::Lowerbound,
        learner: None,
        class: None,
        class_path: None,
        dist: None,
        dist_path: None,
        n: Some(n),
        ns: None,
        draws,
        seed,
        bounds: Vec::new(),
    };
    run_estimate(&config)
}

fn run_lowerbound_config(exp: &ResolvedExperiment) -> Result<RunRecord> {
    let start = Instant::now();
    let mut record = RunRecord::new(RunMode::Lowerbound, exp.hash.clone());
    for &n in &exp.ns {
        if n < 2 || n > 16 {
            return Err(Error::Config(format!(
                "the lower-bound construction needs 2 <= n <= 16, got {n}"
            )));
        }
        let class = FiniteClass::point_functions(n)?;
        let star = match star_number(&class, class.domain_size())? {
            StarNumber::Exact(s) | StarNumber::AtLeast(s) => s,
        };
        let m_atoms = n.min(star);
        let spec = lowerbound_distribution(n, m_atoms)?;
        let releaser = Learner::VersionSpaceReleaser(class);
        let pairs = (0..exp.draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(exp.seed, i as u64));
                let z = Supersample::draw_with(&spec, n, &mut rng)?;
                Ok((disintegrated_cmi(&releaser, &z)?, recovered_bits(&z)?))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (mi, bits): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let diffs: Vec<f64> = bits.iter().zip(&mi).map(|(b, m)| b - m).collect();
        let mi = MIEstimate::from_values(mi, EstimateMode::ExactInU)?;
        let bits = MIEstimate::from_values(bits, EstimateMode::ExactInU)?;
        let diff = MIEstimate::from_values(diffs, EstimateMode::ExactInU)?;
        // Lower-bound audits: the measured information must dominate the
        // recovered-bits estimate (up to coupled sampling error) and the
        // closed-form floor.
        record.reports.push(BoundReport::new(
            format!("recovered-bits/n={n}"),
            bits.mean,
            diff.stderr,
            mi.mean,
        ));
        let floor = (-3.0f64).exp() * LN2 / 6.0 * (m_atoms as f64 - 1.0);
        record.reports.push(BoundReport::new(
            format!("analytic-floor/n={n}"),
            floor,
            mi.stderr,
            mi.mean,
        ));
        record.rows.push(EstimateRow::from_estimate(n, &mi));
    }
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Probability that the graph predictor errs, for the evaluator oracle.
fn prediction_error(learner: &Learner, s: &LabeledSample, e: &Example) -> Result<f64> {
    let dist = match learner {
        Learner::Oig { class, degree } => oig_transductive_predict(class, *degree, s, &e.x)?,
        Learner::OigSingleton => singleton_predict(s, &e.x)?,
        other => {
            return Err(Error::Config(format!(
                "no leave-one-out oracle for learner \"{}\"",
                other.name()
            )))
        }
    };
    Ok(dist[e.y.flip().as_bit() as usize])
}

fn run_oig_audit_config(exp: &ResolvedExperiment) -> Result<RunRecord> {
    let start = Instant::now();
    let mut record = RunRecord::new(RunMode::OigAudit, exp.hash.clone());
    let learner = exp.learner.as_ref().expect("checked at resolution");
    let spec = exp.spec.as_ref().expect("checked at resolution");
    let degree = match learner {
        Learner::Oig { degree, .. } => *degree,
        _ => 1, // the singleton rule realizes the d = 1 guarantee
    };
    let mut sweep: Vec<(usize, MIEstimate)> = Vec::new();
    for &n in &exp.ns {
        // Leave-one-out discipline on sampled (n+1)-tuples: the average
        // expected error of the predictor over each tuple must stay within
        // degree/(n+1). Tuples get their own seed stream.
        let tuple_root = mix_seed(exp.seed, u64::MAX);
        let profiles = (0..exp.draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(tuple_root, i as u64));
                let seq = spec.draw_with(n + 1, &mut rng)?;
                let profile =
                    loo_error(|s, x| match learner {
                        Learner::Oig { class, degree } => {
                            oig_transductive_predict(class, *degree, s, x)
                        }
                        _ => singleton_predict(s, x),
                    }, &seq)?;
                Ok(profile.average)
            })
            .collect::<Result<Vec<f64>>>()?;
        let worst = profiles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        record.reports.push(BoundReport::new(
            format!("loo-average/n={n}"),
            worst,
            0.0,
            degree as f64 / (n as f64 + 1.0),
        ));

        // Information side: measured loss-table information against the
        // closed-form budget and against the per-draw evaluator.
        let est = estimate_ecmi(learner, spec, n, exp.draws, exp.seed)?;
        record.reports.push(BoundReport::new(
            format!("loo-information-budget/n={n}"),
            est.mean,
            est.stderr,
            bounds::ecmi_bound_loo(degree as f64, n)?,
        ));
        let evaluations = (0..exp.draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(exp.seed, i as u64));
                let z = Supersample::draw_with(spec, n, &mut rng)?;
                let b = loo_ecmi_bound(|s, e| prediction_error(learner, s, e), &z.flatten())?;
                Ok(b.value)
            })
            .collect::<Result<Vec<f64>>>()?;
        let diffs: Vec<f64> = est
            .values
            .iter()
            .zip(&evaluations)
            .map(|(e, b)| e - b)
            .collect();
        let diff = MIEstimate::from_values(diffs, est.mode)?;
        let evals = MIEstimate::from_values(evaluations, est.mode)?;
        record.reports.push(BoundReport::new(
            format!("loo-evaluator/n={n}"),
            est.mean,
            diff.stderr,
            evals.mean,
        ));
        sweep.push((n, est.clone()));
        record.rows.push(EstimateRow::from_estimate(n, &est));
    }

    // The singleton rule's information must not grow with n: fit a line
    // through the sweep and audit its slope.
    if matches!(learner, Learner::OigSingleton) && sweep.len() >= 2 {
        let (slope, slope_se) = fit_slope(&sweep);
        record.reports.push(BoundReport::new(
            "information-growth-slope",
            slope,
            slope_se,
            0.01,
        ));
    }
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Least-squares slope of estimate means against n, with the standard error
/// propagated from the per-point standard errors.
fn fit_slope(points: &[(usize, MIEstimate)]) -> (f64, f64) {
    let k = points.len() as f64;
    let mean_x = points.iter().map(|(n, _)| *n as f64).sum::<f64>() / k;
    let mean_y = points.iter().map(|(_, e)| e.mean).sum::<f64>() / k;
    let sxx: f64 = points
        .iter()
        .map(|(n, _)| (*n as f64 - mean_x).powi(2))
        .sum();
    let sxy: f64 = points
        .iter()
        .map(|(n, e)| (*n as f64 - mean_x) * (e.mean - mean_y))
        .sum();
    let slope = sxy / sxx;
    let var: f64 = points
        .iter()
        .map(|(n, e)| ((*n as f64 - mean_x) / sxx * e.stderr).powi(2))
        .sum();
    (slope, var.sqrt())
}
