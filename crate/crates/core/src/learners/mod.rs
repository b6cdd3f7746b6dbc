//! The algorithms under measurement, packaged behind one `Learner` value so
//! the estimation harness can treat them interchangeably.
//!
//! Training is pure: randomized rules return their full finite output
//! distribution instead of sampling internally, which is what makes exact
//! entropy computation over outputs possible. Outputs carry canonical,
//! hashable encodings for the same reason.
//!
//! Inductive learners (threshold, SVM, least-element ERM, the leaking ERM
//! control, the version-space releaser) produce a reusable hypothesis-like
//! object from `train`. Transductive rules (predict-one, the oriented-graph
//! predictor, the singleton rule) label an explicit evaluation list instead
//! and go through `train_transductive` or the per-point `predict_dist`.

pub mod svm;
pub mod threshold;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::class::FiniteClass;
use crate::combinatorics::{self, VersionSpace};
use crate::error::{Error, Result};
use crate::oig;
use crate::sample::{Input, Label, LabeledSample};
use svm::CanonicalHalfspace;
use threshold::ThresholdPos;

/// Canonical, hashable training outputs. Equality must capture functional
/// identity exactly — the entropy of the output distribution is computed by
/// hashing these values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LearnerOutput {
    /// Index into the finite class the learner was built over.
    HypothesisIndex(usize),
    HalfspaceOut(CanonicalHalfspace),
    VersionSpaceOut(VersionSpace),
    /// Labels over an explicit evaluation list, in that list's order. The
    /// list itself is context (for supersample work: all 2n inputs in array
    /// order), so two vectors compare equal only within the same context.
    PredictionVector(Vec<Label>),
    /// Threshold position, possibly +inf (the all-zeros predictor).
    ThresholdOut(ThresholdPos),
}

/// Predict with a hypothesis-like output. `class` is consulted only for
/// `HypothesisIndex`. Set-valued and vector-valued outputs are not
/// single-point predictors and are rejected.
pub fn predict_with(
    output: &LearnerOutput,
    class: Option<&FiniteClass>,
    x: &Input,
) -> Result<Label> {
    match output {
        LearnerOutput::HypothesisIndex(h) => {
            let class = class.ok_or_else(|| {
                Error::InvalidArgument(
                    "a hypothesis index only predicts relative to its class".into(),
                )
            })?;
            class.predict(*h, x)
        }
        LearnerOutput::HalfspaceOut(c) => c.predict(x),
        LearnerOutput::ThresholdOut(t) => t.predict_input(x),
        LearnerOutput::VersionSpaceOut(_) => Err(Error::InvalidArgument(
            "a version space is a set of hypotheses, not a predictor".into(),
        )),
        LearnerOutput::PredictionVector(_) => Err(Error::InvalidArgument(
            "prediction vectors are read by position, not queried by input".into(),
        )),
    }
}

/// Finite distribution over training outputs. Weights are strictly positive
/// and sum to one; duplicate outputs are merged on construction. Point
/// distributions — every deterministic learner, once per enumerated
/// selection — are stored inline so building one never allocates.
#[derive(Clone, Debug)]
pub struct OutputDistribution {
    outcomes: Outcomes,
}

#[derive(Clone, Debug)]
enum Outcomes {
    Point([(LearnerOutput, f64); 1]),
    Many(Vec<(LearnerOutput, f64)>),
}

impl OutputDistribution {
    pub fn point(output: LearnerOutput) -> Self {
        OutputDistribution {
            outcomes: Outcomes::Point([(output, 1.0)]),
        }
    }

    pub fn new(outcomes: Vec<(LearnerOutput, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Empty("output distribution"));
        }
        let mut merged: Vec<(LearnerOutput, f64)> = Vec::with_capacity(outcomes.len());
        let mut total = 0.0;
        for (output, w) in outcomes {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "output weight {w} must be positive and finite"
                )));
            }
            total += w;
            match merged.iter_mut().find(|(o, _)| *o == output) {
                Some((_, acc)) => *acc += w,
                None => merged.push((output, w)),
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "output weights sum to {total}, expected 1"
            )));
        }
        Ok(OutputDistribution {
            outcomes: Outcomes::Many(merged),
        })
    }

    pub fn outcomes(&self) -> &[(LearnerOutput, f64)] {
        match &self.outcomes {
            Outcomes::Point(one) => one,
            Outcomes::Many(v) => v,
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes().is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.outcomes().len() == 1
    }

    /// The single output of a deterministic rule.
    pub fn expect_point(&self) -> Result<&LearnerOutput> {
        match self.outcomes() {
            [(output, _)] => Ok(output),
            other => Err(Error::InvalidArgument(format!(
                "expected a deterministic output, found {} outcomes",
                other.len()
            ))),
        }
    }
}

/// Cap on the number of independently randomized evaluation points when a
/// randomized transductive rule is asked for its full joint output
/// distribution (the product has 2^points outcomes).
const PRODUCT_ENUMERATION_CAP: u32 = 12;

/// The algorithm registry. Class-based learners own their class so a
/// `Learner` value is self-contained.
#[derive(Clone, Debug)]
pub enum Learner {
    /// Predict 1 at and to the right of the smallest 1-labeled point.
    Threshold,
    /// Consistent threshold that encodes the whole training sequence into
    /// the threshold position (negative control: maximal selection leakage).
    LeakingErm,
    /// Exact hard-margin maximum-margin halfspace.
    Svm,
    /// The consistent hypothesis with the smallest index.
    LeastElementErm(FiniteClass),
    /// Releases the whole set of consistent hypotheses.
    VersionSpaceReleaser(FiniteClass),
    /// Transductive memorizer: training labels where seen, 1 elsewhere
    /// (negative control for per-instance loss leakage).
    PredictOne,
    /// Transductive predictor routed through a deterministic orientation of
    /// the class's one-inclusion graph, with out-degree budget `degree`.
    Oig { class: FiniteClass, degree: usize },
    /// The explicit randomized rule for point functions.
    OigSingleton,
}

impl Learner {
    /// Graph predictor with its out-degree budget set to the class's VC
    /// dimension (always orientable at that budget).
    pub fn oig(class: FiniteClass) -> Self {
        let degree = combinatorics::vc_dimension(&class);
        Learner::Oig { class, degree }
    }

    /// Resolve a config-file name. Class-based learners take the class here.
    pub fn from_name(name: &str, class: Option<&FiniteClass>) -> Result<Self> {
        let needs_class = || {
            class.cloned().ok_or_else(|| {
                Error::InvalidArgument(format!("learner \"{name}\" requires a finite class"))
            })
        };
        match name {
            "threshold" => Ok(Learner::Threshold),
            "leaking-erm" => Ok(Learner::LeakingErm),
            "svm" => Ok(Learner::Svm),
            "least-erm" => Ok(Learner::LeastElementErm(needs_class()?)),
            "version-space" => Ok(Learner::VersionSpaceReleaser(needs_class()?)),
            "predict-one" => Ok(Learner::PredictOne),
            "oig" => Ok(Learner::oig(needs_class()?)),
            "oig-singleton" => Ok(Learner::OigSingleton),
            other => Err(Error::InvalidArgument(format!(
                "unknown learner \"{other}\"; expected one of threshold, svm, least-erm, \
                 version-space, leaking-erm, predict-one, oig, oig-singleton"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Learner::Threshold => "threshold",
            Learner::LeakingErm => "leaking-erm",
            Learner::Svm => "svm",
            Learner::LeastElementErm(_) => "least-erm",
            Learner::VersionSpaceReleaser(_) => "version-space",
            Learner::PredictOne => "predict-one",
            Learner::Oig { .. } => "oig",
            Learner::OigSingleton => "oig-singleton",
        }
    }

    /// Every output in the support classifies the training sample perfectly.
    /// False only for the version-space releaser, whose output is not a
    /// predictor at all.
    pub fn is_consistent(&self) -> bool {
        !matches!(self, Learner::VersionSpaceReleaser(_))
    }

    /// Outputs live in the hypothesis class being learned (thresholds,
    /// halfspaces, class members). Transductive rules and the set-valued
    /// releaser are improper.
    pub fn is_proper(&self) -> bool {
        matches!(
            self,
            Learner::Threshold | Learner::LeakingErm | Learner::Svm | Learner::LeastElementErm(_)
        )
    }

    /// Labels an explicit evaluation list instead of returning a hypothesis.
    pub fn is_transductive(&self) -> bool {
        matches!(
            self,
            Learner::PredictOne | Learner::Oig { .. } | Learner::OigSingleton
        )
    }

    /// The class an output's `HypothesisIndex` refers to, where applicable.
    pub fn class(&self) -> Option<&FiniteClass> {
        match self {
            Learner::LeastElementErm(c) | Learner::VersionSpaceReleaser(c) => Some(c),
            Learner::Oig { class, .. } => Some(class),
            _ => None,
        }
    }

    /// Train an inductive learner. Transductive rules need an evaluation
    /// list and are directed to `train_transductive`.
    pub fn train(&self, s: &LabeledSample) -> Result<OutputDistribution> {
        match self {
            Learner::Threshold => Ok(OutputDistribution::point(LearnerOutput::ThresholdOut(
                threshold::threshold_learner(s)?,
            ))),
            Learner::LeakingErm => Ok(OutputDistribution::point(LearnerOutput::ThresholdOut(
                threshold::leaking_erm(s)?,
            ))),
            Learner::Svm => {
                let solution = svm::svm_max_margin(s)?;
                Ok(OutputDistribution::point(LearnerOutput::HalfspaceOut(
                    solution.separator,
                )))
            }
            Learner::LeastElementErm(class) => {
                let vs = combinatorics::version_space(class, s)?;
                let h = vs.min_index().ok_or_else(|| {
                    Error::Unrealizable("no hypothesis is consistent with the sample".into())
                })?;
                Ok(OutputDistribution::point(LearnerOutput::HypothesisIndex(h)))
            }
            Learner::VersionSpaceReleaser(class) => {
                let vs = combinatorics::version_space(class, s)?;
                Ok(OutputDistribution::point(LearnerOutput::VersionSpaceOut(vs)))
            }
            Learner::PredictOne | Learner::Oig { .. } | Learner::OigSingleton => {
                Err(Error::InvalidArgument(format!(
                    "\"{}\" is transductive; train it with an evaluation list",
                    self.name()
                )))
            }
        }
    }

    /// Marginal label distribution at one point, as [P(0), P(1)]. Works for
    /// every predictor-valued learner; only the version-space releaser is
    /// refused.
    pub fn predict_dist(&self, s: &LabeledSample, x: &Input) -> Result<[f64; 2]> {
        let point = |label: Label| -> [f64; 2] {
            match label {
                Label::Zero => [1.0, 0.0],
                Label::One => [0.0, 1.0],
            }
        };
        match self {
            Learner::PredictOne => Ok(point(predict_one_label(s, x)?)),
            Learner::Oig { class, degree } => oig::oig_transductive_predict(class, *degree, s, x),
            Learner::OigSingleton => oig::singleton_predict(s, x),
            _ => {
                let dist = self.train(s)?;
                let mut out = [0.0, 0.0];
                for (output, w) in dist.outcomes() {
                    let label = predict_with(output, self.class(), x)?;
                    out[label.as_bit() as usize] += w;
                }
                Ok(out)
            }
        }
    }

    /// Full output distribution over labelings of `eval_inputs`. Inductive
    /// learners return their hypothesis unchanged (the caller evaluates it);
    /// transductive rules return `PredictionVector`s over the list. A
    /// randomized rule's product distribution is enumerated only while the
    /// number of randomized points stays within a hard cap.
    pub fn train_transductive(
        &self,
        s: &LabeledSample,
        eval_inputs: &[Input],
    ) -> Result<OutputDistribution> {
        match self {
            Learner::PredictOne => {
                let labels = eval_inputs
                    .iter()
                    .map(|x| predict_one_label(s, x))
                    .collect::<Result<Vec<Label>>>()?;
                Ok(OutputDistribution::point(LearnerOutput::PredictionVector(
                    labels,
                )))
            }
            Learner::Oig { .. } | Learner::OigSingleton => {
                let dists = eval_inputs
                    .iter()
                    .map(|x| self.predict_dist(s, x))
                    .collect::<Result<Vec<[f64; 2]>>>()?;
                enumerate_product(&dists)
            }
            _ => self.train(s),
        }
    }
}

/// The memorizer's label at one point: the training label where the input
/// was seen, 1 everywhere else.
fn predict_one_label(s: &LabeledSample, x: &Input) -> Result<Label> {
    let mut seen: Option<Label> = None;
    for e in s {
        if e.x == *x {
            match seen {
                Some(l) if l != e.y => {
                    return Err(Error::Unrealizable(
                        "a training input carries both labels".into(),
                    ))
                }
                _ => seen = Some(e.y),
            }
        }
    }
    Ok(seen.unwrap_or(Label::One))
}

/// Expand per-point label marginals (independent randomization) into the
/// joint distribution over prediction vectors.
fn enumerate_product(dists: &[[f64; 2]]) -> Result<OutputDistribution> {
    let free: Vec<usize> = (0..dists.len())
        .filter(|&i| dists[i][0] > 0.0 && dists[i][1] > 0.0)
        .collect();
    if free.len() as u32 > PRODUCT_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            what: "randomized evaluation points in product enumeration",
            needed: free.len() as u128,
            cap: PRODUCT_ENUMERATION_CAP as u128,
        });
    }
    let base: Vec<Label> = dists
        .iter()
        .map(|d| if d[1] > d[0] { Label::One } else { Label::Zero })
        .collect();
    let mut outcomes = Vec::with_capacity(1 << free.len());
    for mask in 0u32..(1 << free.len()) {
        let mut labels = base.clone();
        let mut weight = 1.0;
        for (bit, &i) in free.iter().enumerate() {
            let label = Label::from_bool(mask >> bit & 1 == 1);
            labels[i] = label;
            weight *= dists[i][label.as_bit() as usize];
        }
        // Deterministic positions contribute weight 1 via `base`.
        for (i, d) in dists.iter().enumerate() {
            if !free.contains(&i) {
                weight *= d[base[i].as_bit() as usize];
            }
        }
        outcomes.push((LearnerOutput::PredictionVector(labels), weight));
    }
    OutputDistribution::new(outcomes)
}

/// A compression scheme: boil a sample down to at most `size` of its own
/// examples, then rebuild a predictor from that alone.
pub struct CompressionScheme {
    name: &'static str,
    size: usize,
    compress: Box<dyn Fn(&LabeledSample) -> Result<LabeledSample> + Send + Sync>,
    reconstruct: Box<dyn Fn(&LabeledSample) -> Result<LearnerOutput> + Send + Sync>,
}

impl CompressionScheme {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn compress(&self, s: &LabeledSample) -> Result<LabeledSample> {
        let kept = (self.compress)(s)?;
        if kept.len() > self.size {
            return Err(Error::InvalidArgument(format!(
                "scheme \"{}\" kept {} examples, more than its size {}",
                self.name,
                kept.len(),
                self.size
            )));
        }
        Ok(kept)
    }

    pub fn reconstruct(&self, kept: &LabeledSample) -> Result<LearnerOutput> {
        (self.reconstruct)(kept)
    }

    /// The induced learner: reconstruct from the compressed sample.
    pub fn run(&self, s: &LabeledSample) -> Result<LearnerOutput> {
        self.reconstruct(&self.compress(s)?)
    }

    /// Size-1 scheme behind the threshold learner: keep the smallest
    /// 1-labeled example, or nothing when every label is 0.
    pub fn threshold() -> Self {
        CompressionScheme {
            name: "threshold",
            size: 1,
            compress: Box::new(|s| {
                // Realizability check up front so compression of a bad
                // sample fails loudly rather than reconstructing garbage.
                let t = threshold::threshold_learner(s)?;
                match t {
                    ThresholdPos::PosInf => Ok(LabeledSample::empty()),
                    finite => {
                        let pos = s
                            .iter()
                            .position(|e| {
                                e.y == Label::One
                                    && e.x.as_scalar().is_some_and(|x| {
                                        finite.predict_scalar(x) == Label::One
                                            && ThresholdPos::from_f64(x)
                                                .map(|p| p == finite)
                                                .unwrap_or(false)
                                    })
                            })
                            .ok_or_else(|| {
                                Error::InvalidArgument(
                                    "threshold position missing from its own sample".into(),
                                )
                            })?;
                        s.subsequence(&[pos])
                    }
                }
            }),
            reconstruct: Box::new(|kept| {
                let t = if kept.is_empty() {
                    ThresholdPos::PosInf
                } else {
                    threshold::threshold_learner(kept)?
                };
                Ok(LearnerOutput::ThresholdOut(t))
            }),
        }
    }

    /// Size d+1 scheme behind the hard-margin SVM: keep the support vectors.
    pub fn svm(d: usize) -> Self {
        CompressionScheme {
            name: "svm",
            size: d + 1,
            compress: Box::new(|s| {
                let solution = svm::svm_max_margin(s)?;
                s.subsequence(&solution.support)
            }),
            reconstruct: Box::new(|kept| {
                Ok(LearnerOutput::HalfspaceOut(
                    svm::svm_max_margin(kept)?.separator,
                ))
            }),
        }
    }

    /// Deliberately order-dependent control: keep whatever example came
    /// first. Its compression map is not symmetric, so it must fail the
    /// stability check.
    pub fn first_element() -> Self {
        CompressionScheme {
            name: "first-element",
            size: 1,
            compress: Box::new(|s| {
                if s.is_empty() {
                    return Err(Error::Empty("sample"));
                }
                s.subsequence(&[0])
            }),
            reconstruct: Box::new(|kept| {
                let e = kept.get(0)?;
                let t = match e.y {
                    Label::One => {
                        let x = e.x.as_scalar().ok_or_else(|| {
                            Error::InvalidArgument("scalar input required".into())
                        })?;
                        ThresholdPos::from_f64(x)?
                    }
                    Label::Zero => ThresholdPos::PosInf,
                };
                Ok(LearnerOutput::ThresholdOut(t))
            }),
        }
    }
}

/// Outcome of a stability audit. `exhaustive` is false when the sandwich
/// space was too large and had to be sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabilityCheck {
    pub stable: bool,
    pub exhaustive: bool,
}

const STABILITY_EXHAUSTIVE_LIMIT: usize = 12;
const STABILITY_SAMPLES: usize = 2048;

/// Audit stability on one sample: the compression map must ignore input
/// order, and rebuilding from any sub-sample sandwiched between the
/// compression set and the full sample must reproduce the same output.
/// Exhaustive over sandwiches when at most 12 examples are free; sampled
/// (and flagged) beyond that.
pub fn check_stability(scheme: &CompressionScheme, s: &LabeledSample) -> Result<StabilityCheck> {
    if s.len() < scheme.size() {
        return Err(Error::InvalidArgument(format!(
            "need at least {} examples to audit a size-{} scheme, got {}",
            scheme.size(),
            scheme.size(),
            s.len()
        )));
    }
    let kept = scheme.compress(s)?;
    let base = scheme.reconstruct(&kept)?;

    // Locate the compression set inside the sample (multiset matching).
    let mut used = vec![false; s.len()];
    let mut kept_positions = Vec::with_capacity(kept.len());
    for e in &kept {
        let pos = s
            .iter()
            .enumerate()
            .position(|(i, cand)| !used[i] && cand == e)
            .ok_or_else(|| {
                Error::InvalidArgument(
                    "compression output is not a sub-multiset of the sample".into(),
                )
            })?;
        used[pos] = true;
        kept_positions.push(pos);
    }
    let free: Vec<usize> = (0..s.len()).filter(|i| !used[*i]).collect();

    let mut rng = ChaCha12Rng::seed_from_u64(0x57ab_111e);
    let mut stable = true;

    // Order-insensitivity of the compression map: compare the compression
    // multiset under reversal and a few shuffles of the sample.
    let multiset_key = |sample: &LabeledSample| {
        let mut key: Vec<(Input, u8)> =
            sample.iter().map(|e| (e.x.clone(), e.y.as_bit())).collect();
        key.sort();
        key
    };
    let base_key = multiset_key(&kept);
    let mut orders: Vec<Vec<usize>> = vec![(0..s.len()).rev().collect()];
    for _ in 0..16 {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.shuffle(&mut rng);
        orders.push(order);
    }
    for order in orders {
        let permuted = s.subsequence(&order)?;
        match scheme.compress(&permuted) {
            Ok(k) => {
                if multiset_key(&k) != base_key
                    || scheme.reconstruct(&k).map(|o| o != base).unwrap_or(true)
                {
                    stable = false;
                }
            }
            Err(_) => stable = false,
        }
        if !stable {
            return Ok(StabilityCheck {
                stable: false,
                exhaustive: free.len() <= STABILITY_EXHAUSTIVE_LIMIT,
            });
        }
    }

    // Sandwich check: every sub-sample containing the compression set must
    // reconstruct to the same output. Each sandwich is tried in sample
    // order and reversed (the containment is a multiset relation, so order
    // must not matter).
    let check_sandwich = |positions: &mut Vec<usize>| -> Result<bool> {
        positions.sort_unstable();
        let forward = s.subsequence(positions)?;
        positions.reverse();
        let backward = s.subsequence(positions)?;
        for sandwich in [forward, backward] {
            let rebuilt = match scheme.compress(&sandwich).and_then(|k| scheme.reconstruct(&k)) {
                Ok(o) => o,
                Err(_) => return Ok(false),
            };
            if rebuilt != base {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let exhaustive = free.len() <= STABILITY_EXHAUSTIVE_LIMIT;
    if exhaustive {
        for mask in 0u32..(1 << free.len()) {
            let mut positions = kept_positions.clone();
            for (bit, &i) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    positions.push(i);
                }
            }
            if !check_sandwich(&mut positions)? {
                stable = false;
                break;
            }
        }
    } else {
        for _ in 0..STABILITY_SAMPLES {
            let mut positions = kept_positions.clone();
            for &i in &free {
                if rng.gen_bool(0.5) {
                    positions.push(i);
                }
            }
            if !check_sandwich(&mut positions)? {
                stable = false;
                break;
            }
        }
    }
    Ok(StabilityCheck { stable, exhaustive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical_risk;
    use crate::sample::Example;
    use rand::Rng;

    fn ex(x: f64, y: u8) -> Example {
        Example::new(Input::Point(vec![x]), Label::from_bit(y).unwrap())
    }

    fn iex(x: usize, y: u8) -> Example {
        Example::new(Input::Index(x), Label::from_bit(y).unwrap())
    }

    #[test]
    fn registry_resolves_names_and_metadata() {
        let class = FiniteClass::thresholds(8).unwrap();
        for name in [
            "threshold",
            "svm",
            "least-erm",
            "version-space",
            "leaking-erm",
            "predict-one",
            "oig",
            "oig-singleton",
        ] {
            let learner = Learner::from_name(name, Some(&class)).unwrap();
            assert_eq!(learner.name(), name);
        }
        assert!(Learner::from_name("least-erm", None).is_err());
        assert!(Learner::from_name("unknown", None).is_err());
        let le = Learner::from_name("least-erm", Some(&class)).unwrap();
        assert!(le.is_proper() && le.is_consistent() && !le.is_transductive());
        let vs = Learner::from_name("version-space", Some(&class)).unwrap();
        assert!(!vs.is_proper() && !vs.is_consistent());
        let po = Learner::from_name("predict-one", None).unwrap();
        assert!(!po.is_proper() && po.is_consistent() && po.is_transductive());
        // The graph learner's budget is the class's VC dimension.
        match Learner::from_name("oig", Some(&class)).unwrap() {
            Learner::Oig { degree, .. } => assert_eq!(degree, 1),
            other => panic!("expected the graph learner, got {}", other.name()),
        }
    }

    #[test]
    fn least_element_erm_picks_the_minimum_consistent_index() {
        let class = FiniteClass::thresholds(10).unwrap();
        let learner = Learner::LeastElementErm(class.clone());
        // Empty sample: the full version space, least index 0.
        let out = learner.train(&LabeledSample::empty()).unwrap();
        assert_eq!(out.expect_point().unwrap(), &LearnerOutput::HypothesisIndex(0));
        // A pinned-down sample.
        let s = LabeledSample::new(vec![iex(2, 0), iex(7, 1)]);
        let out = learner.train(&s).unwrap();
        let &LearnerOutput::HypothesisIndex(h) = out.expect_point().unwrap() else {
            panic!("expected a hypothesis index");
        };
        // Consistent thresholds are 1[x >= t] for t in 3..=7; least index 3.
        assert_eq!(h, 3);
        // Unrealizable: 1 left of 0.
        let bad = LabeledSample::new(vec![iex(5, 1), iex(7, 0)]);
        assert!(learner.train(&bad).is_err());
    }

    #[test]
    fn least_element_erm_is_a_function_of_the_version_space() {
        let class = FiniteClass::thresholds(12).unwrap();
        let learner = Learner::LeastElementErm(class.clone());
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t0 = rng.gen_range(0..=12);
            let n = rng.gen_range(1..=6);
            let items: Vec<Example> = (0..n)
                .map(|_| {
                    let x = rng.gen_range(0..12);
                    iex(x, u8::from(x >= t0))
                })
                .collect();
            let s = LabeledSample::new(items.clone());
            // A reshuffled, partially duplicated sample with the same
            // version space must produce the identical output.
            let mut doubled = items.clone();
            doubled.extend(items.iter().cloned());
            doubled.shuffle(&mut rng);
            let s2 = LabeledSample::new(doubled);
            assert_eq!(
                combinatorics::version_space(&class, &s).unwrap(),
                combinatorics::version_space(&class, &s2).unwrap()
            );
            let o1 = learner.train(&s).unwrap();
            let o2 = learner.train(&s2).unwrap();
            assert_eq!(o1.expect_point().unwrap(), o2.expect_point().unwrap());
        }
    }

    #[test]
    fn version_space_releaser_is_canonical() {
        let class = FiniteClass::point_functions(3).unwrap();
        let learner = Learner::VersionSpaceReleaser(class.clone());
        // Empty sample releases the full class.
        let out = learner.train(&LabeledSample::empty()).unwrap();
        let LearnerOutput::VersionSpaceOut(vs) = out.expect_point().unwrap() else {
            panic!("expected a version space");
        };
        assert_eq!(vs.members(), &[0, 1, 2, 3]);
        // Ruling out the point function at 0 keeps zero plus points 1, 2.
        let s = LabeledSample::new(vec![iex(0, 0)]);
        let out = learner.train(&s).unwrap();
        let LearnerOutput::VersionSpaceOut(vs) = out.expect_point().unwrap() else {
            panic!("expected a version space");
        };
        assert_eq!(vs.members(), &[0, 2, 3]);
        // Equal version spaces from different samples hash identically.
        let s2 = LabeledSample::new(vec![iex(0, 0), iex(0, 0)]);
        assert_eq!(
            learner.train(&s).unwrap().expect_point().unwrap(),
            learner.train(&s2).unwrap().expect_point().unwrap()
        );
    }

    #[test]
    fn memorizer_keeps_training_labels_and_guesses_one() {
        let s = LabeledSample::new(vec![ex(1.0, 0), ex(2.0, 1)]);
        let learner = Learner::PredictOne;
        let evals = [
            Input::Point(vec![1.0]),
            Input::Point(vec![2.0]),
            Input::Point(vec![9.0]),
        ];
        let out = learner.train_transductive(&s, &evals).unwrap();
        assert_eq!(
            out.expect_point().unwrap(),
            &LearnerOutput::PredictionVector(vec![Label::Zero, Label::One, Label::One])
        );
        // Conflicting duplicate training labels are rejected.
        let bad = LabeledSample::new(vec![ex(1.0, 0), ex(1.0, 1)]);
        assert!(learner
            .train_transductive(&bad, &evals)
            .is_err());
        // Inductive training is refused outright.
        assert!(learner.train(&s).is_err());
    }

    #[test]
    fn singleton_learner_enumerates_its_product_distribution() {
        // All-zero training over 3 points, evaluated on those plus 2 fresh
        // points: only the fresh points are randomized, giving 4 outcomes.
        let s = LabeledSample::new(vec![iex(0, 0), iex(1, 0), iex(2, 0)]);
        let evals: Vec<Input> = (0..5).map(Input::Index).collect();
        let out = Learner::OigSingleton.train_transductive(&s, &evals).unwrap();
        assert_eq!(out.len(), 4);
        let total: f64 = out.outcomes().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // P(both fresh points get label 0) = (3/4)^2.
        let all_zero = out
            .outcomes()
            .iter()
            .find(|(o, _)| {
                *o == LearnerOutput::PredictionVector(vec![Label::Zero; 5])
            })
            .map(|(_, w)| *w)
            .unwrap();
        assert!((all_zero - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn graph_learner_labels_the_evaluation_list_deterministically() {
        let class = FiniteClass::thresholds(6).unwrap();
        let learner = Learner::oig(class);
        let s = LabeledSample::new(vec![iex(1, 0), iex(4, 1)]);
        let evals: Vec<Input> = [1, 3, 4].map(Input::Index).to_vec();
        let out = learner.train_transductive(&s, &evals).unwrap();
        let LearnerOutput::PredictionVector(labels) = out.expect_point().unwrap() else {
            panic!("expected predictions");
        };
        // Training points keep their labels; the middle one is decided by
        // the orientation but must be a definite label.
        assert_eq!(labels[0], Label::Zero);
        assert_eq!(labels[2], Label::One);
    }

    #[test]
    fn consistency_holds_across_the_registry() {
        // Every learner that claims consistency must have zero empirical
        // risk on its own training sample, for every output in the support.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let finite = FiniteClass::thresholds(12).unwrap();
        for _ in 0..1000 {
            let t0: f64 = rng.gen_range(0.0..1.0);
            let n = rng.gen_range(1..=6);
            let scalar_items: Vec<Example> = (0..n)
                .map(|_| {
                    let x: f64 = rng.gen_range(0.0..1.0);
                    ex(x, u8::from(x >= t0))
                })
                .collect();
            let scalar_sample = LabeledSample::new(scalar_items);
            for learner in [Learner::Threshold, Learner::LeakingErm] {
                let out = learner.train(&scalar_sample).unwrap();
                for (output, _) in out.outcomes() {
                    let risk = empirical_risk(
                        |x| predict_with(output, None, x).unwrap(),
                        &scalar_sample,
                    )
                    .unwrap();
                    assert_eq!(risk, num::rational::Rational64::new(0, 1));
                }
            }

            let ti = rng.gen_range(0..=12);
            let idx_items: Vec<Example> = (0..n)
                .map(|_| {
                    let x = rng.gen_range(0..12);
                    iex(x, u8::from(x >= ti))
                })
                .collect();
            let idx_sample = LabeledSample::new(idx_items);
            let least = Learner::LeastElementErm(finite.clone());
            let out = least.train(&idx_sample).unwrap();
            for (output, _) in out.outcomes() {
                let risk = empirical_risk(
                    |x| predict_with(output, Some(&finite), x).unwrap(),
                    &idx_sample,
                )
                .unwrap();
                assert_eq!(risk, num::rational::Rational64::new(0, 1));
            }

            // Transductive rules: evaluate exactly on the training inputs;
            // every vector in the support must reproduce the labels.
            let eval: Vec<Input> = idx_sample.iter().map(|e| e.x.clone()).collect();
            let dedup = idx_sample.has_label_conflict();
            if !dedup {
                for learner in [
                    Learner::PredictOne,
                    Learner::oig(finite.clone()),
                ] {
                    let out = learner.train_transductive(&idx_sample, &eval).unwrap();
                    for (output, _) in out.outcomes() {
                        let LearnerOutput::PredictionVector(labels) = output else {
                            panic!("expected predictions");
                        };
                        for (label, e) in labels.iter().zip(idx_sample.iter()) {
                            assert_eq!(*label, e.y, "inconsistent at {:?}", e.x);
                        }
                    }
                }
            }
        }
        // The singleton rule, on its own realizable samples.
        for _ in 0..1000 {
            let mut rngl = || rng.gen_range(0..30usize);
            let target = rngl();
            let items: Vec<Example> = (0..4)
                .map(|_| {
                    let x = rngl();
                    iex(x, u8::from(x == target))
                })
                .collect();
            let s = LabeledSample::new(items);
            let eval: Vec<Input> = s.iter().map(|e| e.x.clone()).collect();
            let out = Learner::OigSingleton.train_transductive(&s, &eval).unwrap();
            for (output, _) in out.outcomes() {
                let LearnerOutput::PredictionVector(labels) = output else {
                    panic!("expected predictions");
                };
                for (label, e) in labels.iter().zip(s.iter()) {
                    assert_eq!(*label, e.y);
                }
            }
        }
    }

    #[test]
    fn svm_learner_produces_the_canonical_separator() {
        let s = LabeledSample::new(vec![ex(-1.0, 0), ex(1.0, 1)]);
        let out = Learner::Svm.train(&s).unwrap();
        let LearnerOutput::HalfspaceOut(c) = out.expect_point().unwrap() else {
            panic!("expected a halfspace");
        };
        assert_eq!(c.predict(&Input::Point(vec![0.5])).unwrap(), Label::One);
        assert_eq!(c.predict(&Input::Point(vec![-0.5])).unwrap(), Label::Zero);
    }

    #[test]
    fn threshold_scheme_is_stable() {
        let s = LabeledSample::new(vec![ex(3.0, 0), ex(5.0, 1), ex(7.0, 1), ex(1.0, 0)]);
        let scheme = CompressionScheme::threshold();
        let kept = scheme.compress(&s).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.get(0).unwrap(), &ex(5.0, 1));
        let check = check_stability(&scheme, &s).unwrap();
        assert!(check.stable && check.exhaustive);
        // All-zero sample: empty compression set, still stable.
        let zeros = LabeledSample::new(vec![ex(3.0, 0), ex(8.0, 0)]);
        assert!(scheme.compress(&zeros).unwrap().is_empty());
        let check = check_stability(&scheme, &zeros).unwrap();
        assert!(check.stable && check.exhaustive);
    }

    #[test]
    fn svm_scheme_is_stable_on_separable_samples() {
        let scheme = CompressionScheme::svm(1);
        let s = LabeledSample::new(vec![
            ex(-3.0, 0),
            ex(-1.0, 0),
            ex(1.0, 1),
            ex(4.0, 1),
            ex(6.0, 1),
        ]);
        let kept = scheme.compress(&s).unwrap();
        assert_eq!(kept.len(), 2);
        let check = check_stability(&scheme, &s).unwrap();
        assert!(check.stable && check.exhaustive);
    }

    #[test]
    fn first_element_scheme_fails_stability() {
        let scheme = CompressionScheme::first_element();
        let s = LabeledSample::new(vec![ex(5.0, 1), ex(3.0, 0)]);
        let check = check_stability(&scheme, &s).unwrap();
        assert!(!check.stable);
        assert!(check.exhaustive);
    }

    #[test]
    fn stability_check_samples_large_sandwich_spaces() {
        // 20 free examples exceeds the exhaustive limit; the result must be
        // flagged as sampled but still correct for the stable scheme.
        let mut items = vec![ex(50.0, 1)];
        for i in 0..20 {
            items.push(ex(i as f64, 0));
        }
        let s = LabeledSample::new(items);
        let check = check_stability(&CompressionScheme::threshold(), &s).unwrap();
        assert!(check.stable);
        assert!(!check.exhaustive);
    }

    #[test]
    fn product_enumeration_refuses_oversized_supports() {
        // 13 fresh points at 2 outcomes each would cross the cap.
        let s = LabeledSample::new(vec![iex(0, 0)]);
        let evals: Vec<Input> = (1..14).map(Input::Index).collect();
        let err = Learner::OigSingleton.train_transductive(&s, &evals).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }
}
