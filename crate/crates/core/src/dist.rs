//! Data distributions: finite atom lists and continuous uniform families.
//!
//! Finite distributions carry explicit labeled atoms with exact-rational or
//! float weights; risk against them is a finite sum. Continuous specs are
//! uniform over an interval (d = 1) or an axis-aligned box (d <= 3), labeled
//! by a threshold or halfspace target, with an optional margin band around
//! the decision boundary that is excluded by rejection sampling.

use std::fs;
use std::path::Path;

use num::rational::Rational64;
use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Example, Halfspace, Input, Label, LabeledSample};

/// A probability weight, kept exact when the source was exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Prob {
    Exact(Rational64),
    Approx(f64),
}

impl Prob {
    pub fn value(&self) -> f64 {
        match self {
            Prob::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Prob::Approx(v) => *v,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WeightRepr {
    Num(f64),
    Frac(String),
}

impl WeightRepr {
    fn to_prob(&self) -> Result<Prob> {
        match self {
            WeightRepr::Num(v) => Ok(Prob::Approx(*v)),
            WeightRepr::Frac(s) => {
                let (p, q) = s.split_once('/').ok_or_else(|| {
                    Error::InvalidDistribution(format!("weight string must be \"p/q\", got {s:?}"))
                })?;
                let p: i64 = p.trim().parse().map_err(|_| {
                    Error::InvalidDistribution(format!("bad numerator in weight {s:?}"))
                })?;
                let q: i64 = q.trim().parse().map_err(|_| {
                    Error::InvalidDistribution(format!("bad denominator in weight {s:?}"))
                })?;
                if q <= 0 {
                    return Err(Error::InvalidDistribution(format!(
                        "weight denominator must be positive in {s:?}"
                    )));
                }
                Ok(Prob::Exact(Rational64::new(p, q)))
            }
        }
    }

    fn from_prob(p: &Prob) -> WeightRepr {
        match p {
            Prob::Exact(r) => WeightRepr::Frac(format!("{}/{}", r.numer(), r.denom())),
            Prob::Approx(v) => WeightRepr::Num(*v),
        }
    }
}

/// Distribution with finite support: labeled atoms and positive weights
/// summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    atoms: Vec<(Example, Prob)>,
    cumulative: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<(Example, Prob)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("distribution atoms"));
        }
        let mut exact_sum = Rational64::zero();
        let mut all_exact = true;
        let mut float_sum = 0.0;
        for (i, (_, p)) in atoms.iter().enumerate() {
            let v = p.value();
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "atom {i} has non-positive weight {v}"
                )));
            }
            float_sum += v;
            match p {
                Prob::Exact(r) => exact_sum += r,
                Prob::Approx(_) => all_exact = false,
            }
        }
        if all_exact {
            if !exact_sum.is_one() {
                return Err(Error::InvalidDistribution(format!(
                    "weights sum to {exact_sum}, expected 1"
                )));
            }
        } else if (float_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {float_sum}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (_, p) in &atoms {
            acc += p.value();
            cumulative.push(acc);
        }
        // Guard the sampler against float round-off at the top end.
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(FiniteDistribution { atoms, cumulative })
    }

    /// Uniform distribution over the given examples (exact weights 1/n).
    pub fn uniform(examples: Vec<Example>) -> Result<Self> {
        let n = examples.len() as i64;
        if n == 0 {
            return Err(Error::Empty("distribution atoms"));
        }
        FiniteDistribution::new(
            examples
                .into_iter()
                .map(|e| (e, Prob::Exact(Rational64::new(1, n))))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[(Example, Prob)] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Example {
        let r: f64 = rng.gen();
        let k = self.cumulative.partition_point(|&c| c <= r);
        self.atoms[k.min(self.atoms.len() - 1)].0.clone()
    }
}

impl Serialize for FiniteDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            atoms: Vec<(&'a Input, u8, WeightRepr)>,
        }
        let doc = Doc {
            atoms: self
                .atoms
                .iter()
                .map(|(e, p)| (&e.x, e.y.as_bit(), WeightRepr::from_prob(p)))
                .collect(),
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            atoms: Vec<(Input, u8, WeightRepr)>,
        }
        let doc = Doc::deserialize(d)?;
        let atoms = doc
            .atoms
            .into_iter()
            .map(|(x, bit, w)| {
                Ok((
                    Example::new(x, Label::from_bit(bit)?),
                    w.to_prob()?,
                ))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        FiniteDistribution::new(atoms).map_err(serde::de::Error::custom)
    }
}

/// Exact expected 0/1 loss of `predict` under a finite distribution.
pub fn risk<F>(mut predict: F, d: &FiniteDistribution) -> f64
where
    F: FnMut(&Input) -> Label,
{
    d.atoms
        .iter()
        .filter(|(e, _)| predict(&e.x) != e.y)
        .map(|(_, p)| p.value())
        .sum()
}

/// Ground-truth labeling rule for continuous families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// 1[x >= t] on the real line.
    Threshold(f64),
    Halfspace(Halfspace),
}

impl TargetRule {
    pub fn dim(&self) -> usize {
        match self {
            TargetRule::Threshold(_) => 1,
            TargetRule::Halfspace(h) => h.dim(),
        }
    }

    pub fn label(&self, coords: &[f64]) -> Label {
        match self {
            TargetRule::Threshold(t) => Label::from_bool(coords[0] >= *t),
            TargetRule::Halfspace(h) => h.predict_coords(coords),
        }
    }

    fn boundary_distance(&self, coords: &[f64]) -> f64 {
        match self {
            TargetRule::Threshold(t) => (coords[0] - t).abs(),
            TargetRule::Halfspace(h) => h.boundary_distance(coords),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    UniformInterval { lo: f64, hi: f64 },
    UniformBox { lows: Vec<f64>, highs: Vec<f64> },
}

impl Family {
    pub fn dim(&self) -> usize {
        match self {
            Family::UniformInterval { .. } => 1,
            Family::UniformBox { lows, .. } => lows.len(),
        }
    }
}

/// Continuous data spec: a uniform family, a realizable target, and an
/// optional exclusion margin around the target's boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSpec {
    #[serde(flatten)]
    pub family: Family,
    pub target: TargetRule,
    #[serde(default)]
    pub margin: f64,
}

const REJECTION_CAP: usize = 10_000;

impl ContinuousSpec {
    pub fn new(family: Family, target: TargetRule, margin: f64) -> Result<Self> {
        let spec = ContinuousSpec {
            family,
            target,
            margin,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            Family::UniformInterval { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "interval [{lo}, {hi}) is empty or not finite"
                    )));
                }
            }
            Family::UniformBox { lows, highs } => {
                if lows.is_empty() || lows.len() > 3 {
                    return Err(Error::InvalidDistribution(format!(
                        "box dimension must be 1..=3, got {}",
                        lows.len()
                    )));
                }
                if lows.len() != highs.len() {
                    return Err(Error::LengthMismatch {
                        what: "box bounds",
                        left: lows.len(),
                        right: highs.len(),
                    });
                }
                for (l, h) in lows.iter().zip(highs) {
                    if !(l < h) || !l.is_finite() || !h.is_finite() {
                        return Err(Error::InvalidDistribution(format!(
                            "box side [{l}, {h}) is empty or not finite"
                        )));
                    }
                }
            }
        }
        if self.target.dim() != self.family.dim() {
            return Err(Error::LengthMismatch {
                what: "target dimension",
                left: self.target.dim(),
                right: self.family.dim(),
            });
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "margin must be finite and >= 0, got {}",
                self.margin
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    fn draw_coords<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match &self.family {
            Family::UniformInterval { lo, hi } => vec![rng.gen_range(*lo..*hi)],
            Family::UniformBox { lows, highs } => lows
                .iter()
                .zip(highs)
                .map(|(l, h)| rng.gen_range(*l..*h))
                .collect(),
        }
    }

    /// One labeled example; points inside the margin band are rejected and
    /// redrawn, erroring out if the band (nearly) covers the support.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Result<Example> {
        for _ in 0..REJECTION_CAP {
            let coords = self.draw_coords(rng);
            if self.margin > 0.0 && self.target.boundary_distance(&coords) < self.margin {
                continue;
            }
            let y = self.target.label(&coords);
            return Ok(Example::new(Input::point(coords)?, y));
        }
        Err(Error::InvalidDistribution(format!(
            "rejection sampling failed {REJECTION_CAP} times; margin {} leaves too little mass",
            self.margin
        )))
    }

    /// Exact risk of the step predictor 1[x >= t] against this spec.
    /// Available for the margin-free uniform interval with a threshold
    /// target; `t` may be infinite (constant predictors).
    pub fn threshold_risk(&self, t: f64) -> Result<f64> {
        let (lo, hi, t0) = match (&self.family, &self.target) {
            (Family::UniformInterval { lo, hi }, TargetRule::Threshold(t0)) => (*lo, *hi, *t0),
            _ => {
                return Err(Error::InvalidArgument(
                    "closed-form threshold risk needs a uniform interval with a threshold target"
                        .into(),
                ))
            }
        };
        if self.margin > 0.0 {
            return Err(Error::InvalidArgument(
                "closed-form threshold risk is only defined without a margin".into(),
            ));
        }
        let clip = |v: f64| v.clamp(lo, hi);
        Ok((clip(t) - clip(t0)).abs() / (hi - lo))
    }
}

/// Any data source an experiment can draw from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSpec {
    Finite(FiniteDistribution),
    Continuous(ContinuousSpec),
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DataSpec::Finite(_) => Ok(()), // validated at construction
            DataSpec::Continuous(c) => c.validate(),
        }
    }

    pub fn draw_one<R: Rng>(&self, rng: &mut R) -> Result<Example> {
        match self {
            DataSpec::Finite(d) => Ok(d.draw(rng)),
            DataSpec::Continuous(c) => c.draw(rng),
        }
    }

    /// n i.i.d. examples using the provided generator.
    pub fn draw_with<R: Rng>(&self, n: usize, rng: &mut R) -> Result<LabeledSample> {
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            items.push(self.draw_one(rng)?);
        }
        Ok(LabeledSample::new(items))
    }

    /// n i.i.d. examples from a fresh, reproducibly seeded generator.
    pub fn draw_sample(&self, n: usize, seed: u64) -> Result<LabeledSample> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.draw_with(n, &mut rng)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: DataSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        DataSpec::from_json_str(&fs::read_to_string(path)?)
    }
}
