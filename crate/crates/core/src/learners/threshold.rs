//! Threshold rules on the real line: the one-point compression learner and
//! its deliberately leaky sibling.
//!
//! Both output a [`ThresholdPos`], an exact rational threshold position (so
//! equality and hashing are exact, which the information measurements
//! require). The plain learner places the threshold at the smallest 1-labeled
//! training value — a textbook stable compression scheme of size one. The
//! leaky variant instead packs the entire training sequence, bit by bit, into
//! the fractional part of a consistent threshold: under an atomless data
//! distribution its output identifies the training points, so it reveals the
//! training/ghost coin flips one-for-one. It exists as a negative control.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sample::{Input, Label, LabeledSample};

/// Exact position of a step rule h(x) = 1[x >= t], with the all-zeros rule
/// represented as a threshold at positive infinity.
///
/// The representation is canonical: any position exactly equal to a finite
/// f64 lives in `Finite` (with -0.0 collapsed to 0.0), and `Encoded` holds
/// only positions that are not f64s — the leaky encoder's wide rationals.
/// Equality and hashing are therefore exact without ever comparing across
/// variants, and the plain learner's output never touches the heap (it is
/// built once per enumerated selection, which makes it a hot path).
#[derive(Clone, Debug)]
pub enum ThresholdPos {
    Finite(f64),
    Encoded(BigRational),
    PosInf,
}

impl PartialEq for ThresholdPos {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ThresholdPos::Finite(a), ThresholdPos::Finite(b)) => a.to_bits() == b.to_bits(),
            (ThresholdPos::Encoded(a), ThresholdPos::Encoded(b)) => a == b,
            (ThresholdPos::PosInf, ThresholdPos::PosInf) => true,
            _ => false,
        }
    }
}

impl Eq for ThresholdPos {}

impl std::hash::Hash for ThresholdPos {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            ThresholdPos::Finite(t) => t.to_bits().hash(state),
            ThresholdPos::Encoded(t) => t.hash(state),
            ThresholdPos::PosInf => {}
        }
    }
}

impl ThresholdPos {
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold must be finite, got {x}"
            )));
        }
        Ok(ThresholdPos::Finite(if x == 0.0 { 0.0 } else { x }))
    }

    /// Wrap an exact rational position, demoting to `Finite` when the value
    /// is exactly an f64 so the representation stays canonical.
    fn from_rational(t: BigRational) -> Self {
        if let Some(x) = t.to_f64() {
            if x.is_finite() && BigRational::from_float(x).as_ref() == Some(&t) {
                return ThresholdPos::Finite(if x == 0.0 { 0.0 } else { x });
            }
        }
        ThresholdPos::Encoded(t)
    }

    pub fn predict_scalar(&self, x: f64) -> Label {
        match self {
            ThresholdPos::PosInf => Label::Zero,
            ThresholdPos::Finite(t) => Label::from_bool(x >= *t),
            ThresholdPos::Encoded(t) => {
                let x = BigRational::from_float(x).expect("inputs are validated finite");
                Label::from_bool(x >= *t)
            }
        }
    }

    pub fn predict_input(&self, x: &Input) -> Result<Label> {
        let v = x.as_scalar().ok_or_else(|| {
            Error::InvalidArgument("threshold rules need scalar inputs".into())
        })?;
        Ok(self.predict_scalar(v))
    }

    /// Approximate position (exactly +inf for the all-zeros rule).
    pub fn to_f64(&self) -> f64 {
        match self {
            ThresholdPos::PosInf => f64::INFINITY,
            ThresholdPos::Finite(t) => *t,
            ThresholdPos::Encoded(t) => t.to_f64().unwrap_or(f64::INFINITY),
        }
    }
}

/// The value of every example input as a scalar; errors on vector inputs.
fn scalar_values(s: &LabeledSample) -> Result<Vec<(f64, Label)>> {
    s.iter()
        .map(|e| {
            let v = e.x.as_scalar().ok_or_else(|| {
                Error::InvalidArgument("threshold rules need scalar inputs".into())
            })?;
            Ok((v, e.y))
        })
        .collect()
}

/// Largest 0-labeled value and smallest 1-labeled value, checking threshold
/// realizability (every 0 strictly left of every 1).
fn zero_one_extremes(values: &[(f64, Label)]) -> Result<(Option<f64>, Option<f64>)> {
    let max_zero = values
        .iter()
        .filter(|(_, y)| *y == Label::Zero)
        .map(|(v, _)| *v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let min_one = values
        .iter()
        .filter(|(_, y)| *y == Label::One)
        .map(|(v, _)| *v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    if let (Some(a), Some(b)) = (max_zero, min_one) {
        if a >= b {
            return Err(Error::Unrealizable(format!(
                "0-labeled point at {a} is not left of 1-labeled point at {b}"
            )));
        }
    }
    Ok((max_zero, min_one))
}

/// Threshold at the smallest 1-labeled training value, or at +inf when no
/// 1-label exists. With the matching one-point compression scheme this is a
/// stable scheme of size one.
pub fn threshold_learner(s: &LabeledSample) -> Result<ThresholdPos> {
    let values = scalar_values(s)?;
    let (_, min_one) = zero_one_extremes(&values)?;
    match min_one {
        Some(v) => ThresholdPos::from_f64(v),
        None => Ok(ThresholdPos::PosInf),
    }
}

/// Consistent threshold that encodes the whole training sequence.
///
/// The consistent positions form an interval (lo, hi]: lo is the largest
/// 0-labeled value, hi the smallest 1-labeled value (or lo + 1.0 when no
/// 1-label exists). The returned threshold sits strictly inside it at
///
///   t = hi - (hi - lo) * (1 + frac) / 4,
///
/// where frac in [0, 1) carries one 65-bit chunk per training example (the 64
/// bits of the input value, then the label bit), in sequence order. Distinct
/// training sequences produce distinct frac, so for a fixed interval the map
/// is injective; across intervals a collision would need an exact rational
/// coincidence between independently drawn values, which has probability
/// zero under an atomless distribution.
pub fn leaking_erm(s: &LabeledSample) -> Result<ThresholdPos> {
    if s.is_empty() {
        return Ok(ThresholdPos::PosInf); // nothing to leak, nothing to fit
    }
    let values = scalar_values(s)?;
    let (max_zero, min_one) = zero_one_extremes(&values)?;
    let (lo, hi) = match (max_zero, min_one) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a + 1.0),
        (None, Some(b)) => (b - 1.0, b),
        (None, None) => unreachable!("non-empty sample has a label"),
    };

    let mut packed = BigUint::zero();
    for (v, y) in &values {
        packed = (packed << 65u32) | BigUint::from((v.to_bits() as u128) << 1 | y.as_bit() as u128);
    }
    let denom = BigUint::one() << (65 * values.len() as u32);
    let frac = BigRational::new(BigInt::from(packed), BigInt::from(denom));

    let lo = BigRational::from_float(lo).expect("scalar inputs are finite");
    let hi = BigRational::from_float(hi).expect("scalar inputs are finite");
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    let t = &hi - (&hi - &lo) * (BigRational::one() + frac) * quarter;
    Ok(ThresholdPos::from_rational(t))
}
