//! Labeled examples, samples, and the halfspace predictor.
//!
//! Inputs are either identifiers into a finite domain (`Input::Index`) or
//! real vectors (`Input::Point`). The two kinds never mix within one
//! experiment. Real coordinates are validated finite and normalized
//! (-0.0 becomes 0.0) at construction, so bitwise equality, hashing, and the
//! total order all agree with numeric equality; duplicate detection
//! throughout the crate relies on that.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use num::rational::Rational64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary classification label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Label::Zero),
            1 => Ok(Label::One),
            other => Err(Error::InvalidArgument(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::One
        } else {
            Label::Zero
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            Label::Zero => 0,
            Label::One => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
        }
    }

    /// Signed form used by the margin solver: Zero -> -1.0, One -> +1.0.
    pub fn sign(self) -> f64 {
        match self {
            Label::Zero => -1.0,
            Label::One => 1.0,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_bit())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bit = u8::deserialize(d)?;
        Label::from_bit(bit).map_err(de::Error::custom)
    }
}

/// A point of the input space: either an id into a finite domain or a real
/// vector of dimension 1..=3.
#[derive(Debug)]
pub enum Input {
    Index(usize),
    Point(Vec<f64>),
}

impl Clone for Input {
    fn clone(&self) -> Self {
        match self {
            Input::Index(i) => Input::Index(*i),
            Input::Point(p) => Input::Point(p.clone()),
        }
    }

    /// Hot loops refill one scratch sample millions of times; reusing the
    /// coordinate buffer keeps those refills allocation-free.
    fn clone_from(&mut self, source: &Self) {
        match (self, source) {
            (Input::Point(dst), Input::Point(src)) => dst.clone_from(src),
            (dst, src) => *dst = src.clone(),
        }
    }
}

impl Input {
    /// Real-vector input. Coordinates must be finite; -0.0 is normalized to
    /// 0.0 so equality and hashing match numeric comparison.
    pub fn point(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("input coordinates"));
        }
        let mut clean = coords;
        for c in &mut clean {
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "input coordinate must be finite, got {c}"
                )));
            }
            if *c == 0.0 {
                *c = 0.0; // collapse -0.0
            }
        }
        Ok(Input::Point(clean))
    }

    /// One-dimensional real input.
    pub fn scalar(x: f64) -> Result<Self> {
        Input::point(vec![x])
    }

    /// The real value of a scalar-like input: a 1-dimensional point, or a
    /// domain id read as the real number `i`.
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Input::Index(i) => Some(*i as f64),
            Input::Point(p) if p.len() == 1 => Some(p[0]),
            Input::Point(_) => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            Input::Index(i) => Some(*i),
            Input::Point(_) => None,
        }
    }

    pub fn as_coords(&self) -> Option<&[f64]> {
        match self {
            Input::Index(_) => None,
            Input::Point(p) => Some(p),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Input::Index(_) => 0,
            Input::Point(_) => 1,
        }
    }
}

impl PartialEq for Input {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Input::Index(a), Input::Index(b)) => a == b,
            (Input::Point(a), Input::Point(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for Input {}

impl Hash for Input {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Input::Index(i) => i.hash(state),
            Input::Point(p) => {
                for c in p {
                    c.to_bits().hash(state);
                }
            }
        }
    }
}

impl Ord for Input {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Input::Index(a), Input::Index(b)) => a.cmp(b),
            (Input::Point(a), Input::Point(b)) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    match x.total_cmp(y) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                a.len().cmp(&b.len())
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Input {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// JSON form: a bare non-negative integer is a domain id, an array of numbers
// is a real vector. A finite distribution over reals therefore writes its
// scalar atoms as one-element arrays.
impl Serialize for Input {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Input::Index(i) => s.serialize_u64(*i as u64),
            Input::Point(p) => {
                let mut seq = s.serialize_seq(Some(p.len()))?;
                for c in p {
                    seq.serialize_element(c)?;
                }
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Input {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct InputVisitor;

        impl<'de> Visitor<'de> for InputVisitor {
            type Value = Input;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a non-negative integer domain id or an array of coordinates")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Input, E> {
                Ok(Input::Index(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Input, E> {
                if v < 0 {
                    return Err(E::custom("domain id must be non-negative"));
                }
                Ok(Input::Index(v as usize))
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Input, A::Error> {
                let mut coords = Vec::new();
                while let Some(c) = seq.next_element::<f64>()? {
                    coords.push(c);
                }
                Input::point(coords).map_err(de::Error::custom)
            }
        }

        d.deserialize_any(InputVisitor)
    }
}

/// One labeled example.
#[derive(Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub x: Input,
    pub y: Label,
}

impl Clone for Example {
    fn clone(&self) -> Self {
        Example {
            x: self.x.clone(),
            y: self.y,
        }
    }

    fn clone_from(&mut self, source: &Self) {
        self.x.clone_from(&source.x);
        self.y = source.y;
    }
}

impl Example {
    pub fn new(x: Input, y: Label) -> Self {
        Example { x, y }
    }
}

/// An ordered sequence of labeled examples. Order matters (learners may be
/// order-sensitive) and duplicates are allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    items: Vec<Example>,
}

impl LabeledSample {
    pub fn new(items: Vec<Example>) -> Self {
        LabeledSample { items }
    }

    pub fn empty() -> Self {
        LabeledSample { items: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Example] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.items.iter()
    }

    pub fn push(&mut self, e: Example) {
        self.items.push(e);
    }

    /// Overwrite this sample with borrowed examples, reusing the element
    /// buffers already held (see [`Input::clone_from`]). Estimation loops
    /// refill one scratch sample per selection instead of allocating.
    pub fn assign_from<'a, I>(&mut self, src: I)
    where
        I: IntoIterator<Item = &'a Example>,
    {
        let mut kept = 0;
        let mut it = src.into_iter();
        for (dst, e) in self.items.iter_mut().zip(it.by_ref()) {
            dst.clone_from(e);
            kept += 1;
        }
        self.items.truncate(kept);
        // The leftover iterator is nonempty only when growing past the old
        // length, where fresh clones are unavoidable.
        for e in it {
            self.items.push(e.clone());
        }
    }

    pub fn get(&self, i: usize) -> Result<&Example> {
        self.items.get(i).ok_or(Error::IndexOutOfRange {
            what: "sample",
            got: i,
            size: self.items.len(),
        })
    }

    /// The sample with position `i` removed (for leave-one-out sweeps).
    pub fn without(&self, i: usize) -> Result<LabeledSample> {
        if i >= self.items.len() {
            return Err(Error::IndexOutOfRange {
                what: "sample",
                got: i,
                size: self.items.len(),
            });
        }
        let mut items = self.items.clone();
        items.remove(i);
        Ok(LabeledSample { items })
    }

    /// The subsequence at `positions`, in the order given (repeats allowed).
    pub fn subsequence(&self, positions: &[usize]) -> Result<LabeledSample> {
        let mut items = Vec::with_capacity(positions.len());
        for &i in positions {
            items.push(self.get(i)?.clone());
        }
        Ok(LabeledSample { items })
    }

    /// Label of the first example with input `x`, if any. Callers that care
    /// about contradictory duplicates check those separately.
    pub fn label_of(&self, x: &Input) -> Option<Label> {
        self.items.iter().find(|e| &e.x == x).map(|e| e.y)
    }

    pub fn contains_input(&self, x: &Input) -> bool {
        self.items.iter().any(|e| &e.x == x)
    }

    /// True if some input occurs with both labels.
    pub fn has_label_conflict(&self) -> bool {
        for (i, a) in self.items.iter().enumerate() {
            for b in &self.items[i + 1..] {
                if a.x == b.x && a.y != b.y {
                    return true;
                }
            }
        }
        false
    }
}

impl<'a> IntoIterator for &'a LabeledSample {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// Fraction of examples in `s` that `predict` gets wrong, as an exact
/// rational mistakes/len.
pub fn empirical_risk<F>(mut predict: F, s: &LabeledSample) -> Result<Rational64>
where
    F: FnMut(&Input) -> Label,
{
    if s.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let mistakes = s.iter().filter(|e| predict(&e.x) != e.y).count() as i64;
    Ok(Rational64::new(mistakes, s.len() as i64))
}

/// Affine classifier x -> 1[<w,x> + b >= 0].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Halfspace {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Empty("halfspace weights"));
        }
        if w.iter().any(|c| !c.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidArgument(
                "halfspace parameters must be finite".into(),
            ));
        }
        Ok(Halfspace { w, b })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    fn activation(&self, coords: &[f64]) -> f64 {
        self.w.iter().zip(coords).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    pub fn predict_coords(&self, coords: &[f64]) -> Label {
        Label::from_bool(self.activation(coords) >= 0.0)
    }

    pub fn predict(&self, x: &Input) -> Result<Label> {
        let coords: Vec<f64> = match x.as_coords() {
            Some(c) => c.to_vec(),
            None => match x.as_scalar() {
                Some(v) => vec![v],
                None => {
                    return Err(Error::InvalidArgument(
                        "halfspace needs a real-vector input".into(),
                    ))
                }
            },
        };
        if coords.len() != self.w.len() {
            return Err(Error::LengthMismatch {
                what: "halfspace input dimension",
                left: coords.len(),
                right: self.w.len(),
            });
        }
        Ok(self.predict_coords(&coords))
    }

    /// Euclidean distance from `coords` to the decision boundary; infinite
    /// for the constant classifier w = 0.
    pub fn boundary_distance(&self, coords: &[f64]) -> f64 {
        let norm = self.w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            f64::INFINITY
        } else {
            self.activation(coords).abs() / norm
        }
    }
}
