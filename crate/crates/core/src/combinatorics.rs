//! Combinatorial width measures of finite classes: VC dimension, star
//! number, growth counts, version spaces, teaching sets, and disagreement
//! regions.
//!
//! Everything here is exhaustive search — the point is exactness at desk
//! scale, not asymptotics. The star-number search is capped because it is
//! exponential and "at least the cap" is an acceptable answer (the quantity
//! may be unbounded for richer classes).

use std::collections::HashSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::class::FiniteClass;
use crate::error::{Error, Result};
use crate::sample::{Label, LabeledSample};

/// Sorted, duplicate-free set of hypothesis indices into a [`FiniteClass`].
/// The sorted index list is the canonical encoding: equality and hashing of
/// version spaces (used when a learner's output *is* a version space) go
/// through it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VersionSpace {
    members: Vec<usize>,
}

impl VersionSpace {
    pub fn from_members(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        VersionSpace { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, h: usize) -> bool {
        self.members.binary_search(&h).is_ok()
    }

    /// Least member, the canonical ERM choice.
    pub fn min_index(&self) -> Option<usize> {
        self.members.first().copied()
    }
}

/// Positions within a sample whose subsample induces the same version space
/// as the whole sample, with no smaller subsample doing so.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeachingSet {
    indices: Vec<usize>,
}

impl TeachingSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Result of the capped star-number search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarNumber {
    Exact(usize),
    /// The search succeeded at the cap; the true value is cap or more.
    AtLeast(usize),
}

impl StarNumber {
    /// The value as a lower bound (exact values bound themselves).
    pub fn lower_bound(&self) -> usize {
        match self {
            StarNumber::Exact(s) | StarNumber::AtLeast(s) => *s,
        }
    }
}

impl std::fmt::Display for StarNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        match self {
            StarNumber::Exact(s) => write!(f, "{s}"),
            StarNumber::AtLeast(s) => write!(f, ">={s}"),
        }
    }
}

pub const STAR_CAP_DEFAULT: usize = 12;

fn patterns_on(class: &FiniteClass, subset: &[usize]) -> HashSet<u64> {
    let mut patterns = HashSet::new();
    for h in 0..class.len() {
        let row = class.row(h).expect("hypothesis index in range");
        let mut pat = 0u64;
        for (b, &x) in subset.iter().enumerate() {
            if row[x] == Label::One {
                pat |= 1 << b;
            }
        }
        patterns.insert(pat);
    }
    patterns
}

/// Largest size of a shattered subset of the domain. Exhaustive over subsets
/// in increasing size; a subset of a shattered set is shattered, so the first
/// size with no shattered subset ends the search.
pub fn vc_dimension(class: &FiniteClass) -> usize {
    let m = class.domain_size();
    let mut best = 0;
    for k in 1..=m.min(63) {
        if class.len() < 1usize << k {
            break; // fewer hypotheses than patterns needed
        }
        let full = 1usize << k;
        let shattered = (0..m)
            .combinations(k)
            .any(|subset| patterns_on(class, &subset).len() == full);
        if shattered {
            best = k;
        } else {
            break;
        }
    }
    best
}

/// Largest s <= cap for which some s distinct domain points carry a
/// realizable labeling all of whose one-flip neighbours are realizable too.
/// Monotone in s (drop a point and the witnesses survive), so the search
/// ascends and stops at the first failing size.
pub fn star_number(class: &FiniteClass, cap: usize) -> Result<StarNumber> {
    if cap < 1 {
        return Err(Error::InvalidArgument("star-number cap must be >= 1".into()));
    }
    let m = class.domain_size();
    let limit = cap.min(m).min(63);
    let mut best = 0;
    for s in 1..=limit {
        let found = (0..m).combinations(s).any(|subset| {
            let patterns = patterns_on(class, &subset);
            patterns
                .iter()
                .any(|&p| (0..s).all(|i| patterns.contains(&(p ^ (1 << i)))))
        });
        if found {
            best = s;
        } else {
            return Ok(StarNumber::Exact(best));
        }
    }
    if best == cap && cap < m {
        Ok(StarNumber::AtLeast(cap))
    } else {
        Ok(StarNumber::Exact(best))
    }
}

/// Number of distinct restrictions of the class to the given input sequence
/// (repeats allowed; the empty sequence has one restriction).
pub fn growth_count(class: &FiniteClass, inputs: &[usize]) -> Result<usize> {
    for &x in inputs {
        if x >= class.domain_size() {
            return Err(Error::IndexOutOfRange {
                what: "domain point",
                got: x,
                size: class.domain_size(),
            });
        }
    }
    let mut seen: HashSet<Vec<Label>> = HashSet::new();
    for h in 0..class.len() {
        let row = class.row(h)?;
        seen.insert(inputs.iter().map(|&x| row[x]).collect());
    }
    Ok(seen.len())
}

/// All hypotheses consistent with the sample (all of them for an empty
/// sample; empty when the sample is unrealizable).
pub fn version_space(class: &FiniteClass, s: &LabeledSample) -> Result<VersionSpace> {
    Ok(VersionSpace::from_members(class.consistent_hypotheses(s)?))
}

/// A minimum set of sample positions whose subsample has the same version
/// space as the full sample. Searched by increasing size; the first hit in
/// lexicographic position order is returned, making ties deterministic.
pub fn empirical_teaching_set(class: &FiniteClass, s: &LabeledSample) -> Result<TeachingSet> {
    let target = version_space(class, s)?;
    if target.is_empty() {
        return Err(Error::Unrealizable(
            "teaching sets are defined for realizable samples".into(),
        ));
    }
    for size in 0..=s.len() {
        for positions in (0..s.len()).combinations(size) {
            let sub = s.subsequence(&positions)?;
            if version_space(class, &sub)? == target {
                return Ok(TeachingSet { indices: positions });
            }
        }
    }
    unreachable!("the full sample always reproduces its own version space")
}

/// Domain points on which the version space disagrees with itself.
pub fn disagreement_region(vs: &VersionSpace, class: &FiniteClass) -> Result<Vec<usize>> {
    if vs.is_empty() {
        return Err(Error::Empty("version space"));
    }
    for &h in vs.members() {
        if h >= class.len() {
            return Err(Error::IndexOutOfRange {
                what: "hypothesis",
                got: h,
                size: class.len(),
            });
        }
    }
    let first = class.row(vs.members()[0])?;
    let mut region = Vec::new();
    for x in 0..class.domain_size() {
        if vs
            .members()
            .iter()
            .any(|&h| class.row(h).expect("validated above")[x] != first[x])
        {
            region.push(x);
        }
    }
    Ok(region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{Example, Input};

    fn ex(x: usize, y: u8) -> Example {
        Example::new(Input::Index(x), Label::from_bit(y).unwrap())
    }

    #[test]
    fn vc_dimension_of_reference_classes() {
        // Thresholds shatter any single point but never a pair.
        assert_eq!(vc_dimension(&FiniteClass::thresholds(10).unwrap()), 1);
        // Point functions cannot produce the (1,1) pattern on two points.
        assert_eq!(vc_dimension(&FiniteClass::point_functions(6).unwrap()), 1);
        // The full class shatters everything.
        assert_eq!(vc_dimension(&FiniteClass::full(3).unwrap()), 3);
        // A one-hypothesis class shatters nothing.
        let constant = FiniteClass::new(3, vec![vec![Label::Zero; 3]], None).unwrap();
        assert_eq!(vc_dimension(&constant), 0);
    }

    #[test]
    fn star_number_of_reference_classes() {
        let cap = STAR_CAP_DEFAULT;
        assert_eq!(
            star_number(&FiniteClass::thresholds(10).unwrap(), cap).unwrap(),
            StarNumber::Exact(2)
        );
        // All-zeros plus one-flip neighbours are exactly the point functions.
        assert_eq!(
            star_number(&FiniteClass::point_functions(6).unwrap(), cap).unwrap(),
            StarNumber::Exact(6)
        );
        assert_eq!(
            star_number(&FiniteClass::full(4).unwrap(), cap).unwrap(),
            StarNumber::Exact(4)
        );
        // Cap smaller than the true value reports a lower bound.
        assert_eq!(
            star_number(&FiniteClass::point_functions(6).unwrap(), 3).unwrap(),
            StarNumber::AtLeast(3)
        );
        assert_eq!(format!("{}", StarNumber::AtLeast(3)), ">=3");
        assert!(star_number(&FiniteClass::full(2).unwrap(), 0).is_err());
    }

    #[test]
    fn vc_never_exceeds_star() {
        for class in [
            FiniteClass::thresholds(8).unwrap(),
            FiniteClass::point_functions(5).unwrap(),
            FiniteClass::full(4).unwrap(),
        ] {
            let d = vc_dimension(&class);
            let s = star_number(&class, STAR_CAP_DEFAULT).unwrap();
            assert!(d <= s.lower_bound(), "vc {d} > star {s}");
        }
    }

    #[test]
    fn growth_counts() {
        let thresholds = FiniteClass::thresholds(10).unwrap();
        // k distinct points admit k+1 threshold patterns.
        assert_eq!(growth_count(&thresholds, &[1, 3, 5, 7]).unwrap(), 5);
        assert_eq!(growth_count(&FiniteClass::full(3).unwrap(), &[0, 1, 2]).unwrap(), 8);
        assert_eq!(growth_count(&thresholds, &[]).unwrap(), 1);
        // Repeats add nothing.
        assert_eq!(growth_count(&thresholds, &[4, 4]).unwrap(), 2);
        assert!(growth_count(&thresholds, &[10]).is_err());
        // Growth-vs-dimension counting anchor: count <= 6 * len^vc.
        let count = growth_count(&thresholds, &[0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        assert!(count as f64 <= 6.0 * 8f64.powi(vc_dimension(&thresholds) as i32));
    }

    #[test]
    fn version_space_scans_consistency() {
        let class = FiniteClass::point_functions(4).unwrap();
        // Two zero-labeled points rule out exactly their point functions.
        let s = LabeledSample::new(vec![ex(0, 0), ex(1, 0)]);
        let vs = version_space(&class, &s).unwrap();
        assert_eq!(vs.members(), &[0, 3, 4]);
        // Empty sample keeps everything.
        let all = version_space(&class, &LabeledSample::empty()).unwrap();
        assert_eq!(all.len(), class.len());
        // Unrealizable sample (two distinct 1-labeled points) keeps nothing.
        let bad = LabeledSample::new(vec![ex(0, 1), ex(1, 1)]);
        assert!(version_space(&class, &bad).unwrap().is_empty());
    }

    #[test]
    fn version_space_is_monotone_in_the_sample() {
        let class = FiniteClass::thresholds(6).unwrap();
        let s = LabeledSample::new(vec![ex(1, 0)]);
        let mut bigger = s.clone();
        bigger.push(ex(4, 1));
        let vs_small = version_space(&class, &s).unwrap();
        let vs_big = version_space(&class, &bigger).unwrap();
        assert!(vs_big.members().iter().all(|h| vs_small.contains(*h)));
    }

    #[test]
    fn teaching_set_for_thresholds() {
        // Points 0,1 labeled zero and 4,8 labeled one: the inner pair pins
        // the version space, so the minimum teaching set is positions {1,2}.
        let class = FiniteClass::thresholds(10).unwrap();
        let s = LabeledSample::new(vec![ex(0, 0), ex(1, 0), ex(4, 1), ex(8, 1)]);
        let ts = empirical_teaching_set(&class, &s).unwrap();
        assert_eq!(ts.indices(), &[1, 2]);
        // Re-verify minimality directly: no singleton or empty subset works.
        let target = version_space(&class, &s).unwrap();
        for size in 0..2 {
            for positions in (0..s.len()).combinations(size) {
                let sub = s.subsequence(&positions).unwrap();
                assert_ne!(version_space(&class, &sub).unwrap(), target);
            }
        }
        // Removing a point outside the teaching set never changes the
        // version space.
        for drop in [0usize, 3] {
            let reduced = s.without(drop).unwrap();
            assert_eq!(version_space(&class, &reduced).unwrap(), target);
        }
    }

    #[test]
    fn teaching_set_edge_cases() {
        let class = FiniteClass::point_functions(3).unwrap();
        // A single informative point teaches itself.
        let s = LabeledSample::new(vec![ex(1, 1)]);
        assert_eq!(empirical_teaching_set(&class, &s).unwrap().indices(), &[0]);
        // A sample whose version space is already the full class needs no
        // teaching at all.
        let empty = LabeledSample::empty();
        assert!(empirical_teaching_set(&class, &empty).unwrap().is_empty());
        // Unrealizable samples are rejected.
        let bad = LabeledSample::new(vec![ex(0, 1), ex(1, 1)]);
        assert!(empirical_teaching_set(&class, &bad).is_err());
    }

    #[test]
    fn disagreement_region_scans() {
        let class = FiniteClass::point_functions(4).unwrap();
        let vs = VersionSpace::from_members(vec![0, 3, 4]);
        assert_eq!(disagreement_region(&vs, &class).unwrap(), vec![2, 3]);
        // Singleton version space: unanimous everywhere.
        let single = VersionSpace::from_members(vec![2]);
        assert!(disagreement_region(&single, &class).unwrap().is_empty());
        // Full class on m points disagrees everywhere.
        let full = FiniteClass::full(3).unwrap();
        let all = VersionSpace::from_members((0..full.len()).collect());
        assert_eq!(disagreement_region(&all, &full).unwrap(), vec![0, 1, 2]);
        assert!(disagreement_region(&VersionSpace::from_members(vec![]), &class).is_err());
    }

    #[test]
    fn teaching_sets_stay_within_star_number_on_random_samples() {
        // Draw realizable samples from thresholds and check |ETS| <= star.
        use rand::{Rng, SeedableRng};
        let class = FiniteClass::thresholds(8).unwrap();
        let star = star_number(&class, STAR_CAP_DEFAULT)
            .unwrap()
            .lower_bound();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..30 {
            let t = rng.gen_range(0..=8);
            let items: Vec<Example> = (0..6)
                .map(|_| {
                    let x = rng.gen_range(0..8);
                    ex(x, u8::from(x >= t))
                })
                .collect();
            let s = LabeledSample::new(items);
            let ts = empirical_teaching_set(&class, &s).unwrap();
            assert!(ts.len() <= star);
        }
    }
}
