//! Exact hard-margin max-margin separator for d <= 3.
//!
//! Rather than a numeric QP solver, the optimum is found by enumerating
//! candidate support subsets of up to d+1 distinct points, solving each
//! subset's on-the-margin system by Gaussian elimination, and accepting the
//! first subset whose multipliers are non-negative and whose separator has
//! margin >= 1 on every point. Those are exactly the optimality conditions of
//! the (strictly convex) margin problem, so the first acceptance is the
//! global optimum. The payoff is determinism: the separator's canonical
//! encoding feeds exact entropy computations, where solver jitter would show
//! up as phantom information.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::sample::{Halfspace, Input, Label, LabeledSample};

/// Multiplier / margin tolerance: KKT checks accept violations up to this.
const KKT_TOL: f64 = 1e-9;

/// A halfspace normalized for exact comparison: w scaled to unit norm (or
/// the constant rule w = 0, b = ±1), every coordinate rounded to 12
/// significant digits. Equality and hashing are bitwise on the rounded
/// values, so equivalent separators produced along different paths collapse
/// to one canonical value.
#[derive(Clone, Debug)]
pub struct CanonicalHalfspace {
    w: Vec<f64>,
    b: f64,
}

fn round_sig12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    // 11 digits after the point in scientific notation = 12 significant.
    format!("{x:.11e}").parse().expect("formatted float parses")
}

impl CanonicalHalfspace {
    /// Canonicalize by positive rescaling only: (w, b) and (c·w, c·b) for
    /// c > 0 describe the same classifier, so dividing by |w| is safe.
    /// Flipping the overall sign is not — that yields the complement rule —
    /// so the sign is left untouched.
    pub fn new(h: &Halfspace) -> Result<Self> {
        let norm = h.w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            if h.b == 0.0 {
                return Err(Error::InvalidArgument(
                    "the zero halfspace has no canonical form".into(),
                ));
            }
            return Ok(CanonicalHalfspace {
                w: vec![0.0; h.w.len()],
                b: if h.b > 0.0 { 1.0 } else { -1.0 },
            });
        }
        Ok(CanonicalHalfspace {
            w: h.w.iter().map(|c| round_sig12(c / norm)).collect(),
            b: round_sig12(h.b / norm),
        })
    }

    pub fn as_halfspace(&self) -> Halfspace {
        Halfspace {
            w: self.w.clone(),
            b: self.b,
        }
    }

    pub fn predict(&self, x: &Input) -> Result<Label> {
        self.as_halfspace().predict(x)
    }
}

impl PartialEq for CanonicalHalfspace {
    fn eq(&self, other: &Self) -> bool {
        self.b.to_bits() == other.b.to_bits()
            && self.w.len() == other.w.len()
            && self
                .w
                .iter()
                .zip(&other.w)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for CanonicalHalfspace {}

impl std::hash::Hash for CanonicalHalfspace {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.b.to_bits().hash(state);
        for c in &self.w {
            c.to_bits().hash(state);
        }
    }
}

/// Result of the max-margin computation.
#[derive(Clone, Debug)]
pub struct SvmSolution {
    pub separator: CanonicalHalfspace,
    /// Positions (into the training sample) of the support vectors — the
    /// compression set. At most d+1 entries.
    pub support: Vec<usize>,
    /// Geometric margin; infinite for single-label samples.
    pub margin: f64,
}

/// Solve a dense linear system in place by Gaussian elimination with partial
/// pivoting. Returns None when (numerically) singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = rhs[col];
        for k in col + 1..n {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

struct DistinctPoint {
    coords: Vec<f64>,
    label: Label,
    first_pos: usize,
}

fn distinct_points(s: &LabeledSample) -> Result<(Vec<DistinctPoint>, usize)> {
    if s.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let mut points: Vec<DistinctPoint> = Vec::new();
    let mut dim = 0;
    for (pos, e) in s.iter().enumerate() {
        let coords: Vec<f64> = match e.x.as_coords() {
            Some(c) => c.to_vec(),
            None => vec![e.x.as_scalar().ok_or_else(|| {
                Error::InvalidArgument("separator training needs real-vector inputs".into())
            })?],
        };
        if pos == 0 {
            dim = coords.len();
            if dim > 3 {
                return Err(Error::InvalidArgument(format!(
                    "separator training supports dimension 1..=3, got {dim}"
                )));
            }
        } else if coords.len() != dim {
            return Err(Error::LengthMismatch {
                what: "input dimension",
                left: coords.len(),
                right: dim,
            });
        }
        match points.iter().find(|p| p.coords == coords) {
            Some(p) if p.label != e.y => {
                return Err(Error::NotSeparable(format!(
                    "point {coords:?} appears with both labels"
                )))
            }
            Some(_) => {}
            None => points.push(DistinctPoint {
                coords,
                label: e.y,
                first_pos: pos,
            }),
        }
    }
    // Sort by coordinates so the subset search is order-independent: the
    // compression map must not care how the sample was shuffled.
    points.sort_by(|a, b| {
        a.coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok((points, dim))
}

/// The maximum-margin separator of a linearly separable sample.
pub fn svm_max_margin(s: &LabeledSample) -> Result<SvmSolution> {
    let (points, dim) = distinct_points(s)?;

    let has_one = points.iter().any(|p| p.label == Label::One);
    let has_zero = points.iter().any(|p| p.label == Label::Zero);
    if !(has_one && has_zero) {
        // One-sided sample: the margin problem degenerates, the minimum-norm
        // solution is the constant rule. Compress to the coordinate-least
        // point (any one point reconstructs the same constant).
        let b = if has_one { 1.0 } else { -1.0 };
        let separator = CanonicalHalfspace::new(&Halfspace::new(vec![0.0; dim], b)?)?;
        return Ok(SvmSolution {
            separator,
            support: vec![points[0].first_pos],
            margin: f64::INFINITY,
        });
    }

    let k_max = (dim + 1).min(points.len());
    for size in 2..=k_max {
        'subset: for subset in (0..points.len()).combinations(size) {
            let signs: Vec<f64> = subset.iter().map(|&i| points[i].label.sign()).collect();
            if signs.iter().all(|&v| v > 0.0) || signs.iter().all(|&v| v < 0.0) {
                continue; // a margin needs both sides
            }
            // On-the-margin system in the multipliers and offset:
            //   sum_i a_i y_i y_j <x_i, x_j> + y_j b = 1   for each j
            //   sum_i a_i y_i = 0
            let mut mat = vec![vec![0.0; size + 1]; size + 1];
            let mut rhs = vec![0.0; size + 1];
            for (row, &j) in subset.iter().enumerate() {
                for (col, &i) in subset.iter().enumerate() {
                    let dot: f64 = points[i]
                        .coords
                        .iter()
                        .zip(&points[j].coords)
                        .map(|(a, b)| a * b)
                        .sum();
                    mat[row][col] = signs[col] * signs[row] * dot;
                }
                mat[row][size] = signs[row];
                rhs[row] = 1.0;
            }
            for (col, &sign) in signs.iter().enumerate() {
                mat[size][col] = sign;
            }
            let Some(solution) = solve_linear(mat, rhs) else {
                continue;
            };
            let alphas = &solution[..size];
            let b = solution[size];
            if alphas.iter().any(|&a| a < -KKT_TOL) {
                continue;
            }
            let mut w = vec![0.0; dim];
            for ((&i, &sign), &alpha) in subset.iter().zip(&signs).zip(alphas) {
                for (wc, xc) in w.iter_mut().zip(&points[i].coords) {
                    *wc += alpha * sign * xc;
                }
            }
            let norm = w.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            // Global feasibility: every point at functional margin >= 1.
            for p in &points {
                let act: f64 =
                    w.iter().zip(&p.coords).map(|(a, b)| a * b).sum::<f64>() + b;
                if p.label.sign() * act < 1.0 - KKT_TOL {
                    continue 'subset;
                }
            }
            let mut support: Vec<usize> = subset
                .iter()
                .zip(alphas)
                .filter(|(_, &a)| a > KKT_TOL)
                .map(|(&i, _)| points[i].first_pos)
                .collect();
            support.sort_unstable();
            let separator = CanonicalHalfspace::new(&Halfspace::new(w, b)?)?;
            return Ok(SvmSolution {
                separator,
                support,
                margin: 1.0 / norm,
            });
        }
    }
    Err(Error::NotSeparable(
        "no separator attains a positive margin".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ContinuousSpec, Family, TargetRule};
    use crate::sample::Example;
    use rand::SeedableRng;

    fn s1(points: &[(f64, u8)]) -> LabeledSample {
        LabeledSample::new(
            points
                .iter()
                .map(|&(x, y)| {
                    Example::new(Input::scalar(x).unwrap(), Label::from_bit(y).unwrap())
                })
                .collect(),
        )
    }

    fn s2(points: &[([f64; 2], u8)]) -> LabeledSample {
        LabeledSample::new(
            points
                .iter()
                .map(|&(x, y)| {
                    Example::new(Input::point(x.to_vec()).unwrap(), Label::from_bit(y).unwrap())
                })
                .collect(),
        )
    }

    #[test]
    fn symmetric_pair_splits_at_zero() {
        let sol = svm_max_margin(&s1(&[(-1.0, 0), (1.0, 1)])).unwrap();
        let h = sol.separator.as_halfspace();
        assert!((h.w[0] - 1.0).abs() < 1e-9);
        assert!(h.b.abs() < 1e-9);
        assert!((sol.margin - 1.0).abs() < 1e-9);
        assert_eq!(sol.support, vec![0, 1]);
    }

    #[test]
    fn vertical_pair_splits_on_the_axis() {
        let sol = svm_max_margin(&s2(&[([0.0, -1.0], 0), ([0.0, 1.0], 1)])).unwrap();
        let h = sol.separator.as_halfspace();
        assert!(h.w[0].abs() < 1e-9);
        assert!((h.w[1] - 1.0).abs() < 1e-9);
        assert!(h.b.abs() < 1e-9);
    }

    #[test]
    fn single_label_samples_yield_the_constant_rule() {
        let sol = svm_max_margin(&s1(&[(2.0, 1), (5.0, 1)])).unwrap();
        let h = sol.separator.as_halfspace();
        assert_eq!(h.w, vec![0.0]);
        assert_eq!(h.b, 1.0);
        assert!(sol.margin.is_infinite());
        assert_eq!(sol.support.len(), 1);
        assert_eq!(
            sol.separator.predict(&Input::scalar(-100.0).unwrap()).unwrap(),
            Label::One
        );
    }

    #[test]
    fn conflicting_and_inseparable_samples_are_rejected() {
        assert!(svm_max_margin(&s1(&[(1.0, 0), (1.0, 1)])).is_err());
        // Alternating labels on a line cannot be split.
        assert!(svm_max_margin(&s1(&[(0.0, 0), (1.0, 1), (2.0, 0)])).is_err());
    }

    #[test]
    fn interior_points_are_not_support_vectors() {
        let sol = svm_max_margin(&s1(&[(-3.0, 0), (-1.0, 0), (1.0, 1), (4.0, 1)])).unwrap();
        // Only the boundary pair matters.
        assert_eq!(sol.support, vec![1, 2]);
        // Dropping the interior points reproduces the same separator.
        let reduced = svm_max_margin(&s1(&[(-1.0, 0), (1.0, 1)])).unwrap();
        assert_eq!(sol.separator, reduced.separator);
    }

    #[test]
    fn output_is_order_invariant() {
        let a = svm_max_margin(&s2(&[
            ([0.0, 0.0], 0),
            ([2.0, 0.2], 1),
            ([0.3, 1.0], 0),
            ([2.5, 1.5], 1),
        ]))
        .unwrap();
        let b = svm_max_margin(&s2(&[
            ([2.5, 1.5], 1),
            ([0.3, 1.0], 0),
            ([2.0, 0.2], 1),
            ([0.0, 0.0], 0),
        ]))
        .unwrap();
        assert_eq!(a.separator, b.separator);
        assert!((a.margin - b.margin).abs() < 1e-12);
    }

    #[test]
    fn positive_parameter_rescaling_collapses_to_one_encoding() {
        let h1 = Halfspace::new(vec![3.0, -4.0], 2.5).unwrap();
        let h2 = Halfspace::new(vec![6.0, -8.0], 5.0).unwrap();
        assert_eq!(
            CanonicalHalfspace::new(&h1).unwrap(),
            CanonicalHalfspace::new(&h2).unwrap()
        );
        // Sign flip is a different classifier, not the same one.
        let h3 = Halfspace::new(vec![-3.0, 4.0], -2.5).unwrap();
        assert_ne!(
            CanonicalHalfspace::new(&h1).unwrap(),
            CanonicalHalfspace::new(&h3).unwrap()
        );
    }

    #[test]
    fn input_scaling_moves_the_separator_consistently() {
        let base = s2(&[([0.0, 0.0], 0), ([1.0, 2.0], 1), ([2.0, 0.5], 1)]);
        let scaled = LabeledSample::new(
            base.iter()
                .map(|e| {
                    let c = e.x.as_coords().unwrap();
                    Example::new(
                        Input::point(c.iter().map(|v| v * 2.0).collect()).unwrap(),
                        e.y,
                    )
                })
                .collect(),
        );
        let sol = svm_max_margin(&base).unwrap();
        let sol_scaled = svm_max_margin(&scaled).unwrap();
        // Doubling the inputs doubles the geometric margin and the offset.
        assert!((sol_scaled.margin - 2.0 * sol.margin).abs() < 1e-9);
        let h = sol.separator.as_halfspace();
        let expected = CanonicalHalfspace::new(
            &Halfspace::new(h.w.clone(), 2.0 * h.b).unwrap(),
        )
        .unwrap();
        assert_eq!(sol_scaled.separator, expected);
    }

    #[test]
    fn support_count_stays_within_dimension_plus_one() {
        // Random separable planar samples via a margin-gap distribution.
        let spec = ContinuousSpec::new(
            Family::UniformBox {
                lows: vec![0.0, 0.0],
                highs: vec![1.0, 1.0],
            },
            TargetRule::Halfspace(Halfspace::new(vec![1.0, -1.0], 0.1).unwrap()),
            0.1,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for _ in 0..50 {
            let mut items = Vec::new();
            for _ in 0..12 {
                items.push(spec.draw(&mut rng).unwrap());
            }
            let sample = LabeledSample::new(items);
            let sol = svm_max_margin(&sample).unwrap();
            assert!(sol.support.len() <= 3, "support {:?}", sol.support);
            // The sample's margin gap guarantees a geometric margin >= 0.1
            // whenever both labels appear.
            let both = sample.iter().any(|e| e.y == Label::One)
                && sample.iter().any(|e| e.y == Label::Zero);
            if both {
                assert!(sol.margin >= 0.1 - 1e-9, "margin {}", sol.margin);
            }
            // Every training point is classified correctly.
            for e in &sample {
                assert_eq!(sol.separator.predict(&e.x).unwrap(), e.y);
            }
        }
    }
}
