//! Discrete probability and signed measures on R^d.
//!
//! Atoms are kept in canonical (lexicographic) order with duplicates merged,
//! so two measures built from the same multiset of weighted points compare
//! equal and every reduction over atoms runs in a fixed order.
//!
//! Point identity is bitwise: coordinates are compared with
//! [`f64::total_cmp`], so `0.0` and `-0.0` are distinct points. Empirical
//! measures reuse the exact sampled values, which makes tolerance-based
//! merging unnecessary.

mod text;

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

pub use text::{fmt_exact, parse_atoms, write_atoms, write_plan};
pub(crate) use text::{content_lines, parse_f64, parse_header_field};

/// Largest tolerated deviation of normalized weights from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A point of R^d with finite coordinates.
#[derive(Clone, Debug)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("point must have at least one coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {c}")));
        }
        Ok(Point(coords))
    }

    /// One-dimensional point. Panics on a non-finite value.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate {x}");
        Point(vec![x])
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// First coordinate.
    pub fn x1(&self) -> f64 {
        self.0[0]
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Point of R^{d1+d2} obtained by stacking the coordinates.
    pub fn concat(&self, other: &Point) -> Point {
        let mut c = self.0.clone();
        c.extend_from_slice(&other.0);
        Point(c)
    }

    pub(crate) fn split_at(&self, d: usize) -> (Point, Point) {
        (Point(self.0[..d].to_vec()), Point(self.0[d..].to_vec()))
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Borrowed weighted support. Zero weights are allowed so that a family of
/// measures over one fixed support can be evaluated without reallocation.
#[derive(Clone, Copy, Debug)]
pub struct AtomView<'a> {
    pub points: &'a [Point],
    pub weights: &'a [f64],
}

impl<'a> AtomView<'a> {
    pub fn new(points: &'a [Point], weights: &'a [f64]) -> Self {
        debug_assert_eq!(points.len(), weights.len());
        AtomView { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Atoms with nonzero weight.
    pub fn iter(&self) -> impl Iterator<Item = (&'a Point, f64)> + '_ {
        self.points
            .iter()
            .zip(self.weights.iter().copied())
            .filter(|(_, w)| *w != 0.0)
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }
}

/// Sort by point and merge bitwise-equal points by weight addition.
fn merge_sorted(mut raw: Vec<(Point, f64)>) -> (Vec<Point>, Vec<f64>) {
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    let mut points: Vec<Point> = Vec::with_capacity(raw.len());
    let mut weights: Vec<f64> = Vec::with_capacity(raw.len());
    for (p, w) in raw {
        match points.last() {
            Some(last) if *last == p => *weights.last_mut().unwrap() += w,
            _ => {
                points.push(p);
                weights.push(w);
            }
        }
    }
    (points, weights)
}

fn check_dims<'a>(dim: usize, points: impl Iterator<Item = &'a Point>) -> Result<()> {
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
    }
    Ok(())
}

/// Probability measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Merge duplicates, drop zero weights, renormalize and sort.
    pub fn consolidate(raw: Vec<(Point, f64)>) -> Result<Self> {
        let dim = raw.first().map(|(p, _)| p.dim()).ok_or(Error::EmptyMeasure)?;
        check_dims(dim, raw.iter().map(|(p, _)| p))?;
        for (index, (_, w)) in raw.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidWeight { index, weight: *w });
            }
        }
        let (points, weights) = merge_sorted(raw);
        let (points, weights): (Vec<_>, Vec<_>) =
            points.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).unzip();
        Self::normalized(dim, points, weights)
    }

    fn normalized(dim: usize, points: Vec<Point>, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if points.is_empty() || total <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        for w in &mut weights {
            *w /= total;
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() >= NORMALIZATION_TOL {
            return Err(Error::Normalization { sum });
        }
        Ok(DiscreteMeasure { dim, points, weights })
    }

    pub fn dirac(p: Point) -> Self {
        DiscreteMeasure { dim: p.dim(), points: vec![p], weights: vec![1.0] }
    }

    /// Uniform measure on the given points, duplicates merged.
    pub fn empirical(points: &[Point]) -> Result<Self> {
        let dim = points.first().map(Point::dim).ok_or(Error::EmptyMeasure)?;
        check_dims(dim, points.iter())?;
        let mut sorted: Vec<&Point> = points.iter().collect();
        sorted.sort();
        let mut support: Vec<Point> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for p in sorted {
            match support.last() {
                Some(last) if last == p => *counts.last_mut().unwrap() += 1,
                _ => {
                    support.push(p.clone());
                    counts.push(1);
                }
            }
        }
        Self::from_counts(&support, &counts)
    }

    /// Empirical measure of a path given as occupation counts over a
    /// canonical support (sorted, duplicate free).
    pub fn from_counts(support: &[Point], counts: &[u64]) -> Result<Self> {
        assert_eq!(support.len(), counts.len());
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyMeasure);
        }
        let nf = n as f64;
        let (points, weights) = support
            .iter()
            .zip(counts)
            .filter(|(_, c)| **c > 0)
            .map(|(p, c)| (p.clone(), *c as f64 / nf))
            .unzip();
        Ok(DiscreteMeasure { dim: support[0].dim(), points, weights })
    }

    /// Measure on a canonical support, with zero weights dropped.
    pub fn on_support(support: &[Point], weights: &[f64]) -> Result<Self> {
        assert_eq!(support.len(), weights.len());
        let raw = support.iter().cloned().zip(weights.iter().copied()).collect();
        Self::consolidate(raw)
    }

    /// Convex combination Σ c_k m_k; coefficients must be nonnegative.
    pub fn mixture(components: &[(f64, &DiscreteMeasure)]) -> Result<Self> {
        let raw = components
            .iter()
            .flat_map(|(c, m)| m.atoms().map(move |(p, w)| (p.clone(), c * w)))
            .collect();
        Self::consolidate(raw)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn view(&self) -> AtomView<'_> {
        AtomView::new(&self.points, &self.weights)
    }

    /// Weight of the atom at `p`, zero if absent.
    pub fn weight_of(&self, p: &Point) -> f64 {
        self.points.binary_search(p).map(|i| self.weights[i]).unwrap_or(0.0)
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.atoms().map(|(p, w)| w * f(p)).sum()
    }

    /// ∫|x|^ℓ dm with the Euclidean norm.
    pub fn moment(&self, ell: f64) -> f64 {
        assert!(ell >= 0.0, "moment order must be nonnegative");
        self.integrate(|p| p.norm().powf(ell))
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.atoms() {
            for (acc, c) in m.iter_mut().zip(p.coords()) {
                *acc += w * c;
            }
        }
        m
    }

    pub fn to_signed(&self) -> SignedDiscreteMeasure {
        SignedDiscreteMeasure {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.clone(),
        }
    }

    /// Signed measure self − other.
    pub fn minus(&self, other: &DiscreteMeasure) -> Result<SignedDiscreteMeasure> {
        self.to_signed().sub(&other.to_signed())
    }

    /// Total-variation distance sup_A |m1(A) − m2(A)|.
    pub fn total_variation(&self, other: &DiscreteMeasure) -> Result<f64> {
        Ok(0.5 * self.minus(other)?.total_variation())
    }

    /// Probability measure from a signed one with nonnegative weights.
    /// Weights in (−tol, 0) are rounding noise and are clamped to zero.
    pub fn from_signed(tau: &SignedDiscreteMeasure, tol: f64) -> Result<Self> {
        let mut raw = Vec::with_capacity(tau.len());
        for (index, (p, w)) in tau.atoms().enumerate() {
            if w < -tol {
                return Err(Error::InvalidWeight { index, weight: w });
            }
            raw.push((p.clone(), w.max(0.0)));
        }
        if raw.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Self::consolidate(raw)
    }

    pub fn to_text(&self) -> String {
        write_atoms(self.dim, self.atoms())
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let (dim, raw) = parse_atoms(s)?;
        if raw.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        for (i, (_, w)) in raw.iter().enumerate() {
            if *w < 0.0 {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("negative weight {w} in probability measure"),
                });
            }
        }
        let m = Self::consolidate(raw)?;
        debug_assert_eq!(m.dim, dim);
        Ok(m)
    }
}

/// Finite signed measure, consolidated, with exact-zero atoms removed.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl SignedDiscreteMeasure {
    pub fn zero(dim: usize) -> Self {
        SignedDiscreteMeasure { dim, points: Vec::new(), weights: Vec::new() }
    }

    pub fn consolidate(dim: usize, raw: Vec<(Point, f64)>) -> Result<Self> {
        check_dims(dim, raw.iter().map(|(p, _)| p))?;
        for (index, (_, w)) in raw.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidWeight { index, weight: *w });
            }
        }
        let (points, weights) = merge_sorted(raw);
        let (points, weights) = points.into_iter().zip(weights).filter(|(_, w)| *w != 0.0).unzip();
        Ok(SignedDiscreteMeasure { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn view(&self) -> AtomView<'_> {
        AtomView::new(&self.points, &self.weights)
    }

    fn combine(&self, other: &SignedDiscreteMeasure, sign: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let raw = self
            .atoms()
            .map(|(p, w)| (p.clone(), w))
            .chain(other.atoms().map(|(p, w)| (p.clone(), sign * w)))
            .collect();
        Self::consolidate(self.dim, raw)
    }

    pub fn add(&self, other: &SignedDiscreteMeasure) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &SignedDiscreteMeasure) -> Result<Self> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let raw = self.atoms().map(|(p, w)| (p.clone(), c * w)).collect();
        Self::consolidate(self.dim, raw).expect("scaling preserves dimension")
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// |τ|(R^d).
    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.atoms().map(|(p, w)| w * f(p)).sum()
    }

    /// ‖τ‖_ℓ = sup_{|f| ≤ 1+|x|^ℓ} ∫f dτ, attained atomwise by
    /// f = sign(w_i)(1+|x_i|^ℓ). For ℓ = 0 the constraint is |f| ≤ 1, so
    /// that ‖μ1 − μ2‖_0 = |μ1 − μ2|(R^d) = 2 d_TV(μ1, μ2).
    pub fn weighted_norm(&self, ell: f64) -> f64 {
        assert!(ell >= 0.0, "norm order must be nonnegative");
        if ell == 0.0 {
            return self.total_variation();
        }
        self.atoms().map(|(p, w)| w.abs() * (1.0 + p.norm().powf(ell))).sum()
    }

    /// Jordan decomposition (τ⁺, τ⁻) with τ = τ⁺ − τ⁻.
    pub fn jordan(&self) -> (SignedDiscreteMeasure, SignedDiscreteMeasure) {
        let pick = |positive: bool| {
            let (points, weights) = self
                .atoms()
                .filter(|(_, w)| (*w > 0.0) == positive)
                .map(|(p, w)| (p.clone(), w.abs()))
                .unzip();
            SignedDiscreteMeasure { dim: self.dim, points, weights }
        };
        (pick(true), pick(false))
    }

    pub fn to_text(&self) -> String {
        write_atoms(self.dim, self.atoms())
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let (dim, raw) = parse_atoms(s)?;
        Self::consolidate(dim, raw)
    }
}

/// Probability measure on R^d × R^d, stored as a measure on R^{2d}.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMeasure2d {
    base_dim: usize,
    joint: DiscreteMeasure,
}

impl ProductMeasure2d {
    pub fn from_pairs(raw: Vec<((Point, Point), f64)>) -> Result<Self> {
        let base_dim = raw.first().map(|((x, _), _)| x.dim()).ok_or(Error::EmptyMeasure)?;
        let mut joint = Vec::with_capacity(raw.len());
        for ((x, y), w) in raw {
            if x.dim() != base_dim || y.dim() != base_dim {
                return Err(Error::DimensionMismatch {
                    expected: base_dim,
                    found: x.dim().max(y.dim()),
                });
            }
            joint.push((x.concat(&y), w));
        }
        Ok(ProductMeasure2d { base_dim, joint: DiscreteMeasure::consolidate(joint)? })
    }

    /// m1 ⊗ m2.
    pub fn product(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> Result<Self> {
        if m1.dim() != m2.dim() {
            return Err(Error::DimensionMismatch { expected: m1.dim(), found: m2.dim() });
        }
        let raw = m1
            .atoms()
            .flat_map(|(x, wx)| m2.atoms().map(move |(y, wy)| ((x.clone(), y.clone()), wx * wy)))
            .collect();
        Self::from_pairs(raw)
    }

    /// Σ c_k θ_k ⊗ θ_k.
    pub fn diagonal_mixture(components: &[(f64, &DiscreteMeasure)]) -> Result<Self> {
        let mut raw = Vec::new();
        for (c, theta) in components {
            for (x, wx) in theta.atoms() {
                for (y, wy) in theta.atoms() {
                    raw.push(((x.clone(), y.clone()), c * wx * wy));
                }
            }
        }
        Self::from_pairs(raw)
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// The measure viewed on R^{2d}.
    pub fn joint(&self) -> &DiscreteMeasure {
        &self.joint
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((Point, Point), f64)> + '_ {
        self.joint.atoms().map(|(p, w)| (p.split_at(self.base_dim), w))
    }

    pub fn integrate(&self, f: impl Fn(&Point, &Point) -> f64) -> f64 {
        self.pairs().map(|((x, y), w)| w * f(&x, &y)).sum()
    }

    pub fn marginal_first(&self) -> DiscreteMeasure {
        let raw = self.pairs().map(|((x, _), w)| (x, w)).collect();
        DiscreteMeasure::consolidate(raw).expect("marginal of a probability measure")
    }

    pub fn marginal_second(&self) -> DiscreteMeasure {
        let raw = self.pairs().map(|((_, y), w)| (y, w)).collect();
        DiscreteMeasure::consolidate(raw).expect("marginal of a probability measure")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m1d(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::consolidate(atoms.iter().map(|&(x, w)| (Point::scalar(x), w)).collect())
            .unwrap()
    }

    fn s1d(atoms: &[(f64, f64)]) -> SignedDiscreteMeasure {
        SignedDiscreteMeasure::consolidate(
            1,
            atoms.iter().map(|&(x, w)| (Point::scalar(x), w)).collect(),
        )
        .unwrap()
    }

    fn pairs(m: &DiscreteMeasure) -> Vec<(f64, f64)> {
        m.atoms().map(|(p, w)| (p.x1(), w)).collect()
    }

    #[test]
    fn consolidate_merges_duplicates() {
        let m = m1d(&[(0.0, 0.5), (0.0, 0.25), (1.0, 0.25)]);
        assert_eq!(pairs(&m), vec![(0.0, 0.75), (1.0, 0.25)]);
    }

    #[test]
    fn consolidate_single_atom() {
        assert_eq!(pairs(&m1d(&[(2.0, 1.0)])), vec![(2.0, 1.0)]);
    }

    #[test]
    fn consolidate_orders_canonically() {
        let m = m1d(&[(0.0, 0.3), (1.0, 0.3), (0.0, 0.4)]);
        let got = pairs(&m);
        assert_eq!(got[0].0, 0.0);
        assert!((got[0].1 - 0.7).abs() < 1e-15);
        assert_eq!(got[1].0, 1.0);
        assert!((got[1].1 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn consolidate_rejects_all_zero() {
        let r = DiscreteMeasure::consolidate(vec![(Point::scalar(0.0), 0.0)]);
        assert!(matches!(r, Err(Error::EmptyMeasure)));
        assert!(matches!(DiscreteMeasure::consolidate(vec![]), Err(Error::EmptyMeasure)));
    }

    #[test]
    fn consolidate_rejects_negative_and_mixed_dims() {
        let r = DiscreteMeasure::consolidate(vec![(Point::scalar(0.0), -0.1)]);
        assert!(matches!(r, Err(Error::InvalidWeight { .. })));
        let r = DiscreteMeasure::consolidate(vec![
            (Point::scalar(0.0), 0.5),
            (Point::new(vec![0.0, 1.0]).unwrap(), 0.5),
        ]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn points_reject_non_finite() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn signed_zero_is_a_distinct_point() {
        let m = m1d(&[(0.0, 0.5), (-0.0, 0.5)]);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn moments() {
        assert_eq!(DiscreteMeasure::dirac(Point::scalar(0.0)).moment(2.0), 0.0);
        assert_eq!(m1d(&[(0.0, 0.5), (2.0, 0.5)]).moment(2.0), 2.0);
    }

    #[test]
    fn moment_matches_termwise_sum() {
        // independent accumulation in reverse order with compensated summation
        let atoms = [(-1.3, 0.1), (0.2, 0.3), (2.5, 0.15), (-0.7, 0.25), (1.1, 0.2)];
        let m = m1d(&atoms);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &(x, w) in atoms.iter().rev() {
            let term = w * (x as f64).abs().powi(3) - comp;
            let t = sum + term;
            comp = (t - sum) - term;
            sum = t;
        }
        assert!((m.moment(3.0) - sum).abs() < 1e-14);
    }

    #[test]
    fn weighted_norm_examples() {
        let a = Point::scalar(0.4);
        let z = DiscreteMeasure::dirac(a.clone()).minus(&DiscreteMeasure::dirac(a)).unwrap();
        assert!(z.is_empty());
        assert_eq!(z.weighted_norm(2.0), 0.0);

        let tau = s1d(&[(1.0, 1.0), (0.0, -1.0)]);
        assert_eq!(tau.weighted_norm(2.0), 3.0);
    }

    #[test]
    fn norm_zero_is_twice_total_variation() {
        let m1 = m1d(&[(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)]);
        let m2 = m1d(&[(1.0, 0.1), (2.0, 0.6), (3.0, 0.3)]);
        // half-sum of absolute differences over the union support
        let support = [0.0, 1.0, 2.0, 3.0];
        let half_sum: f64 = 0.5
            * support
                .iter()
                .map(|&x| (m1.weight_of(&Point::scalar(x)) - m2.weight_of(&Point::scalar(x))).abs())
                .sum::<f64>();
        let norm0 = m1.minus(&m2).unwrap().weighted_norm(0.0);
        assert!((norm0 - 2.0 * half_sum).abs() < 1e-15);
        assert!((m1.total_variation(&m2).unwrap() - half_sum).abs() < 1e-15);
    }

    #[test]
    fn empirical_examples() {
        let pts = [Point::scalar(0.0), Point::scalar(0.0), Point::scalar(1.0)];
        let m = DiscreteMeasure::empirical(&pts).unwrap();
        let got = pairs(&m);
        assert!((got[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((got[1].1 - 1.0 / 3.0).abs() < 1e-15);

        let m = DiscreteMeasure::empirical(&[Point::scalar(4.2)]).unwrap();
        assert_eq!(m, DiscreteMeasure::dirac(Point::scalar(4.2)));

        assert!(matches!(DiscreteMeasure::empirical(&[]), Err(Error::EmptyMeasure)));
    }

    #[test]
    fn empirical_frequency_within_binomial_error() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point> = (0..1000)
            .map(|_| Point::scalar(if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 }))
            .collect();
        let m = DiscreteMeasure::empirical(&pts).unwrap();
        let sigma = 0.5 / (1000f64).sqrt();
        assert!((m.weight_of(&Point::scalar(0.0)) - 0.5).abs() < 5.0 * sigma);
    }

    #[test]
    fn from_counts_matches_empirical() {
        let support = vec![Point::scalar(-1.0), Point::scalar(0.5), Point::scalar(2.0)];
        let m = DiscreteMeasure::from_counts(&support, &[2, 0, 3]).unwrap();
        let pts = [-1.0, 2.0, -1.0, 2.0, 2.0].map(Point::scalar);
        assert_eq!(m, DiscreteMeasure::empirical(&pts).unwrap());
    }

    #[test]
    fn jordan_recovers_measure() {
        let tau = s1d(&[(0.0, 0.3), (1.0, -0.5), (2.0, 0.2)]);
        let (pos, neg) = tau.jordan();
        assert_eq!(pos.sub(&neg).unwrap(), tau);
        assert!(pos.weights().iter().chain(neg.weights()).all(|w| *w > 0.0));
    }

    #[test]
    fn product_marginals() {
        let a = m1d(&[(0.0, 0.3), (1.0, 0.7)]);
        let b = m1d(&[(2.0, 0.4), (5.0, 0.6)]);
        let p = ProductMeasure2d::product(&a, &b).unwrap();
        assert_eq!(p.marginal_first(), a);
        let second = p.marginal_second();
        for ((p1, w1), (p2, w2)) in second.atoms().zip(b.atoms()) {
            assert_eq!(p1, p2);
            assert!((w1 - w2).abs() < 1e-15);
        }
        assert_eq!(p.joint().dim(), 2);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = m1d(&[(0.1, 1.0 / 3.0), (-2.7e-9, 2.0 / 3.0)]);
        let back = DiscreteMeasure::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.weights(), m.weights());
    }

    fn small_signed() -> impl Strategy<Value = SignedDiscreteMeasure> {
        prop::collection::vec((-3i32..4, -1.0f64..1.0), 0..6).prop_map(|atoms| {
            s1d(&atoms.iter().map(|&(x, w)| (x as f64 * 0.5, w)).collect::<Vec<_>>())
        })
    }

    fn small_probability() -> impl Strategy<Value = DiscreteMeasure> {
        prop::collection::vec((-3i32..4, 0.01f64..1.0), 1..6).prop_map(|atoms| {
            m1d(&atoms.iter().map(|&(x, w)| (x as f64 * 0.5, w)).collect::<Vec<_>>())
        })
    }

    proptest! {
        #[test]
        fn consolidate_is_idempotent(m in small_probability()) {
            let again = DiscreteMeasure::consolidate(
                m.atoms().map(|(p, w)| (p.clone(), w)).collect()).unwrap();
            prop_assert_eq!(again.points(), m.points());
            for (a, b) in again.weights().iter().zip(m.weights()) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn zero_moment_is_one(m in small_probability()) {
            prop_assert!((m.moment(0.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn weighted_norm_is_a_norm(a in small_signed(), b in small_signed(), c in -3.0f64..3.0, ell in 0.0f64..4.0) {
            let sum = a.add(&b).unwrap();
            prop_assert!(sum.weighted_norm(ell) <= a.weighted_norm(ell) + b.weighted_norm(ell) + 1e-12);
            let scaled = a.scale(c).weighted_norm(ell);
            prop_assert!((scaled - c.abs() * a.weighted_norm(ell)).abs() <= 1e-12 * (1.0 + scaled));
        }

        #[test]
        fn ell_norm_dominates_tv_norm(m1 in small_probability(), m2 in small_probability(), ell in 0.0f64..4.0) {
            let d = m1.minus(&m2).unwrap();
            prop_assert!(d.weighted_norm(ell) >= d.weighted_norm(0.0) - 1e-15);
        }
    }
}
