//! Integer lattice points, fractional points and box enumeration.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A point of Z_+^E, stored densely.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<u64>);

impl LatticePoint {
    pub fn zeros(n: usize) -> Self {
        LatticePoint(vec![0; n])
    }

    pub fn from_vec(v: Vec<u64>) -> Self {
        LatticePoint(v)
    }

    /// k copies of element `e`.
    pub fn unit(n: usize, e: usize, k: u64) -> Self {
        let mut v = vec![0; n];
        v[e] = k;
        LatticePoint(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }

    pub fn get(&self, e: usize) -> u64 {
        self.0[e]
    }

    pub fn set(&mut self, e: usize, k: u64) {
        self.0[e] = k;
    }

    pub fn add_to(&mut self, e: usize, k: u64) {
        self.0[e] += k;
    }

    /// x + k·χ_e as a new point.
    pub fn plus_unit(&self, e: usize, k: u64) -> Self {
        let mut out = self.clone();
        out.0[e] += k;
        out
    }

    /// x(E).
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// Coordinatewise x ≤ other. Dimensions must agree.
    pub fn le(&self, other: &LatticePoint) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_add(&self, other: &LatticePoint) -> Result<LatticePoint> {
        check_dim(self.dim(), other.dim())?;
        Ok(LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// Semicolon-joined coordinates, the format used in CSV reports.
    pub fn to_joined(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        parts.join(";")
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }
}

impl From<Vec<u64>> for LatticePoint {
    fn from(v: Vec<u64>) -> Self {
        LatticePoint(v)
    }
}

impl Index<usize> for LatticePoint {
    type Output = u64;
    fn index(&self, e: usize) -> &u64 {
        &self.0[e]
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Coordinatewise maximum and minimum.
pub fn join_meet(x: &LatticePoint, y: &LatticePoint) -> Result<(LatticePoint, LatticePoint)> {
    check_dim(x.dim(), y.dim())?;
    let join = x.0.iter().zip(&y.0).map(|(a, b)| *a.max(b)).collect();
    let meet = x.0.iter().zip(&y.0).map(|(a, b)| *a.min(b)).collect();
    Ok((LatticePoint(join), LatticePoint(meet)))
}

/// Multiset difference x ∖ y, that is max(x - y, 0) per coordinate.
pub fn multiset_diff(x: &LatticePoint, y: &LatticePoint) -> Result<LatticePoint> {
    check_dim(x.dim(), y.dim())?;
    Ok(LatticePoint(x.0.iter().zip(&y.0).map(|(a, b)| a.saturating_sub(*b)).collect()))
}

/// A ground set {0, .., n-1} with n ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("ground set must be non-empty".into()));
        }
        Ok(GroundSet { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.n
    }
}

/// A point of R_+^E.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractionalPoint(Vec<f64>);

impl FractionalPoint {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        for (i, &x) in v.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Domain(format!("coordinate {i} must be finite and non-negative, got {x}")));
            }
        }
        Ok(FractionalPoint(v))
    }

    pub fn zeros(n: usize) -> Self {
        FractionalPoint(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, e: usize) -> f64 {
        self.0[e]
    }

    pub fn floor(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|v| v.floor() as u64).collect())
    }

    pub fn ceil(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|v| v.ceil() as u64).collect())
    }

    /// Fractional parts ⟨x_e⟩.
    pub fn fract(&self) -> Vec<f64> {
        self.0.iter().map(|v| v - v.floor()).collect()
    }

    /// Elements whose coordinate is not an integer.
    pub fn fractional_support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, v)| v.fract() != 0.0).map(|(i, _)| i).collect()
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|v| v.fract() == 0.0)
    }
}

impl From<&LatticePoint> for FractionalPoint {
    fn from(x: &LatticePoint) -> Self {
        FractionalPoint(x.to_f64())
    }
}

/// Number of lattice points in the box [0, cap], or None on overflow.
pub fn box_size(cap: &LatticePoint) -> Option<u64> {
    cap.as_slice().iter().try_fold(1u64, |acc, &c| acc.checked_mul(c.checked_add(1)?))
}

/// Iterates the box [0, cap] in lexicographic order (last coordinate fastest).
pub struct BoxIter {
    cap: Vec<u64>,
    next: Option<Vec<u64>>,
}

impl BoxIter {
    pub fn new(cap: &LatticePoint) -> Self {
        BoxIter { cap: cap.as_slice().to_vec(), next: Some(vec![0; cap.dim()]) }
    }
}

impl Iterator for BoxIter {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if succ[i] < self.cap[i] {
                succ[i] += 1;
                advanced = true;
                break;
            }
            succ[i] = 0;
        }
        if advanced {
            self.next = Some(succ);
        }
        Some(LatticePoint(current))
    }
}

/// Mixed-radix index of `x` inside the box [0, cap] (last coordinate fastest),
/// matching the order of [`BoxIter`].
pub fn box_index(cap: &[u64], x: &[u64]) -> usize {
    let mut idx = 0usize;
    for (c, v) in cap.iter().zip(x) {
        idx = idx * (*c as usize + 1) + *v as usize;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(v: &[u64]) -> LatticePoint {
        LatticePoint::from_vec(v.to_vec())
    }

    #[test]
    fn join_meet_example() {
        let (j, m) = join_meet(&lp(&[2, 0, 3]), &lp(&[1, 4, 3])).unwrap();
        assert_eq!(j, lp(&[2, 4, 3]));
        assert_eq!(m, lp(&[1, 0, 3]));
    }

    #[test]
    fn diff_example() {
        let d = multiset_diff(&lp(&[2, 0, 3]), &lp(&[1, 4, 3])).unwrap();
        assert_eq!(d, lp(&[1, 0, 0]));
    }

    #[test]
    fn mismatched_dims_fail() {
        let err = join_meet(&lp(&[1, 2]), &lp(&[1, 2, 3])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
        assert!(multiset_diff(&lp(&[1]), &lp(&[])).is_err());
    }

    #[test]
    fn empty_ground_set_rejected() {
        assert!(GroundSet::new(0).is_err());
        assert_eq!(GroundSet::new(3).unwrap().len(), 3);
    }

    #[test]
    fn negative_fractional_rejected() {
        assert!(FractionalPoint::new(vec![0.5, -0.1]).is_err());
        assert!(FractionalPoint::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn floor_and_fractional_support() {
        let x = FractionalPoint::new(vec![1.5, 2.0, 0.25]).unwrap();
        assert_eq!(x.floor(), lp(&[1, 2, 0]));
        assert_eq!(x.ceil(), lp(&[2, 2, 1]));
        assert_eq!(x.fractional_support(), vec![0, 2]);
    }

    #[test]
    fn box_iteration_matches_index() {
        let cap = lp(&[2, 1, 3]);
        let pts: Vec<_> = BoxIter::new(&cap).collect();
        assert_eq!(pts.len() as u64, box_size(&cap).unwrap());
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(box_index(cap.as_slice(), p.as_slice()), i);
        }
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn box_size_overflow() {
        assert_eq!(box_size(&lp(&[u64::MAX, 1])), None);
        assert_eq!(box_size(&lp(&[])), Some(1));
    }
}
