//! Polymatroid constraints: membership oracles, the continuous extension,
//! continuous greedy and rounding.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{FractionalPoint, LatticePoint};

pub mod direction;
pub mod extension;
pub mod families;
pub mod greedy;
pub mod rounding;

pub use direction::{
    binary_search_polymatroid, direction_polymatroid, DirectionConfig, EstimatorParams, FeasibilityAnchor,
};
pub use extension::{
    estimate_marginal, extension_estimate, extension_exact, extension_partial, partial_left, partial_right,
};
pub use families::{PartitionPolymatroid, RankTablePolymatroid, UniformPolymatroid};
pub use greedy::{continuous_greedy, maximize_polymatroid, ContinuousOutcome};
pub use rounding::{round_polymatroid, translated_rank, RoundingState};

/// Slack used by the closed-form membership tests on real vectors.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Largest ground set supported by subset bitmasks.
pub const MAX_ELEMENTS: usize = 64;

/// A subset of the ground set as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ElementSet(pub u64);

impl ElementSet {
    pub fn empty() -> Self {
        ElementSet(0)
    }

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            ElementSet(u64::MAX)
        } else {
            ElementSet((1u64 << n) - 1)
        }
    }

    pub fn from_indices(idx: &[usize]) -> Self {
        ElementSet(idx.iter().fold(0, |m, &i| m | (1u64 << i)))
    }

    pub fn contains(self, e: usize) -> bool {
        self.0 >> e & 1 == 1
    }

    pub fn with(self, e: usize) -> Self {
        ElementSet(self.0 | (1u64 << e))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }
}

/// A polymatroid {x ≥ 0 : x(X) ≤ ρ(X) for all X}. Membership is the only
/// required query; families with a closed-form rank also expose it.
pub trait Polymatroid: Send + Sync {
    fn dim(&self) -> usize;

    /// Membership of a real vector, with slack [`MEMBERSHIP_TOL`].
    fn contains(&self, x: &[f64]) -> bool;

    fn rank(&self, _set: ElementSet) -> Option<u64> {
        None
    }
}

/// Counting wrapper around a [`Polymatroid`].
pub struct PolymatroidOracle {
    inner: Arc<dyn Polymatroid>,
    member_calls: AtomicU64,
}

impl PolymatroidOracle {
    pub fn new<P: Polymatroid + 'static>(p: P) -> Result<Self> {
        Self::from_arc(Arc::new(p))
    }

    pub fn from_arc(inner: Arc<dyn Polymatroid>) -> Result<Self> {
        let n = inner.dim();
        if n == 0 || n > MAX_ELEMENTS {
            return Err(Error::Construction(format!("polymatroid dimension must be in 1..={MAX_ELEMENTS}, got {n}")));
        }
        if !inner.contains(&vec![0.0; n]) {
            return Err(Error::Construction("polymatroid must contain 0".into()));
        }
        Ok(PolymatroidOracle { inner, member_calls: AtomicU64::new(0) })
    }

    pub fn fresh(&self) -> PolymatroidOracle {
        PolymatroidOracle { inner: Arc::clone(&self.inner), member_calls: AtomicU64::new(0) }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn member_calls(&self) -> u64 {
        self.member_calls.load(Ordering::Relaxed)
    }

    pub fn contains_slice(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        self.member_calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.inner.contains(x))
    }

    pub fn contains_point(&self, x: &LatticePoint) -> Result<bool> {
        self.contains_slice(&x.to_f64())
    }

    pub fn contains_fractional(&self, x: &FractionalPoint) -> Result<bool> {
        self.contains_slice(x.as_slice())
    }

    /// Closed-form rank if the family provides one.
    pub fn rank(&self, set: ElementSet) -> Option<u64> {
        self.inner.rank(set)
    }

    /// ρ(X), falling back to a greedy computation through membership queries.
    pub fn rank_or_greedy(&self, set: ElementSet) -> Result<u64> {
        match self.inner.rank(set) {
            Some(r) => Ok(r),
            None => self.greedy_rank(set),
        }
    }

    /// ρ(E).
    pub fn total_rank(&self) -> Result<u64> {
        self.rank_or_greedy(ElementSet::full(self.dim()))
    }

    /// Raises the coordinates of X one after another as far as membership
    /// allows. For a polymatroid the result has x(X) = ρ(X).
    fn greedy_rank(&self, set: ElementSet) -> Result<u64> {
        let n = self.dim();
        let mut x = LatticePoint::zeros(n);
        for e in set.iter() {
            let k = self.max_extension(&x, e)?;
            x.add_to(e, k);
        }
        Ok(x.total())
    }

    /// Largest k with x + kχ_e ∈ P, found by doubling then bisection.
    fn max_extension(&self, x: &LatticePoint, e: usize) -> Result<u64> {
        let mut hi = 1u64;
        while self.contains_point(&x.plus_unit(e, hi))? {
            if hi > u64::MAX / 4 {
                return Err(Error::Domain("polymatroid is unbounded".into()));
            }
            hi *= 2;
        }
        let (mut good, mut bad) = (0u64, hi);
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if self.contains_point(&x.plus_unit(e, mid))? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok(good)
    }
}

impl std::fmt::Debug for PolymatroidOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolymatroidOracle")
            .field("dim", &self.dim())
            .field("member_calls", &self.member_calls())
            .finish()
    }
}

/// Largest k ≤ hard_cap with anchor + kχ_e ∈ P.
pub fn k_max_in_polymatroid(p: &PolymatroidOracle, anchor: &FractionalPoint, e: usize, hard_cap: u64) -> Result<u64> {
    check_dim(p.dim(), anchor.dim())?;
    if !p.contains_fractional(anchor)? {
        return Err(Error::Precondition("anchor is not in the polymatroid".into()));
    }
    let mut z = anchor.as_slice().to_vec();
    let base = z[e];
    let mut probe = |k: u64| -> Result<bool> {
        z[e] = base + k as f64;
        p.contains_slice(&z)
    };
    let (mut good, mut bad) = (0u64, hard_cap.saturating_add(1));
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if probe(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Exhaustive check of the rank axioms: ρ(∅) = 0, monotone, submodular.
pub fn check_rank_axioms(p: &PolymatroidOracle) -> Result<()> {
    let n = p.dim();
    if n > 12 {
        return Err(Error::Capacity(format!("rank axiom check supports n ≤ 12, got {n}")));
    }
    let size = 1usize << n;
    let mut rho = Vec::with_capacity(size);
    for m in 0..size {
        rho.push(p.rank_or_greedy(ElementSet(m as u64))?);
    }
    if rho[0] != 0 {
        return Err(Error::Construction(format!("rank of the empty set is {}", rho[0])));
    }
    for m in 0..size {
        for i in (0..n).filter(|&i| m >> i & 1 == 0) {
            let mi = m | 1 << i;
            if rho[mi] < rho[m] {
                return Err(Error::Construction(format!("rank not monotone at set {m:#b} + {i}")));
            }
            for j in (i + 1..n).filter(|&j| m >> j & 1 == 0) {
                let mj = m | 1 << j;
                if rho[mi] + rho[mj] < rho[mi | mj] + rho[m] {
                    return Err(Error::Construction(format!("rank not submodular at set {m:#b} with {i}, {j}")));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_set_basics() {
        let s = ElementSet::from_indices(&[0, 2, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert!(s.contains(2) && !s.contains(1));
        assert_eq!(ElementSet::full(3).0, 7);
    }

    #[test]
    fn k_max_examples() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(3, 2, 5)).unwrap();
        let zero = FractionalPoint::zeros(3);
        assert_eq!(k_max_in_polymatroid(&p, &zero, 1, 10).unwrap(), 2);
        let tight = FractionalPoint::new(vec![2.0, 0.0, 0.0]).unwrap();
        assert_eq!(k_max_in_polymatroid(&p, &tight, 0, 10).unwrap(), 0);
        let outside = FractionalPoint::new(vec![3.0, 0.0, 0.0]).unwrap();
        assert!(matches!(k_max_in_polymatroid(&p, &outside, 0, 10), Err(Error::Precondition(_))));

        let q = PolymatroidOracle::new(PartitionPolymatroid::new(vec![0, 0, 1], vec![3, 1], None).unwrap()).unwrap();
        let anchor = FractionalPoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(k_max_in_polymatroid(&q, &anchor, 0, 10).unwrap(), 2);
    }

    #[test]
    fn k_max_call_budget() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(2, 700, 1000)).unwrap();
        for cap in [0u64, 1, 5, 100, 1000, 4095] {
            let before = p.member_calls();
            k_max_in_polymatroid(&p, &FractionalPoint::zeros(2), 0, cap).unwrap();
            let used = p.member_calls() - before;
            let bound = ((cap + 1) as f64).log2().ceil() as u64 + 1 + 1;
            assert!(used <= bound, "cap {cap}: {used} > {bound}");
        }
    }

    #[test]
    fn greedy_rank_matches_closed_form() {
        struct MembershipOnly(UniformPolymatroid);
        impl Polymatroid for MembershipOnly {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn contains(&self, x: &[f64]) -> bool {
                self.0.contains(x)
            }
        }
        let u = UniformPolymatroid::new(4, 3, 7);
        let p = PolymatroidOracle::new(MembershipOnly(u.clone())).unwrap();
        for m in 0..16u64 {
            assert_eq!(p.rank_or_greedy(ElementSet(m)).unwrap(), u.rank(ElementSet(m)).unwrap());
        }
        check_rank_axioms(&p).unwrap();
    }
}
