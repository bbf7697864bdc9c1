//! Closed-form and table-driven polymatroids.

use super::{check_rank_axioms, ElementSet, Polymatroid, PolymatroidOracle, MEMBERSHIP_TOL};
use crate::error::{Error, Result};

fn nonneg(x: &[f64]) -> bool {
    x.iter().all(|&v| v >= -MEMBERSHIP_TOL)
}

/// ρ(X) = min(a·|X|, r): every coordinate at most a, total at most r.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformPolymatroid {
    n: usize,
    per_element: u64,
    total: u64,
}

impl UniformPolymatroid {
    pub fn new(n: usize, per_element: u64, total: u64) -> Self {
        UniformPolymatroid { n, per_element, total }
    }
}

impl Polymatroid for UniformPolymatroid {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, x: &[f64]) -> bool {
        let a = self.per_element as f64 + MEMBERSHIP_TOL;
        nonneg(x) && x.iter().all(|&v| v <= a) && x.iter().sum::<f64>() <= self.total as f64 + MEMBERSHIP_TOL
    }

    fn rank(&self, set: ElementSet) -> Option<u64> {
        Some((self.per_element * set.len() as u64).min(self.total))
    }
}

/// ρ(X) = Σ_j min(|X ∩ P_j|·cap_j, total_j). Each element of part j holds at
/// most cap_j units; an optional part total bounds the sum over the part.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPolymatroid {
    part_of: Vec<usize>,
    caps: Vec<u64>,
    totals: Option<Vec<u64>>,
}

impl PartitionPolymatroid {
    pub fn new(part_of: Vec<usize>, caps: Vec<u64>, totals: Option<Vec<u64>>) -> Result<Self> {
        if part_of.is_empty() {
            return Err(Error::Construction("partition needs at least one element".into()));
        }
        if let Some((e, &j)) = part_of.iter().enumerate().find(|(_, &j)| j >= caps.len()) {
            return Err(Error::Construction(format!(
                "element {e} refers to part {j}, but only {} caps are given",
                caps.len()
            )));
        }
        if let Some(t) = &totals {
            if t.len() != caps.len() {
                return Err(Error::Construction(format!("{} part totals given for {} parts", t.len(), caps.len())));
            }
        }
        Ok(PartitionPolymatroid { part_of, caps, totals })
    }

    /// Builds the part index from explicit element lists.
    pub fn from_parts(parts: &[Vec<usize>], caps: Vec<u64>, totals: Option<Vec<u64>>) -> Result<Self> {
        let n = parts.iter().flatten().map(|&e| e + 1).max().unwrap_or(0);
        let mut part_of = vec![usize::MAX; n];
        for (j, part) in parts.iter().enumerate() {
            for &e in part {
                if part_of[e] != usize::MAX {
                    return Err(Error::Construction(format!("element {e} appears in two parts")));
                }
                part_of[e] = j;
            }
        }
        if let Some(e) = part_of.iter().position(|&j| j == usize::MAX) {
            return Err(Error::Construction(format!("element {e} belongs to no part")));
        }
        if parts.len() != caps.len() {
            return Err(Error::Construction(format!("{} caps given for {} parts", caps.len(), parts.len())));
        }
        Self::new(part_of, caps, totals)
    }

    fn part_total(&self, j: usize) -> Option<u64> {
        self.totals.as_ref().map(|t| t[j])
    }
}

impl Polymatroid for PartitionPolymatroid {
    fn dim(&self) -> usize {
        self.part_of.len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        if !nonneg(x) {
            return false;
        }
        let mut sums = vec![0.0; self.caps.len()];
        for (e, &v) in x.iter().enumerate() {
            let j = self.part_of[e];
            if v > self.caps[j] as f64 + MEMBERSHIP_TOL {
                return false;
            }
            sums[j] += v;
        }
        (0..self.caps.len()).all(|j| self.part_total(j).is_none_or(|t| sums[j] <= t as f64 + MEMBERSHIP_TOL))
    }

    fn rank(&self, set: ElementSet) -> Option<u64> {
        let mut counts = vec![0u64; self.caps.len()];
        for e in set.iter() {
            counts[self.part_of[e]] += 1;
        }
        Some(
            (0..self.caps.len())
                .map(|j| {
                    let r = counts[j] * self.caps[j];
                    self.part_total(j).map_or(r, |t| r.min(t))
                })
                .sum(),
        )
    }
}

/// Explicit rank table indexed by subset bitmask, for n ≤ 12.
#[derive(Clone, Debug, PartialEq)]
pub struct RankTablePolymatroid {
    n: usize,
    ranks: Vec<u64>,
}

impl RankTablePolymatroid {
    pub const MAX_N: usize = 12;

    /// Validates the rank axioms exhaustively.
    pub fn new(n: usize, ranks: Vec<u64>) -> Result<Self> {
        if n == 0 || n > Self::MAX_N {
            return Err(Error::Construction(format!("rank tables support 1 ≤ n ≤ 12, got {n}")));
        }
        if ranks.len() != 1 << n {
            return Err(Error::Construction(format!(
                "rank table for n = {n} needs {} entries, got {}",
                1usize << n,
                ranks.len()
            )));
        }
        let table = RankTablePolymatroid { n, ranks };
        check_rank_axioms(&PolymatroidOracle::new(table.clone())?)?;
        Ok(table)
    }
}

impl Polymatroid for RankTablePolymatroid {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, x: &[f64]) -> bool {
        if !nonneg(x) {
            return false;
        }
        let size = 1usize << self.n;
        let mut sums = vec![0.0f64; size];
        for m in 1..size {
            let low = m.trailing_zeros() as usize;
            sums[m] = sums[m & (m - 1)] + x[low];
            if sums[m] > self.ranks[m] as f64 + MEMBERSHIP_TOL {
                return false;
            }
        }
        true
    }

    fn rank(&self, set: ElementSet) -> Option<u64> {
        Some(self.ranks[set.0 as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_member(p: &dyn Polymatroid, x: &[f64]) -> bool {
        let n = p.dim();
        x.iter().all(|&v| v >= 0.0)
            && (0..1u64 << n).all(|m| {
                let s: f64 = ElementSet(m).iter().map(|e| x[e]).sum();
                s <= p.rank(ElementSet(m)).unwrap() as f64 + 1e-9
            })
    }

    #[test]
    fn uniform_zero_rank_is_origin_only() {
        let p = UniformPolymatroid::new(3, 1, 0);
        assert!(p.contains(&[0.0, 0.0, 0.0]));
        assert!(!p.contains(&[0.1, 0.0, 0.0]));
    }

    #[test]
    fn partition_example() {
        let p = PartitionPolymatroid::from_parts(&[vec![0, 1], vec![2]], vec![2, 1], None).unwrap();
        assert!(p.contains(&[1.0, 1.0, 1.0]));
        assert!(p.contains(&[2.0, 1.0, 0.0]));
        assert!(p.contains(&[2.0, 1.0, 1.0]));
        assert!(!p.contains(&[3.0, 0.0, 0.0]));
    }

    #[test]
    fn closed_forms_agree_with_rank_inequalities() {
        let fams: Vec<Box<dyn Polymatroid>> = vec![
            Box::new(UniformPolymatroid::new(3, 2, 4)),
            Box::new(PartitionPolymatroid::new(vec![0, 1, 0], vec![2, 3], Some(vec![3, 2])).unwrap()),
        ];
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0];
        for p in &fams {
            for &a in &grid {
                for &b in &grid {
                    for &c in &grid {
                        let x = [a, b, c];
                        assert_eq!(p.contains(&x), brute_member(p.as_ref(), &x), "{x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn rank_axioms_hold_up_to_eight_elements() {
        for n in 1..=8 {
            let u = PolymatroidOracle::new(UniformPolymatroid::new(n, 2, 5)).unwrap();
            check_rank_axioms(&u).unwrap();
            let part_of: Vec<usize> = (0..n).map(|e| e % 3).collect();
            let p = PartitionPolymatroid::new(part_of, vec![1, 2, 3], Some(vec![2, 3, 4])).unwrap();
            check_rank_axioms(&PolymatroidOracle::new(p).unwrap()).unwrap();
        }
    }

    #[test]
    fn rank_table_validation() {
        // Graphic-like rank on 2 elements: ρ = (0, 1, 1, 1).
        let t = RankTablePolymatroid::new(2, vec![0, 1, 1, 1]).unwrap();
        assert!(t.contains(&[0.5, 0.5]));
        assert!(!t.contains(&[1.0, 0.5]));
        // Supermodular table rejected.
        assert!(RankTablePolymatroid::new(2, vec![0, 1, 1, 3]).is_err());
        assert!(RankTablePolymatroid::new(2, vec![1, 1, 1, 1]).is_err());
        assert!(RankTablePolymatroid::new(2, vec![0, 1, 1]).is_err());
    }
}
