//! Rounding a point of P to a lattice point of P inside its unit hypercube.
//!
//! With the coordinates outside the fractional support held at ⌊x⌋, the set
//! {z ∈ [0,1]^S : ⌊x⌋ + z ∈ P} is a matroid polytope on the support S. Its
//! rank ρ′(X) is the largest |Z|, Z ⊆ X, with ⌊x⌋ + χ_Z ∈ P. Randomized
//! pipage rounding moves the fractional part along χ_i − χ_j directions of
//! that polytope until it is integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{FractionalPoint, LatticePoint};

use super::{ElementSet, PolymatroidOracle};

/// Subset enumeration is limited to this many elements.
pub const MAX_ROUNDING_SUPPORT: usize = 20;

const SNAP: f64 = 1e-9;
const TIGHT: f64 = 1e-9;

fn plus_set(base: &LatticePoint, set: ElementSet) -> LatticePoint {
    let mut y = base.clone();
    for e in set.iter() {
        y.add_to(e, 1);
    }
    y
}

/// ρ′(X) by scanning every Z ⊆ X.
pub fn translated_rank(p: &PolymatroidOracle, base: &LatticePoint, set: ElementSet) -> Result<u64> {
    check_dim(p.dim(), base.dim())?;
    let elems: Vec<usize> = set.iter().collect();
    if elems.len() > MAX_ROUNDING_SUPPORT {
        return Err(Error::Capacity(format!(
            "translated rank enumerates subsets of at most {MAX_ROUNDING_SUPPORT} elements, got {}",
            elems.len()
        )));
    }
    if !p.contains_point(base)? {
        return Err(Error::Precondition("base point is not in the polymatroid".into()));
    }
    let mut best = 0;
    for local in 0..1u64 << elems.len() {
        let z =
            ElementSet(elems.iter().enumerate().filter(|(b, _)| local >> b & 1 == 1).fold(0, |m, (_, &e)| m | 1 << e));
        if z.len() as u64 > best && p.contains_point(&plus_set(base, z))? {
            best = z.len() as u64;
        }
    }
    Ok(best)
}

/// Base point, fractional part and the translated rank over the fractional
/// support.
#[derive(Clone, Debug)]
pub struct RoundingState {
    pub base: LatticePoint,
    /// Fractional parts, zero outside the support.
    pub frac: FractionalPoint,
    support: Vec<usize>,
    /// ρ′ indexed by masks over `support`.
    rank: Vec<u64>,
}

impl RoundingState {
    pub fn new(x: &FractionalPoint, p: &PolymatroidOracle) -> Result<Self> {
        check_dim(p.dim(), x.dim())?;
        if !p.contains_fractional(x)? {
            return Err(Error::Precondition("x is not in the polymatroid".into()));
        }
        let base = x.floor();
        let support = x.fractional_support();
        let k = support.len();
        if k > MAX_ROUNDING_SUPPORT {
            return Err(Error::Capacity(format!(
                "rounding supports at most {MAX_ROUNDING_SUPPORT} fractional coordinates, got {k}"
            )));
        }
        let size = 1usize << k;
        // Greedy over A in increasing bit order extends the greedy set of A
        // minus its top bit, so one membership test per mask suffices.
        let mut chosen = vec![0usize; size];
        let mut rank = vec![0u64; size];
        for m in 1..size {
            let top = usize::BITS - 1 - m.leading_zeros();
            let prev = chosen[m ^ (1 << top)];
            let with_top = prev | 1 << top;
            let global = ElementSet(
                support.iter().enumerate().filter(|(b, _)| with_top >> b & 1 == 1).fold(0, |s, (_, &e)| s | 1 << e),
            );
            chosen[m] = if p.contains_point(&plus_set(&base, global))? { with_top } else { prev };
            rank[m] = chosen[m].count_ones() as u64;
        }
        let frac = FractionalPoint::new((0..x.dim()).map(|e| x.get(e) - x.get(e).floor()).collect())?;
        Ok(RoundingState { base, frac, support, rank })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// ρ′ of a subset of the fractional support.
    pub fn translated_rank(&self, set: ElementSet) -> Result<u64> {
        let mut local = 0usize;
        for e in set.iter() {
            match self.support.iter().position(|&s| s == e) {
                Some(b) => local |= 1 << b,
                None => return Err(Error::Domain(format!("element {e} is not in the fractional support"))),
            }
        }
        Ok(self.rank[local])
    }

    /// Randomized pipage rounding of the fractional part.
    pub fn round(&self, seed: u64) -> Result<LatticePoint> {
        let k = self.support.len();
        let mut z: Vec<f64> = self.support.iter().map(|&e| self.frac.get(e)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = 1usize << k;
        let mut sums = vec![0.0f64; size];
        let limit = 4 * k * k + 16;
        let mut iterations = 0;
        loop {
            for v in z.iter_mut() {
                if *v < SNAP {
                    *v = 0.0;
                } else if *v > 1.0 - SNAP {
                    *v = 1.0;
                }
            }
            let fractional: u64 = (0..k).filter(|&b| z[b] > 0.0 && z[b] < 1.0).fold(0, |m, b| m | 1 << b);
            if fractional == 0 {
                break;
            }
            iterations += 1;
            if iterations > limit {
                return Err(Error::Precondition("pipage rounding did not converge".into()));
            }
            for m in 1..size {
                let low = m.trailing_zeros() as usize;
                sums[m] = sums[m & (m - 1)] + z[low];
            }
            let slack = |m: usize| (self.rank[m] as f64 - sums[m]).max(0.0);
            let tight = (1..size)
                .filter(|&m| m as u64 & fractional != 0 && slack(m) <= TIGHT)
                .min_by_key(|&m| (m.count_ones(), m));

            let moving: Vec<usize> = match tight {
                Some(t) => (0..k).filter(|&b| (t as u64 & fractional) >> b & 1 == 1).take(2).collect(),
                None => vec![fractional.trailing_zeros() as usize],
            };
            if let [i, j] = moving[..] {
                // z + t(χ_i − χ_j) for t ∈ [−down, up].
                let mut up = (1.0 - z[i]).min(z[j]);
                let mut down = z[i].min(1.0 - z[j]);
                for m in 1..size {
                    let (has_i, has_j) = (m >> i & 1 == 1, m >> j & 1 == 1);
                    if has_i && !has_j {
                        up = up.min(slack(m));
                    } else if has_j && !has_i {
                        down = down.min(slack(m));
                    }
                }
                if up + down <= 0.0 {
                    return Err(Error::Precondition("pipage rounding is stuck".into()));
                }
                if rng.gen::<f64>() < down / (up + down) {
                    z[i] += up;
                    z[j] -= up;
                } else {
                    z[i] -= down;
                    z[j] += down;
                }
            } else {
                let i = moving[0];
                let mut up = 1.0 - z[i];
                for m in (1..size).filter(|&m| m >> i & 1 == 1) {
                    up = up.min(slack(m));
                }
                let down = z[i];
                if rng.gen::<f64>() < down / (up + down) {
                    z[i] += up;
                } else {
                    z[i] = 0.0;
                }
            }
        }
        let mut out = self.base.clone();
        for (b, &e) in self.support.iter().enumerate() {
            if z[b] == 1.0 {
                out.add_to(e, 1);
            }
        }
        Ok(out)
    }
}

/// Rounds x ∈ P to a lattice point of P in the hypercube of x, preserving
/// the marginals of the fractional part in expectation.
pub fn round_polymatroid(x: &FractionalPoint, p: &PolymatroidOracle, seed: u64) -> Result<LatticePoint> {
    let state = RoundingState::new(x, p)?;
    let out = state.round(seed)?;
    if !p.contains_point(&out)? {
        return Err(Error::Precondition("rounded point left the polymatroid".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymatroid::{PartitionPolymatroid, UniformPolymatroid};

    fn fp(v: &[f64]) -> FractionalPoint {
        FractionalPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn translated_rank_examples() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(3, 3, 3)).unwrap();
        let base = LatticePoint::from_vec(vec![1, 1, 0]);
        assert_eq!(translated_rank(&p, &base, ElementSet::empty()).unwrap(), 0);
        let q = PolymatroidOracle::new(UniformPolymatroid::new(3, 1, 3)).unwrap();
        assert_eq!(translated_rank(&q, &base, ElementSet::full(3)).unwrap(), 1);
        let zero = LatticePoint::zeros(3);
        for m in 0..8u64 {
            let s = ElementSet(m);
            let expect = q.rank(s).unwrap().min(s.len() as u64);
            assert_eq!(translated_rank(&q, &zero, s).unwrap(), expect);
        }
        assert_eq!(translated_rank(&p, &zero, ElementSet::full(3)).unwrap(), 3);
    }

    #[test]
    fn translated_rank_is_a_matroid_rank() {
        let p =
            PolymatroidOracle::new(PartitionPolymatroid::new(vec![0, 0, 1, 1], vec![2, 3], Some(vec![3, 4])).unwrap())
                .unwrap();
        let base = LatticePoint::from_vec(vec![1, 1, 2, 1]);
        let r: Vec<u64> = (0..16u64).map(|m| translated_rank(&p, &base, ElementSet(m)).unwrap()).collect();
        assert_eq!(r[0], 0);
        for m in 0..16usize {
            for i in (0..4).filter(|&i| m >> i & 1 == 0) {
                let d = r[m | 1 << i] - r[m];
                assert!(d <= 1);
                for j in (0..4).filter(|&j| j != i && m >> j & 1 == 0) {
                    assert!(r[m | 1 << i] + r[m | 1 << j] >= r[m | 1 << i | 1 << j] + r[m]);
                }
            }
        }
    }

    #[test]
    fn state_rank_matches_direct() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(3, 2, 4)).unwrap();
        let x = fp(&[1.5, 0.25, 1.75]);
        let st = RoundingState::new(&x, &p).unwrap();
        for m in 0..8u64 {
            let s = ElementSet(m);
            assert_eq!(st.translated_rank(s).unwrap(), translated_rank(&p, &st.base, s).unwrap());
        }
    }

    #[test]
    fn constraints_through_integral_coordinates() {
        // Σ x ≤ 3 is tight at x, and x_2 = 1 is integral.
        let p = PolymatroidOracle::new(UniformPolymatroid::new(3, 2, 3)).unwrap();
        let x = fp(&[1.25, 0.75, 1.0]);
        let st = RoundingState::new(&x, &p).unwrap();
        assert_eq!(st.translated_rank(ElementSet::from_indices(&[0, 1])).unwrap(), 1);
        for s in 0..2000u64 {
            let y = round_polymatroid(&x, &p, s).unwrap();
            assert_eq!(y.total(), 3);
            assert_eq!(y[2], 1);
        }
    }

    #[test]
    fn state_rank_matches_scan_on_random_points() {
        let p = PolymatroidOracle::new(
            PartitionPolymatroid::new(vec![0, 0, 1, 1, 0], vec![2, 3], Some(vec![4, 4])).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 200 {
            let x = fp(&(0..5).map(|_| rng.gen_range(0..12) as f64 / 4.0).collect::<Vec<_>>());
            if !p.contains_fractional(&x).unwrap() {
                continue;
            }
            checked += 1;
            let st = RoundingState::new(&x, &p).unwrap();
            let k = st.support().len();
            for local in 0..1u64 << k {
                let set = ElementSet(
                    st.support()
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| local >> b & 1 == 1)
                        .fold(0, |m, (_, &e)| m | 1 << e),
                );
                assert_eq!(st.translated_rank(set).unwrap(), translated_rank(&p, &st.base, set).unwrap());
            }
            let y = round_polymatroid(&x, &p, checked).unwrap();
            assert!(p.contains_point(&y).unwrap());
        }
    }

    #[test]
    fn integral_point_unchanged() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(2, 2, 3)).unwrap();
        let x = fp(&[2.0, 1.0]);
        assert_eq!(round_polymatroid(&x, &p, 3).unwrap(), LatticePoint::from_vec(vec![2, 1]));
    }

    #[test]
    fn single_coordinate_marginal() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(1, 2, 2)).unwrap();
        let x = fp(&[1.5]);
        let ups = (0..10_000u64).filter(|&s| round_polymatroid(&x, &p, s).unwrap()[0] == 2).count();
        let frac = ups as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");
    }

    #[test]
    fn tight_budget_keeps_total() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(3, 1, 1)).unwrap();
        let x = fp(&[0.5, 0.25, 0.25]);
        let mut counts = [0usize; 3];
        for s in 0..4000u64 {
            let y = round_polymatroid(&x, &p, s).unwrap();
            assert_eq!(y.total(), 1);
            counts[y.as_slice().iter().position(|&v| v == 1).unwrap()] += 1;
        }
        assert!((counts[0] as f64 / 4000.0 - 0.5).abs() < 0.04);
    }

    #[test]
    fn outside_point_rejected() {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(2, 1, 1)).unwrap();
        assert!(matches!(round_polymatroid(&fp(&[0.75, 0.5]), &p, 0), Err(Error::Precondition(_))));
    }
}
