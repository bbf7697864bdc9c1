//! Randomized and exhaustive checks of submodularity classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{box_index, box_size, join_meet, BoxIter, LatticePoint};
use crate::oracle::ValueOracle;

/// Absolute slack allowed before an inequality counts as violated.
pub const PROPERTY_TOL: f64 = 1e-9;

/// Exhaustive checks refuse boxes larger than this.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

/// At most this many witnesses are stored; `violation_count` keeps the total.
pub const MAX_STORED_WITNESSES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    DrSubmodular,
    LatticeSubmodular,
    Monotone,
    WeakDr,
}

impl PropertyKind {
    pub fn name(self) -> &'static str {
        match self {
            PropertyKind::DrSubmodular => "dr_submodular",
            PropertyKind::LatticeSubmodular => "lattice_submodular",
            PropertyKind::Monotone => "monotone",
            PropertyKind::WeakDr => "weak_dr",
        }
    }
}

/// A violated inequality `lhs >= rhs`.
///
/// For the DR and weak-DR checks `lhs` is the marginal at the smaller point
/// `x` and `rhs` the marginal at `y`. For lattice submodularity `lhs` is
/// f(x)+f(y) and `rhs` is f(x∨y)+f(x∧y). For monotonicity `lhs` is f(y) and
/// `rhs` is f(x).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: LatticePoint,
    pub y: LatticePoint,
    pub element: Option<usize>,
    pub k: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property_name: String,
    pub trials: u64,
    pub violation_count: u64,
    pub violations: Vec<Witness>,
    pub passed: bool,
}

struct Collector {
    count: u64,
    stored: Vec<Witness>,
}

impl Collector {
    fn new() -> Self {
        Collector { count: 0, stored: Vec::new() }
    }

    fn check(&mut self, w: Witness) {
        if w.lhs < w.rhs - PROPERTY_TOL {
            self.count += 1;
            if self.stored.len() < MAX_STORED_WITNESSES {
                self.stored.push(w);
            }
        }
    }

    fn finish(self, kind: PropertyKind, trials: u64) -> PropertyReport {
        PropertyReport {
            property_name: kind.name().to_string(),
            trials,
            passed: self.count == 0,
            violation_count: self.count,
            violations: self.stored,
        }
    }
}

fn uniform_below(rng: &mut ChaCha8Rng, upper: &[u64]) -> LatticePoint {
    LatticePoint::from_vec(upper.iter().map(|&u| rng.gen_range(0..=u)).collect())
}

/// Samples `trials` witness tuples from a seeded generator and records every
/// violated inequality.
pub fn check_property(f: &ValueOracle, kind: PropertyKind, trials: u64, seed: u64) -> Result<PropertyReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = f.cap().as_slice().to_vec();
    let n = cap.len();
    let movable: Vec<usize> = (0..n).filter(|&e| cap[e] > 0).collect();
    let mut out = Collector::new();

    for _ in 0..trials {
        match kind {
            PropertyKind::DrSubmodular | PropertyKind::WeakDr => {
                if movable.is_empty() {
                    continue;
                }
                let e = movable[rng.gen_range(0..movable.len())];
                let (k, upper) = if kind == PropertyKind::DrSubmodular {
                    let mut upper = cap.clone();
                    upper[e] -= 1;
                    (1, upper)
                } else {
                    (rng.gen_range(0..=cap[e]), cap.clone())
                };
                let y = uniform_below(&mut rng, &upper);
                let x = uniform_below(&mut rng, y.as_slice());
                let (lhs, rhs) = if kind == PropertyKind::DrSubmodular {
                    (f.eval(&x.plus_unit(e, 1))? - f.eval(&x)?, f.eval(&y.plus_unit(e, 1))? - f.eval(&y)?)
                } else {
                    let kx = LatticePoint::unit(n, e, k);
                    let (xj, _) = join_meet(&x, &kx)?;
                    let (yj, _) = join_meet(&y, &kx)?;
                    (f.eval(&xj)? - f.eval(&x)?, f.eval(&yj)? - f.eval(&y)?)
                };
                out.check(Witness { x, y, element: Some(e), k: Some(k), lhs, rhs });
            }
            PropertyKind::LatticeSubmodular => {
                let x = uniform_below(&mut rng, &cap);
                let y = uniform_below(&mut rng, &cap);
                let (j, m) = join_meet(&x, &y)?;
                let lhs = f.eval(&x)? + f.eval(&y)?;
                let rhs = f.eval(&j)? + f.eval(&m)?;
                out.check(Witness { x, y, element: None, k: None, lhs, rhs });
            }
            PropertyKind::Monotone => {
                let y = uniform_below(&mut rng, &cap);
                let x = uniform_below(&mut rng, y.as_slice());
                let lhs = f.eval(&y)?;
                let rhs = f.eval(&x)?;
                out.check(Witness { x, y, element: None, k: None, lhs, rhs });
            }
        }
    }
    Ok(out.finish(kind, trials))
}

/// Evaluates f on the whole box, in [`BoxIter`] order.
pub fn tabulate(f: &ValueOracle) -> Result<Vec<f64>> {
    let size = box_size(f.cap())
        .filter(|&s| s <= EXHAUSTIVE_LIMIT)
        .ok_or_else(|| Error::Capacity(format!("box too large for exhaustive checks (limit {EXHAUSTIVE_LIMIT})")))?;
    let mut table = Vec::with_capacity(size as usize);
    for x in BoxIter::new(f.cap()) {
        table.push(f.eval(&x)?);
    }
    Ok(table)
}

/// Exhaustive check on the whole box.
///
/// Each property is checked through local inequalities between neighbouring
/// points, which chain together to the full definition. `trials` in the report
/// counts the local inequalities examined.
pub fn check_property_exhaustive(f: &ValueOracle, kind: PropertyKind) -> Result<PropertyReport> {
    let table = tabulate(f)?;
    Ok(check_table(f.cap(), &table, kind))
}

/// Same as [`check_property_exhaustive`] on an explicit table in
/// [`BoxIter`] order.
pub fn check_table(cap: &LatticePoint, table: &[f64], kind: PropertyKind) -> PropertyReport {
    let c = cap.as_slice();
    let n = c.len();
    let at = |x: &LatticePoint| table[box_index(c, x.as_slice())];
    let mut out = Collector::new();
    let mut trials = 0u64;

    for x in BoxIter::new(cap) {
        match kind {
            PropertyKind::Monotone => {
                for i in (0..n).filter(|&i| x[i] < c[i]) {
                    let y = x.plus_unit(i, 1);
                    trials += 1;
                    out.check(Witness { lhs: at(&y), rhs: at(&x), x: x.clone(), y, element: None, k: None });
                }
            }
            PropertyKind::DrSubmodular => {
                // f(χ_i | x) ≥ f(χ_i | x + χ_j) for every i, j.
                for i in (0..n).filter(|&i| x[i] < c[i]) {
                    for j in 0..n {
                        let lim = if i == j { c[j] - 1 } else { c[j] };
                        if x[j] >= lim {
                            continue;
                        }
                        let y = x.plus_unit(j, 1);
                        let lhs = at(&x.plus_unit(i, 1)) - at(&x);
                        let rhs = at(&y.plus_unit(i, 1)) - at(&y);
                        trials += 1;
                        out.check(Witness { x: x.clone(), y, element: Some(i), k: Some(1), lhs, rhs });
                    }
                }
            }
            PropertyKind::LatticeSubmodular => {
                // f(χ_i | x) ≥ f(χ_i | x + χ_j) for i ≠ j.
                for i in (0..n).filter(|&i| x[i] < c[i]) {
                    for j in (0..n).filter(|&j| j != i && x[j] < c[j]) {
                        let y = x.plus_unit(j, 1);
                        let lhs = at(&x.plus_unit(i, 1)) - at(&x);
                        let rhs = at(&y.plus_unit(i, 1)) - at(&y);
                        trials += 1;
                        out.check(Witness { x: x.clone(), y, element: Some(i), k: None, lhs, rhs });
                    }
                }
            }
            PropertyKind::WeakDr => {
                for i in 0..n {
                    for k in 1..=c[i] {
                        let lift = |z: &LatticePoint| {
                            let mut z = z.clone();
                            z.set(i, z[i].max(k));
                            z
                        };
                        for j in (0..n).filter(|&j| x[j] < c[j]) {
                            let y = x.plus_unit(j, 1);
                            let lhs = at(&lift(&x)) - at(&x);
                            let rhs = at(&lift(&y)) - at(&y);
                            trials += 1;
                            out.check(Witness { x: x.clone(), y, element: Some(i), k: Some(k), lhs, rhs });
                        }
                    }
                }
            }
        }
    }
    out.finish(kind, trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle<F: Fn(&[u64]) -> f64 + Send + Sync + 'static>(f: F, cap: &[u64]) -> ValueOracle {
        ValueOracle::new(f, LatticePoint::from_vec(cap.to_vec())).unwrap()
    }

    fn sqrt_sum(x: &[u64]) -> f64 {
        x.iter().map(|&v| (v as f64).sqrt()).sum()
    }

    /// Pairwise definitions over the whole box, independent of the local
    /// reductions used by `check_table`.
    fn full_scan(f: &ValueOracle, kind: PropertyKind) -> bool {
        let pts: Vec<LatticePoint> = BoxIter::new(f.cap()).collect();
        let v = |x: &LatticePoint| f.eval(x).unwrap();
        let c = f.cap().clone();
        let n = c.dim();
        for x in &pts {
            for y in &pts {
                match kind {
                    PropertyKind::LatticeSubmodular => {
                        let (j, m) = join_meet(x, y).unwrap();
                        if v(x) + v(y) < v(&j) + v(&m) - PROPERTY_TOL {
                            return false;
                        }
                    }
                    PropertyKind::Monotone => {
                        if x.le(y) && v(x) > v(y) + PROPERTY_TOL {
                            return false;
                        }
                    }
                    PropertyKind::DrSubmodular => {
                        if !x.le(y) {
                            continue;
                        }
                        for e in (0..n).filter(|&e| y[e] < c[e]) {
                            let a = v(&x.plus_unit(e, 1)) - v(x);
                            let b = v(&y.plus_unit(e, 1)) - v(y);
                            if a < b - PROPERTY_TOL {
                                return false;
                            }
                        }
                    }
                    PropertyKind::WeakDr => {
                        if !x.le(y) {
                            continue;
                        }
                        for e in 0..n {
                            for k in 0..=c[e] {
                                let kx = LatticePoint::unit(n, e, k);
                                let a = v(&join_meet(x, &kx).unwrap().0) - v(x);
                                let b = v(&join_meet(y, &kx).unwrap().0) - v(y);
                                if a < b - PROPERTY_TOL {
                                    return false;
                                }
                            }
                        }
                    }
                }
            }
        }
        true
    }

    const KINDS: [PropertyKind; 4] =
        [PropertyKind::DrSubmodular, PropertyKind::LatticeSubmodular, PropertyKind::Monotone, PropertyKind::WeakDr];

    #[test]
    fn separable_sqrt_is_dr() {
        let f = oracle(sqrt_sum, &[3, 3]);
        let r = check_property_exhaustive(&f, PropertyKind::DrSubmodular).unwrap();
        assert!(r.passed);
        assert!(check_property(&f, PropertyKind::DrSubmodular, 500, 7).unwrap().passed);
    }

    #[test]
    fn product_is_not_dr() {
        let f = oracle(|x: &[u64]| (x[0] * x[1]) as f64, &[2, 2]);
        let r = check_property_exhaustive(&f, PropertyKind::DrSubmodular).unwrap();
        assert!(!r.passed);
        assert!(!r.violations.is_empty());
        let w = &r.violations[0];
        assert!(w.lhs < w.rhs);
        assert!(!check_property(&f, PropertyKind::DrSubmodular, 200, 1).unwrap().passed);
    }

    #[test]
    fn zero_trials_rejected() {
        let f = oracle(|_: &[u64]| 0.0, &[2]);
        assert!(check_property(&f, PropertyKind::Monotone, 0, 0).is_err());
        for kind in KINDS {
            assert!(check_property(&f, kind, 1, 0).unwrap().passed);
        }
    }

    #[test]
    fn seeded_reports_are_reproducible() {
        let f = oracle(|x: &[u64]| (x[0] * x[1]) as f64 - x[2] as f64 * 0.1, &[3, 3, 3]);
        for kind in KINDS {
            let a = check_property(&f, kind, 300, 42).unwrap();
            let b = check_property(&f, kind, 300, 42).unwrap();
            assert_eq!(a, b);
        }
    }

    type BoxedFn = Box<dyn Fn(&[u64]) -> f64 + Send + Sync>;

    #[test]
    fn local_checks_agree_with_pairwise_scan() {
        let cases: Vec<(BoxedFn, Vec<u64>)> = vec![
            (Box::new(sqrt_sum), vec![2, 3]),
            (Box::new(|x: &[u64]| (x[0] * x[1]) as f64), vec![2, 2]),
            (Box::new(|x: &[u64]| ((x[0] + x[1]).min(2)) as f64), vec![2, 2]),
            (Box::new(|x: &[u64]| (x[0] * x[0]) as f64 + (x[1] as f64).sqrt()), vec![3, 2]),
            (Box::new(|x: &[u64]| x[0] as f64 - x[1] as f64 * 0.5), vec![2, 2]),
            (
                Box::new(|x: &[u64]| {
                    let s = (x[0] + x[1] + x[2]) as f64;
                    (x[0] * x[0]) as f64 * 0.1 + 3.0 * (1.0 - (-0.5 * s).exp())
                }),
                vec![2, 2, 1],
            ),
        ];
        for (func, cap) in cases {
            let f = ValueOracle::new(func, LatticePoint::from_vec(cap)).unwrap();
            for kind in KINDS {
                let local = check_property_exhaustive(&f, kind).unwrap().passed;
                assert_eq!(local, full_scan(&f, kind), "{kind:?}");
            }
        }
    }

    #[test]
    fn dr_implies_lattice_on_sqrt() {
        let f = oracle(|x: &[u64]| (x[0] as f64 + 2.0 * x[1] as f64).sqrt(), &[3, 3]);
        assert!(check_property_exhaustive(&f, PropertyKind::DrSubmodular).unwrap().passed);
        assert!(check_property_exhaustive(&f, PropertyKind::LatticeSubmodular).unwrap().passed);
    }

    #[test]
    fn one_dimensional_tables_are_lattice_submodular() {
        let f = oracle(|x: &[u64]| (x[0] * x[0]) as f64, &[5]);
        assert!(check_property_exhaustive(&f, PropertyKind::LatticeSubmodular).unwrap().passed);
        assert!(!check_property_exhaustive(&f, PropertyKind::DrSubmodular).unwrap().passed);
    }
}
