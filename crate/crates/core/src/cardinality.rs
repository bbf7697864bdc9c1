//! Threshold greedy under a cardinality constraint 0 ≤ x ≤ c, x(E) ≤ r.

use std::collections::HashMap;

use crate::error::{check_dim, Error, Result};
use crate::lattice::LatticePoint;
use crate::oracle::ValueOracle;
use crate::search::{largest_true, smallest_true, thresholds};
use crate::solver::{GreedyTrace, SolverConfig, SolverOutcome};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CardinalityConstraint {
    pub cap: LatticePoint,
    pub budget: u64,
}

impl CardinalityConstraint {
    pub fn new(cap: LatticePoint, budget: u64) -> Self {
        CardinalityConstraint { cap, budget }
    }

    pub fn is_feasible(&self, x: &LatticePoint) -> bool {
        x.le(&self.cap) && x.total() <= self.budget
    }

    fn validate(&self, f: &ValueOracle) -> Result<()> {
        check_dim(f.dim(), self.cap.dim())?;
        if !self.cap.le(f.cap()) {
            return Err(Error::Domain("constraint cap exceeds the oracle box".into()));
        }
        Ok(())
    }
}

/// Largest k ≤ k_max with f(kχ_e | y) ≥ kθ, given f(y) = `fy`. Returns k and
/// f(y + kχ_e).
pub(crate) fn max_step_from(
    f: &ValueOracle,
    y: &LatticePoint,
    fy: f64,
    e: usize,
    k_max: u64,
    theta: f64,
) -> Result<(u64, f64)> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    if k_max == 0 {
        return Ok((0, fy));
    }
    let mut z = y.clone();
    let mut seen: HashMap<u64, f64> = HashMap::new();
    let k = largest_true(0, k_max, |k| {
        z.set(e, y[e] + k);
        let v = f.eval(&z)?;
        seen.insert(k, v);
        Ok(v - fy >= k as f64 * theta)
    })?;
    let value = if k == 0 { fy } else { seen[&k] };
    Ok((k, value))
}

/// Maximum k ∈ [0, k_max] with f(kχ_e | y) ≥ kθ, by binary search.
///
/// The predicate holds on a prefix when k ↦ f(kχ_e | y) is concave. For other
/// oracles the search still terminates and the returned k satisfies the
/// predicate, but it need not be the largest one.
pub fn max_step_dr(f: &ValueOracle, y: &LatticePoint, e: usize, k_max: u64, theta: f64) -> Result<u64> {
    check_dim(f.dim(), y.dim())?;
    if e >= y.dim() {
        return Err(Error::Domain(format!("element {e} out of range")));
    }
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    if k_max == 0 {
        return Ok(0);
    }
    if y[e] + k_max > f.cap()[e] {
        return Err(Error::Domain(format!("y + k_max·χ_{e} leaves the oracle box")));
    }
    let fy = f.eval(y)?;
    Ok(max_step_from(f, y, fy, e, k_max, theta)?.0)
}

fn room(cst: &CardinalityConstraint, y: &LatticePoint, e: usize) -> u64 {
    (cst.cap[e] - y[e]).min(cst.budget - y.total())
}

/// Decreasing-threshold greedy for monotone DR-submodular f.
pub fn maximize_dr_cardinality(
    f: &ValueOracle,
    cst: &CardinalityConstraint,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    cst.validate(f)?;
    let start_calls = f.calls();
    let eps = cfg.epsilon();
    let n = f.dim();
    let mut y = LatticePoint::zeros(n);
    let mut fy = 0.0;
    let mut trace = GreedyTrace::default();

    if cst.budget > 0 {
        let mut d = 0.0f64;
        for e in (0..n).filter(|&e| cst.cap[e] > 0) {
            d = d.max(f.eval(&LatticePoint::unit(n, e, 1))?);
        }
        let stop = eps / cst.budget as f64 * d;
        'rounds: for theta in thresholds(d, stop, eps) {
            for e in 0..n {
                let k_max = room(cst, &y, e);
                if k_max == 0 {
                    continue;
                }
                let (k, v) = max_step_from(f, &y, fy, e, k_max, theta)?;
                if k > 0 {
                    y.add_to(e, k);
                    trace.accept(theta, e, k, v - fy);
                    fy = v;
                    if y.total() == cst.budget {
                        break 'rounds;
                    }
                }
            }
        }
    }
    Ok(SolverOutcome { solution: y, value: fy, trace, epsilon: eps, oracle_calls: f.calls() - start_calls })
}

/// Geometric level search along one coordinate.
///
/// `g(k)` is the gain of k copies (g(0) = 0, g non-decreasing). Returns `None`
/// for FAIL, otherwise a k with g(k) ≥ (1-eps)·k·theta.
pub fn binary_search_lattice<G>(mut g: G, theta: f64, k_max: u64, eps: f64) -> Result<Option<u64>>
where
    G: FnMut(u64) -> Result<f64>,
{
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if k_max == 0 {
        return Ok(None);
    }
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut gm = |k: u64| -> Result<f64> {
        if let Some(&v) = memo.get(&k) {
            return Ok(v);
        }
        let v = g(k)?;
        memo.insert(k, v);
        Ok(v)
    };
    let top = gm(k_max)?;
    if !(top > 0.0) {
        return Ok(None);
    }
    let k_min = smallest_true(1, k_max, |k| Ok(gm(k)? > 0.0))?;
    let floor = (1.0 - eps) * gm(k_min)?;
    let ratio = 1.0 - eps;
    let mut j = 0i32;
    loop {
        let h = top * ratio.powi(j);
        if h < floor {
            return Ok(None);
        }
        let k = smallest_true(k_min, k_max, |k| Ok(gm(k)? >= h))?;
        if gm(k)? >= ratio * k as f64 * theta {
            return Ok(Some(k));
        }
        j += 1;
    }
}

/// Decreasing-threshold greedy for monotone lattice-submodular f, driven by
/// [`binary_search_lattice`].
pub fn maximize_lattice_cardinality(
    f: &ValueOracle,
    cst: &CardinalityConstraint,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    cst.validate(f)?;
    let start_calls = f.calls();
    let eps = cfg.epsilon();
    let n = f.dim();
    let mut y = LatticePoint::zeros(n);
    let mut fy = 0.0;
    let mut trace = GreedyTrace::default();

    if cst.budget > 0 {
        let mut d_max = 0.0f64;
        for e in (0..n).filter(|&e| cst.cap[e] > 0) {
            d_max = d_max.max(f.eval(&LatticePoint::unit(n, e, cst.cap[e]))?);
        }
        let stop = eps / cst.budget as f64 * d_max;
        'rounds: for theta in thresholds(d_max, stop, eps) {
            for e in 0..n {
                let k_max = room(cst, &y, e);
                if k_max == 0 {
                    continue;
                }
                let mut values: HashMap<u64, f64> = HashMap::new();
                let mut z = y.clone();
                let found = binary_search_lattice(
                    |k| {
                        z.set(e, y[e] + k);
                        let v = f.eval(&z)?;
                        values.insert(k, v);
                        Ok(v - fy)
                    },
                    theta,
                    k_max,
                    eps,
                )?;
                if let Some(k) = found {
                    let v = values[&k];
                    y.add_to(e, k);
                    trace.accept(theta, e, k, v - fy);
                    fy = v;
                    if y.total() == cst.budget {
                        break 'rounds;
                    }
                }
            }
        }
    }
    Ok(SolverOutcome { solution: y, value: fy, trace, epsilon: eps, oracle_calls: f.calls() - start_calls })
}
