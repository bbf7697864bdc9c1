//! Exact optima by enumeration of small feasible regions.

use serde::Serialize;

use crate::cardinality::CardinalityConstraint;
use crate::error::{check_dim, Error, Result};
use crate::knapsack::KnapsackInstance;
use crate::lattice::{box_size, BoxIter, FractionalPoint, LatticePoint};
use crate::oracle::ValueOracle;
use crate::polymatroid::{k_max_in_polymatroid, PolymatroidOracle};

/// Default bound on the estimated number of feasible points.
pub const DEFAULT_POINT_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug)]
pub enum Constraint<'a> {
    Cardinality(&'a CardinalityConstraint),
    Polymatroid(&'a PolymatroidOracle),
    Knapsack(&'a KnapsackInstance),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactResult {
    pub opt_value: f64,
    pub argmax: LatticePoint,
    pub points_enumerated: u64,
}

/// Per-coordinate upper bounds of the feasible region.
fn bounds(f: &ValueOracle, c: Constraint<'_>) -> Result<Vec<u64>> {
    let n = f.dim();
    let b = match c {
        Constraint::Cardinality(cst) => {
            check_dim(n, cst.cap.dim())?;
            (0..n).map(|e| cst.cap[e].min(f.cap()[e]).min(cst.budget)).collect()
        }
        Constraint::Knapsack(inst) => {
            check_dim(n, inst.dim())?;
            (0..n)
                .map(|e| {
                    let by_weight = ((1.0 + crate::knapsack::BUDGET_TOL) / inst.weights()[e]).floor() as u64;
                    inst.cap()[e].min(f.cap()[e]).min(by_weight)
                })
                .collect()
        }
        Constraint::Polymatroid(p) => {
            check_dim(n, p.dim())?;
            let zero = FractionalPoint::zeros(n);
            (0..n).map(|e| k_max_in_polymatroid(p, &zero, e, f.cap()[e])).collect::<Result<_>>()?
        }
    };
    Ok(b)
}

/// Estimated number of feasible points: exact for cardinality constraints,
/// the bounding box otherwise. Saturates at u64::MAX.
pub fn estimate_region(f: &ValueOracle, c: Constraint<'_>) -> Result<u64> {
    let b = bounds(f, c)?;
    if let Constraint::Cardinality(cst) = c {
        let r = cst.budget.min(b.iter().sum()) as usize;
        if r <= 1_000_000 {
            // counts[s] = number of partial points with coordinate sum s.
            let mut counts = vec![0u128; r + 1];
            counts[0] = 1;
            for &cap in &b {
                let mut next = vec![0u128; r + 1];
                let mut window = 0u128;
                for s in 0..=r {
                    window += counts[s];
                    if s > cap as usize {
                        window -= counts[s - cap as usize - 1];
                    }
                    next[s] = window;
                }
                counts = next;
            }
            let total: u128 = counts.iter().sum();
            return Ok(total.min(u64::MAX as u128) as u64);
        }
    }
    Ok(box_size(&LatticePoint::from_vec(b)).unwrap_or(u64::MAX))
}

struct Search<'a> {
    f: &'a ValueOracle,
    c: Constraint<'a>,
    bounds: Vec<u64>,
    best: Option<(f64, LatticePoint)>,
    count: u64,
}

impl Search<'_> {
    /// Whether x (with all coordinates after the current one at zero) can
    /// still be extended to a feasible point.
    fn partial_ok(&self, x: &LatticePoint, sum: u64, load: f64) -> Result<bool> {
        Ok(match self.c {
            Constraint::Cardinality(cst) => sum <= cst.budget,
            Constraint::Knapsack(_) => KnapsackInstance::fits(load),
            Constraint::Polymatroid(p) => p.contains_point(x)?,
        })
    }

    fn leaf(&mut self, x: &LatticePoint) -> Result<()> {
        self.count += 1;
        let v = self.f.eval(x)?;
        if self.best.as_ref().is_none_or(|(b, _)| v > *b) {
            self.best = Some((v, x.clone()));
        }
        Ok(())
    }

    fn dfs(&mut self, depth: usize, x: &mut LatticePoint, sum: u64, load: f64) -> Result<()> {
        if depth == x.dim() {
            return self.leaf(x);
        }
        let w = match self.c {
            Constraint::Knapsack(inst) => inst.weights()[depth],
            _ => 0.0,
        };
        for v in 0..=self.bounds[depth] {
            x.set(depth, v);
            let (s, l) = (sum + v, load + v as f64 * w);
            if v > 0 && !self.partial_ok(x, s, l)? {
                break;
            }
            self.dfs(depth + 1, x, s, l)?;
        }
        x.set(depth, 0);
        Ok(())
    }

    fn result(self) -> ExactResult {
        let (opt_value, argmax) = self.best.expect("the origin is always feasible");
        ExactResult { opt_value, argmax, points_enumerated: self.count }
    }
}

fn check_limit(f: &ValueOracle, c: Constraint<'_>, limit: u64) -> Result<()> {
    let est = estimate_region(f, c)?;
    if est > limit {
        return Err(Error::Capacity(format!(
            "feasible region has an estimated {est} points, above the limit of {limit}"
        )));
    }
    Ok(())
}

fn check_cap(f: &ValueOracle, c: Constraint<'_>) -> Result<()> {
    let cap = match c {
        Constraint::Cardinality(cst) => &cst.cap,
        Constraint::Knapsack(inst) => inst.cap(),
        Constraint::Polymatroid(_) => return Ok(()),
    };
    check_dim(f.dim(), cap.dim())?;
    if !cap.le(f.cap()) {
        return Err(Error::Domain("constraint cap exceeds the oracle box".into()));
    }
    Ok(())
}

/// Exact maximum over the feasible region with the default point limit.
/// Ties go to the lexicographically smallest maximizer.
pub fn brute_force_opt(f: &ValueOracle, c: Constraint<'_>) -> Result<ExactResult> {
    brute_force_opt_with_limit(f, c, DEFAULT_POINT_LIMIT)
}

pub fn brute_force_opt_with_limit(f: &ValueOracle, c: Constraint<'_>, limit: u64) -> Result<ExactResult> {
    check_cap(f, c)?;
    check_limit(f, c, limit)?;
    let bounds = bounds(f, c)?;
    let mut s = Search { f, c, bounds, best: None, count: 0 };
    let mut x = LatticePoint::zeros(f.dim());
    s.dfs(0, &mut x, 0, 0.0)?;
    Ok(s.result())
}

/// Reference enumeration without pruning: scans the whole oracle box and
/// filters by full feasibility.
pub fn brute_force_unpruned(f: &ValueOracle, c: Constraint<'_>, limit: u64) -> Result<ExactResult> {
    check_cap(f, c)?;
    let size = box_size(f.cap()).unwrap_or(u64::MAX);
    if size > limit {
        return Err(Error::Capacity(format!("box has {size} points, above the limit of {limit}")));
    }
    let mut s = Search { f, c, bounds: Vec::new(), best: None, count: 0 };
    for x in BoxIter::new(f.cap()) {
        let feasible = match c {
            Constraint::Cardinality(cst) => cst.is_feasible(&x),
            Constraint::Knapsack(inst) => inst.is_feasible(&x),
            Constraint::Polymatroid(p) => p.contains_point(&x)?,
        };
        if feasible {
            s.leaf(&x)?;
        }
    }
    Ok(s.result())
}

/// approx ≥ bound·opt − 1e−9, and true whenever opt = 0.
pub fn certify_ratio(approx_value: f64, exact: &ExactResult, bound: f64) -> bool {
    exact.opt_value == 0.0 || approx_value >= bound * exact.opt_value - 1e-9
}
