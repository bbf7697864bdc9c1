//! Threshold greedy with partial enumeration under a knapsack constraint
//! wᵀx ≤ 1, 0 ≤ x ≤ c.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::cardinality::max_step_from;
use crate::error::{check_dim, Error, Result};
use crate::lattice::LatticePoint;
use crate::oracle::ValueOracle;
use crate::search::{smallest_true, thresholds};
use crate::solver::{GreedyTrace, SolverConfig, SolverOutcome};

/// Slack on the budget test wᵀx ≤ 1.
pub const BUDGET_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackInstance {
    weights: Vec<f64>,
    cap: LatticePoint,
}

impl KnapsackInstance {
    /// Weights must lie in (0, 1].
    pub fn new(weights: Vec<f64>, cap: LatticePoint) -> Result<Self> {
        check_dim(cap.dim(), weights.len())?;
        if weights.is_empty() {
            return Err(Error::Domain("knapsack needs at least one element".into()));
        }
        for (e, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0 && w <= 1.0) {
                return Err(Error::Domain(format!("weight of element {e} must lie in (0, 1], got {w}")));
            }
        }
        Ok(KnapsackInstance { weights, cap })
    }

    /// Scales raw weights by the budget: w = w′/B.
    pub fn from_budget(raw: &[f64], budget: f64, cap: LatticePoint) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::Domain(format!("budget must be positive, got {budget}")));
        }
        for (e, &w) in raw.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!("weight of element {e} must be positive, got {w}")));
            }
        }
        Self::new(raw.iter().map(|w| w / budget).collect(), cap)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cap(&self) -> &LatticePoint {
        &self.cap
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn w_min(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn load(&self, x: &LatticePoint) -> f64 {
        x.as_slice().iter().zip(&self.weights).map(|(&v, w)| v as f64 * w).sum()
    }

    pub fn fits(load: f64) -> bool {
        load <= 1.0 + BUDGET_TOL
    }

    pub fn is_feasible(&self, x: &LatticePoint) -> bool {
        x.le(&self.cap) && Self::fits(self.load(x))
    }

    fn validate(&self, f: &ValueOracle) -> Result<()> {
        check_dim(f.dim(), self.dim())?;
        if !self.cap.le(f.cap()) {
            return Err(Error::Domain("knapsack cap exceeds the oracle box".into()));
        }
        Ok(())
    }
}

/// Threshold greedy started from x0.
///
/// For each element the largest k with f(kχ_e | x) ≥ k·w(e)·θ is found; if
/// adding it overflows the budget the ceiling u(e) is lowered to x(e)+k−1
/// and the trial is recorded as rejected.
pub fn greedy_knapsack(
    f: &ValueOracle,
    inst: &KnapsackInstance,
    x0: &LatticePoint,
    cfg: &SolverConfig,
) -> Result<SolverOutcome> {
    inst.validate(f)?;
    check_dim(inst.dim(), x0.dim())?;
    if !inst.is_feasible(x0) {
        return Err(Error::Precondition("initial solution is not feasible".into()));
    }
    let start = f.calls();
    let eps = cfg.epsilon();
    let n = inst.dim();
    let w = inst.weights();
    let mut x = x0.clone();
    let mut fx = f.eval(&x)?;
    let mut load = inst.load(&x);
    let mut u = inst.cap().clone();
    let mut trace = GreedyTrace::default();

    let mut d = 0.0f64;
    for e in (0..n).filter(|&e| inst.cap()[e] > 0) {
        d = d.max(f.eval(&LatticePoint::unit(n, e, 1))? / w[e]);
    }
    let stop = eps * d * inst.w_min();
    for theta in thresholds(d, stop, eps) {
        for e in 0..n {
            let room = u[e] - x[e];
            if room == 0 {
                continue;
            }
            let (k, v) = max_step_from(f, &x, fx, e, room, w[e] * theta)?;
            if k == 0 {
                continue;
            }
            let next = load + k as f64 * w[e];
            if KnapsackInstance::fits(next) {
                x.add_to(e, k);
                trace.accept(theta, e, k, v - fx);
                fx = v;
                load = next;
            } else {
                u.set(e, x[e] + k - 1);
                trace.reject(theta, e, k, v - fx);
            }
        }
    }
    Ok(SolverOutcome { solution: x, value: fx, trace, epsilon: eps, oracle_calls: f.calls() - start })
}

/// Extends every y along e to the smallest k reaching each geometric level
/// of k ↦ f(kχ_e | y), from f((c(e)−y(e))χ_e | y) down to
/// (1−ε)·f(k_min χ_e | y).
pub fn increase_support(
    f: &ValueOracle,
    inst: &KnapsackInstance,
    e: usize,
    ys: &[LatticePoint],
    eps: f64,
) -> Result<Vec<LatticePoint>> {
    inst.validate(f)?;
    if e >= inst.dim() {
        return Err(Error::Domain(format!("element {e} out of range")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let mut out = Vec::new();
    for y in ys {
        extend_one(f, inst, e, y, eps, &mut out)?;
    }
    Ok(out)
}

fn extend_one(
    f: &ValueOracle,
    inst: &KnapsackInstance,
    e: usize,
    y: &LatticePoint,
    eps: f64,
    out: &mut Vec<LatticePoint>,
) -> Result<()> {
    let cap = inst.cap()[e];
    if y[e] >= cap {
        return Ok(());
    }
    let kcap = cap - y[e];
    let fy = f.eval(y)?;
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut z = y.clone();
    let mut g = |k: u64| -> Result<f64> {
        if let Some(&v) = memo.get(&k) {
            return Ok(v);
        }
        z.set(e, y[e] + k);
        let v = f.eval(&z)? - fy;
        memo.insert(k, v);
        Ok(v)
    };
    let top = g(kcap)?;
    if !(top > 0.0) {
        return Ok(());
    }
    let k_min = smallest_true(1, kcap, |k| Ok(g(k)? > 0.0))?;
    let floor = (1.0 - eps) * g(k_min)?;
    let mut emitted = HashSet::new();
    for h in thresholds(top, floor, eps) {
        let k = smallest_true(k_min, kcap, |k| Ok(g(k)? >= h))?;
        if emitted.insert(k) {
            out.push(y.plus_unit(e, k));
        }
    }
    Ok(())
}

/// Feasible starting points of support at most 3, in enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialSolutionSet {
    pub solutions: Vec<LatticePoint>,
}

/// Chains [`increase_support`] along every ordered tuple of at most three
/// elements (repeats allowed) and keeps the feasible results.
pub fn partial_enumeration(f: &ValueOracle, inst: &KnapsackInstance, eps: f64) -> Result<InitialSolutionSet> {
    inst.validate(f)?;
    let n = inst.dim();
    let depth = n.min(3);
    let mut solutions = vec![LatticePoint::zeros(n)];
    let mut seen: HashSet<LatticePoint> = solutions.iter().cloned().collect();
    let mut cache: HashMap<(LatticePoint, usize), Vec<LatticePoint>> = HashMap::new();

    // Frontier of (tuple, points reached by chaining along it), breadth first
    // so tuples come out by length, then lexicographically.
    let mut frontier: Vec<Vec<LatticePoint>> = vec![vec![LatticePoint::zeros(n)]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * n);
        for points in &frontier {
            for e in 0..n {
                let mut reached = Vec::new();
                for y in points {
                    let key = (y.clone(), e);
                    if !cache.contains_key(&key) {
                        let ext = increase_support(f, inst, e, std::slice::from_ref(y), eps)?;
                        let feasible = ext.into_iter().filter(|p| inst.is_feasible(p)).collect();
                        cache.insert(key.clone(), feasible);
                    }
                    reached.extend(cache[&key].iter().cloned());
                }
                for p in &reached {
                    if seen.insert(p.clone()) {
                        solutions.push(p.clone());
                    }
                }
                next.push(reached);
            }
        }
        frontier = next;
    }
    Ok(InitialSolutionSet { solutions })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackOutcome {
    pub best: SolverOutcome,
    pub initial_solutions: usize,
    /// Whether the configured epsilon lies in the range 0 < ε < 1 − e/3 where
    /// the approximation guarantee is stated.
    pub guarantee_applies: bool,
}

/// Greedy completion of every enumerated starting point; the best value wins,
/// ties going to the earliest starting point.
pub fn maximize_knapsack(f: &ValueOracle, inst: &KnapsackInstance, cfg: &SolverConfig) -> Result<KnapsackOutcome> {
    inst.validate(f)?;
    let start = f.calls();
    let eps = cfg.epsilon();
    let init = partial_enumeration(f, inst, eps)?;
    let runs: Vec<SolverOutcome> =
        init.solutions.par_iter().map(|x0| greedy_knapsack(f, inst, x0, cfg)).collect::<Result<_>>()?;
    let mut best = runs[0].clone();
    for r in &runs[1..] {
        if r.value > best.value {
            best = r.clone();
        }
    }
    best.oracle_calls = f.calls() - start;
    Ok(KnapsackOutcome {
        best,
        initial_solutions: init.solutions.len(),
        guarantee_applies: eps < 1.0 - std::f64::consts::E / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle<F: Fn(&[u64]) -> f64 + Send + Sync + 'static>(f: F, cap: &[u64]) -> ValueOracle {
        ValueOracle::new(f, LatticePoint::from_vec(cap.to_vec())).unwrap()
    }

    fn lp(v: &[u64]) -> LatticePoint {
        LatticePoint::from_vec(v.to_vec())
    }

    #[test]
    fn weights_validated() {
        assert!(KnapsackInstance::new(vec![0.5, 0.0], lp(&[1, 1])).is_err());
        assert!(KnapsackInstance::new(vec![0.5, 1.5], lp(&[1, 1])).is_err());
        let err = KnapsackInstance::from_budget(&[2.0, 0.0], 4.0, lp(&[1, 1])).unwrap_err();
        assert!(err.to_string().contains("element 1"));
        let k = KnapsackInstance::from_budget(&[2.0, 3.0], 4.0, lp(&[1, 1])).unwrap();
        assert_eq!(k.weights(), &[0.5, 0.75]);
    }

    #[test]
    fn greedy_example() {
        let f = oracle(|x: &[u64]| 3.0 * x[0] as f64 + x[1] as f64, &[2, 2]);
        let inst = KnapsackInstance::new(vec![0.5, 0.5], lp(&[2, 2])).unwrap();
        let cfg = SolverConfig::new(0.05, 0).unwrap();
        let out = greedy_knapsack(&f, &inst, &lp(&[0, 0]), &cfg).unwrap();
        assert_eq!(out.solution, lp(&[2, 0]));
        assert_eq!(out.value, 6.0);
        assert_eq!(out.trace.steps[0].theta, 6.0);
    }

    #[test]
    fn infeasible_start_rejected() {
        let f = oracle(|x: &[u64]| x[0] as f64, &[3]);
        let inst = KnapsackInstance::new(vec![0.5], lp(&[3])).unwrap();
        let cfg = SolverConfig::new(0.1, 0).unwrap();
        assert!(matches!(greedy_knapsack(&f, &inst, &lp(&[3]), &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn overflow_lowers_ceiling() {
        // θ = 4 accepts k = 3 along e0 but only two units fit.
        let f = oracle(|x: &[u64]| 4.0 * x[0] as f64 * 0.4 + x[1] as f64 * 0.1, &[3, 3]);
        let inst = KnapsackInstance::new(vec![0.4, 0.1], lp(&[3, 3])).unwrap();
        let cfg = SolverConfig::new(0.1, 0).unwrap();
        let out = greedy_knapsack(&f, &inst, &lp(&[0, 0]), &cfg).unwrap();
        let first = &out.trace.steps[0];
        assert!(!first.accepted);
        assert_eq!((first.element, first.k), (0, 3));
        assert!(inst.is_feasible(&out.solution));
        assert_eq!(out.solution[0], 2);
    }

    #[test]
    fn increase_support_levels() {
        let f = oracle(|x: &[u64]| x[0].min(4) as f64, &[6]);
        let inst = KnapsackInstance::new(vec![0.1], lp(&[6])).unwrap();
        let out = increase_support(&f, &inst, 0, &[lp(&[0])], 0.5).unwrap();
        assert_eq!(out, vec![lp(&[4]), lp(&[2]), lp(&[1])]);
        let zero = oracle(|_: &[u64]| 0.0, &[6]);
        assert!(increase_support(&zero, &inst, 0, &[lp(&[0])], 0.5).unwrap().is_empty());
    }

    #[test]
    fn enumeration_contains_zero_and_is_feasible() {
        let f = oracle(|x: &[u64]| (x[0] as f64).sqrt() + 2.0 * (x[1] as f64).sqrt() + 0.5 * x[2] as f64, &[3, 3, 3]);
        let inst = KnapsackInstance::new(vec![0.4, 0.35, 0.3], lp(&[3, 3, 3])).unwrap();
        let set = partial_enumeration(&f, &inst, 0.1).unwrap();
        assert_eq!(set.solutions[0], lp(&[0, 0, 0]));
        let unique: HashSet<_> = set.solutions.iter().collect();
        assert_eq!(unique.len(), set.solutions.len());
        for s in &set.solutions {
            assert!(inst.is_feasible(s));
            assert!(s.support_size() <= 3);
        }
    }

    #[test]
    fn single_element_enumeration() {
        let f = oracle(|x: &[u64]| x[0].min(4) as f64, &[6]);
        let inst = KnapsackInstance::new(vec![0.3], lp(&[6])).unwrap();
        let set = partial_enumeration(&f, &inst, 0.5).unwrap();
        assert_eq!(set.solutions, vec![lp(&[0]), lp(&[2]), lp(&[1])]);
    }

    #[test]
    fn best_single_element() {
        let f = oracle(|x: &[u64]| 2.0 * x[0] as f64 + 3.0 * x[1] as f64, &[1, 1]);
        let inst = KnapsackInstance::new(vec![1.0, 1.0], lp(&[1, 1])).unwrap();
        let out = maximize_knapsack(&f, &inst, &SolverConfig::new(0.1, 0).unwrap()).unwrap();
        assert_eq!(out.best.solution, lp(&[0, 1]));
        assert!(!out.guarantee_applies);
        let out = maximize_knapsack(&f, &inst, &SolverConfig::new(0.05, 0).unwrap()).unwrap();
        assert!(out.guarantee_applies);
    }

    #[test]
    fn ties_go_to_first_start() {
        let f = oracle(|x: &[u64]| (x[0] + x[1]).min(1) as f64, &[1, 1]);
        let inst = KnapsackInstance::new(vec![1.0, 1.0], lp(&[1, 1])).unwrap();
        let cfg = SolverConfig::new(0.1, 0).unwrap();
        let a = maximize_knapsack(&f, &inst, &cfg).unwrap();
        let b = maximize_knapsack(&f, &inst, &cfg).unwrap();
        assert_eq!(a.best.solution, lp(&[1, 0]));
        assert_eq!(a, b);
    }
}
