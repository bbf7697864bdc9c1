//! Continuous greedy over a polymatroid followed by rounding.

use crate::error::{check_dim, Error, Result};
use crate::lattice::{FractionalPoint, LatticePoint};
use crate::oracle::ValueOracle;
use crate::search::derive_seed;
use crate::solver::{GreedyTrace, SolverConfig, SolverOutcome};

use super::direction::{direction_polymatroid, DirectionConfig};
use super::rounding::round_polymatroid;
use super::PolymatroidOracle;

const ROUNDING_TAG: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousOutcome {
    /// x = ε·Σ_t y^t.
    pub x: FractionalPoint,
    pub directions: Vec<LatticePoint>,
    pub trace: GreedyTrace,
    pub epsilon: f64,
}

fn check_inside_box(f: &ValueOracle, p: &PolymatroidOracle) -> Result<()> {
    check_dim(f.dim(), p.dim())?;
    let n = f.dim();
    for e in 0..n {
        let beyond = LatticePoint::unit(n, e, f.cap()[e] + 1);
        if p.contains_point(&beyond)? {
            return Err(Error::Precondition(format!("polymatroid reaches beyond the oracle box along element {e}")));
        }
    }
    Ok(())
}

/// Runs 1/ε direction steps with the default [`DirectionConfig`].
pub fn continuous_greedy(f: &ValueOracle, p: &PolymatroidOracle, cfg: &SolverConfig) -> Result<ContinuousOutcome> {
    let dcfg = DirectionConfig::new(cfg.epsilon(), f.dim())?;
    continuous_greedy_with(f, p, &dcfg, cfg.seed)
}

pub fn continuous_greedy_with(
    f: &ValueOracle,
    p: &PolymatroidOracle,
    dcfg: &DirectionConfig,
    seed: u64,
) -> Result<ContinuousOutcome> {
    check_inside_box(f, p)?;
    let n = f.dim();
    let eps = dcfg.epsilon;
    let steps = (1.0 / eps).round() as u64;
    let mut sum = LatticePoint::zeros(n);
    let mut x = FractionalPoint::zeros(n);
    let mut directions = Vec::new();
    let mut trace = GreedyTrace::default();
    for t in 1..=steps {
        let dir = direction_polymatroid(f, &x, dcfg, p, derive_seed(seed, t))?;
        sum = sum.checked_add(&dir.y)?;
        x = FractionalPoint::new(sum.as_slice().iter().map(|&s| eps * s as f64).collect())?;
        if !p.contains_fractional(&x)? {
            return Err(Error::Precondition(format!("continuous greedy left P at step {t}")));
        }
        trace.steps.extend(dir.trace.steps);
        directions.push(dir.y);
    }
    Ok(ContinuousOutcome { x, directions, trace, epsilon: eps })
}

/// Continuous greedy, then randomized rounding to a lattice point of P.
pub fn maximize_polymatroid(f: &ValueOracle, p: &PolymatroidOracle, cfg: &SolverConfig) -> Result<SolverOutcome> {
    let start = f.calls();
    let cont = continuous_greedy(f, p, cfg)?;
    let solution = round_polymatroid(&cont.x, p, derive_seed(cfg.seed, ROUNDING_TAG))?;
    let value = f.eval(&solution)?;
    Ok(SolverOutcome { solution, value, trace: cont.trace, epsilon: cont.epsilon, oracle_calls: f.calls() - start })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymatroid::extension::extension_exact;
    use crate::polymatroid::UniformPolymatroid;

    fn oracle<F: Fn(&[u64]) -> f64 + Send + Sync + 'static>(f: F, cap: &[u64]) -> ValueOracle {
        ValueOracle::new(f, LatticePoint::from_vec(cap.to_vec())).unwrap()
    }

    #[test]
    fn zero_function_stays_at_origin() {
        let f = oracle(|_: &[u64]| 0.0, &[2, 2]);
        let p = PolymatroidOracle::new(UniformPolymatroid::new(2, 2, 3)).unwrap();
        let out = continuous_greedy(&f, &p, &SolverConfig::new(0.25, 0).unwrap()).unwrap();
        assert_eq!(out.x, FractionalPoint::zeros(2));
    }

    #[test]
    fn polymatroid_outside_box_rejected() {
        let f = oracle(|x: &[u64]| x[0] as f64, &[1, 1]);
        let p = PolymatroidOracle::new(UniformPolymatroid::new(2, 2, 3)).unwrap();
        let r = continuous_greedy(&f, &p, &SolverConfig::new(0.25, 0).unwrap());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn modular_reaches_lp_optimum() {
        // LP optimum over {x ≤ 2, x(E) ≤ 3} for weights (3, 2, 1) is 8.
        let f = oracle(|x: &[u64]| 3.0 * x[0] as f64 + 2.0 * x[1] as f64 + x[2] as f64, &[2, 2, 2]);
        let p = PolymatroidOracle::new(UniformPolymatroid::new(3, 2, 3)).unwrap();
        let cfg = SolverConfig::new(0.25, 9).unwrap();
        let out = continuous_greedy(&f, &p, &cfg).unwrap();
        let v = extension_exact(&f, &out.x).unwrap();
        assert!(v >= (1.0 - 4.0 * 0.25) * 8.0 - 1e-9, "{v}");
        let rounded = maximize_polymatroid(&f, &p, &cfg).unwrap();
        assert!(p.contains_point(&rounded.solution).unwrap());
    }
}
