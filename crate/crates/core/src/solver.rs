//! Configuration and result types shared by all solvers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::search::effective_epsilon;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    epsilon: f64,
    pub seed: u64,
}

impl SolverConfig {
    /// `epsilon` must lie in (0, 1). It is rounded down so that 1/eps is an
    /// integer; see [`SolverConfig::epsilon`].
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(SolverConfig { epsilon: effective_epsilon(epsilon), seed })
    }

    /// The effective epsilon, 1/⌈1/eps⌉.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub theta: f64,
    pub element: usize,
    pub k: u64,
    pub gain: f64,
    /// False for knapsack trials that would overflow the budget.
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GreedyTrace {
    pub steps: Vec<TraceStep>,
}

impl GreedyTrace {
    pub(crate) fn accept(&mut self, theta: f64, element: usize, k: u64, gain: f64) {
        self.steps.push(TraceStep { theta, element, k, gain, accepted: true });
    }

    pub(crate) fn reject(&mut self, theta: f64, element: usize, k: u64, gain: f64) {
        self.steps.push(TraceStep { theta, element, k, gain, accepted: false });
    }

    pub fn accepted(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps.iter().filter(|s| s.accepted)
    }

    pub fn thetas_non_increasing(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].theta <= w[0].theta)
    }
}

/// Solution of a discrete solver together with bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOutcome {
    pub solution: LatticePoint,
    /// f(solution) as last evaluated by the solver.
    pub value: f64,
    pub trace: GreedyTrace,
    pub epsilon: f64,
    /// Oracle calls made by this solve.
    pub oracle_calls: u64,
}
