//! One step of continuous greedy: a threshold greedy direction inside P.

use crate::error::{check_dim, Error, Result};
use crate::lattice::{FractionalPoint, LatticePoint};
use crate::oracle::ValueOracle;
use crate::search::{derive_seed, thresholds};
use crate::solver::GreedyTrace;

use super::extension::estimate_marginal;
use super::{k_max_in_polymatroid, PolymatroidOracle};

/// Accuracy parameters of the sampled marginal test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl EstimatorParams {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Config(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1), got {beta}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(EstimatorParams { alpha, beta, delta })
    }

    /// ⌈3·ln(2·max(k_max, 2)/δ) / (αβ)⌉.
    pub fn samples(&self, k_max: u64) -> u64 {
        let k = k_max.max(2) as f64;
        let s = (3.0 * (2.0 * k / self.delta).ln() / (self.alpha * self.beta)).ceil();
        (s as u64).max(1)
    }
}

/// Where feasibility of a step k·χ_e is tested and where its gain is
/// estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FeasibilityAnchor {
    /// The direction itself must stay in P (y + kχ_e ∈ P) and gains are
    /// estimated at x + ε·y. Consecutive points x^t = ε·Σ y^s then stay in P
    /// by convexity.
    #[default]
    DirectionOnly,
    /// x + y + kχ_e ∈ P with gains estimated at x.
    PointPlusDirection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionConfig {
    pub epsilon: f64,
    /// N = n⌈log_{1/(1-ε)}(N/ε)⌉.
    pub big_n: u64,
    pub params: EstimatorParams,
    pub anchor: FeasibilityAnchor,
}

impl DirectionConfig {
    /// α = ε, β = ε/(2N(n+1)), δ = ε/(3N).
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Config(format!("polymatroid solver needs epsilon in (0, 1/2), got {epsilon}")));
        }
        let big_n = fixpoint_n(epsilon, n);
        let nf = big_n as f64;
        let params = EstimatorParams::new(epsilon, epsilon / (2.0 * nf * (n as f64 + 1.0)), epsilon / (3.0 * nf))?;
        Ok(DirectionConfig { epsilon, big_n, params, anchor: FeasibilityAnchor::default() })
    }

    pub fn with_anchor(mut self, anchor: FeasibilityAnchor) -> Self {
        self.anchor = anchor;
        self
    }
}

fn fixpoint_n(eps: f64, n: usize) -> u64 {
    let n = n.max(1) as u64;
    let base = (1.0 / (1.0 - eps)).ln();
    let mut big_n = n;
    for _ in 0..50 {
        let next = n * ((big_n as f64 / eps).ln() / base).ceil().max(1.0) as u64;
        if next == big_n {
            break;
        }
        big_n = next;
    }
    big_n
}

/// Binary search for the largest m ≤ k_max whose sampled marginal
/// F(mχ_e | x) reaches m·θ. Returns m and its estimated gain.
///
/// Each probe averages `params.samples(k_max)` roundings. A probe with
/// f(mχ_e) = 0 is taken to have zero gain.
pub(crate) fn search_step(
    f: &ValueOracle,
    x: &FractionalPoint,
    e: usize,
    theta: f64,
    params: &EstimatorParams,
    k_max: u64,
    seed: u64,
) -> Result<(u64, f64)> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    if k_max == 0 {
        return Ok((0, 0.0));
    }
    let samples = params.samples(k_max);
    let n = f.dim();
    let (mut lo, mut hi) = (1u64, k_max + 1);
    let mut best_gain = 0.0;
    while lo < hi {
        let m = lo + (hi - lo) / 2;
        let scale = f.eval(&LatticePoint::unit(n, e, m))?;
        let gain = if scale <= 0.0 { 0.0 } else { estimate_marginal(f, x, e, m, samples, derive_seed(seed, m))? };
        if gain >= m as f64 * theta {
            lo = m + 1;
            best_gain = gain;
        } else {
            hi = m;
        }
    }
    Ok((lo - 1, best_gain))
}

/// Sampled binary search along coordinate e from x; see [`EstimatorParams`].
pub fn binary_search_polymatroid(
    f: &ValueOracle,
    x: &FractionalPoint,
    e: usize,
    theta: f64,
    params: &EstimatorParams,
    k_max: u64,
    seed: u64,
) -> Result<u64> {
    check_dim(f.dim(), x.dim())?;
    Ok(search_step(f, x, e, theta, params, k_max, seed)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionOutcome {
    pub y: LatticePoint,
    pub trace: GreedyTrace,
}

/// Threshold greedy direction at x: thresholds run from d = max_e f(χ_e)
/// down to ε·d/N.
pub fn direction_polymatroid(
    f: &ValueOracle,
    x: &FractionalPoint,
    cfg: &DirectionConfig,
    p: &PolymatroidOracle,
    seed: u64,
) -> Result<DirectionOutcome> {
    check_dim(f.dim(), x.dim())?;
    check_dim(p.dim(), x.dim())?;
    if !p.contains_fractional(x)? {
        return Err(Error::Precondition("x is not in the polymatroid".into()));
    }
    let n = f.dim();
    let cap = f.cap().clone();
    let eps = cfg.epsilon;
    let mut y = LatticePoint::zeros(n);
    let mut trace = GreedyTrace::default();

    let mut d = 0.0f64;
    for e in (0..n).filter(|&e| cap[e] > 0) {
        d = d.max(f.eval(&LatticePoint::unit(n, e, 1))?);
    }
    let stop = eps * d / cfg.big_n as f64;

    for (round, theta) in thresholds(d, stop, eps).enumerate() {
        for e in 0..n {
            let (anchor, at, hard_cap) = match cfg.anchor {
                FeasibilityAnchor::DirectionOnly => {
                    let z: Vec<f64> = (0..n).map(|i| x.get(i) + eps * y[i] as f64).collect();
                    let room = cap[e].saturating_sub(z[e].ceil() as u64);
                    (FractionalPoint::from(&y), FractionalPoint::new(z)?, room)
                }
                FeasibilityAnchor::PointPlusDirection => {
                    let z: Vec<f64> = (0..n).map(|i| x.get(i) + y[i] as f64).collect();
                    let room = cap[e].saturating_sub(x.get(e).ceil() as u64 + y[e]);
                    (FractionalPoint::new(z)?, x.clone(), room)
                }
            };
            if hard_cap == 0 {
                continue;
            }
            let k_max = k_max_in_polymatroid(p, &anchor, e, hard_cap)?;
            if k_max == 0 {
                continue;
            }
            let s = derive_seed(derive_seed(seed, round as u64), e as u64);
            let (k, gain) = search_step(f, &at, e, theta, &cfg.params, k_max, s)?;
            if k > 0 {
                y.add_to(e, k);
                trace.accept(theta, e, k, gain);
            }
        }
    }
    Ok(DirectionOutcome { y, trace })
}
