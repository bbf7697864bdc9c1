//! Value oracles over a bounded box of the integer lattice.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::lattice::LatticePoint;

/// A set function on the integer lattice. Implementations only see points
/// inside the box of the owning [`ValueOracle`].
pub trait LatticeFunction: Send + Sync {
    fn value(&self, x: &[u64]) -> f64;
}

impl<F> LatticeFunction for F
where
    F: Fn(&[u64]) -> f64 + Send + Sync,
{
    fn value(&self, x: &[u64]) -> f64 {
        self(x)
    }
}

/// Tolerance used when checking normalization f(0) = 0.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Counting wrapper around a [`LatticeFunction`] restricted to [0, cap].
pub struct ValueOracle {
    func: Arc<dyn LatticeFunction>,
    cap: LatticePoint,
    calls: AtomicU64,
}

impl ValueOracle {
    pub fn new<F: LatticeFunction + 'static>(func: F, cap: LatticePoint) -> Result<Self> {
        Self::from_arc(Arc::new(func), cap)
    }

    pub fn from_arc(func: Arc<dyn LatticeFunction>, cap: LatticePoint) -> Result<Self> {
        if cap.dim() == 0 {
            return Err(Error::Construction("oracle needs at least one element".into()));
        }
        let f0 = func.value(&vec![0; cap.dim()]);
        if !f0.is_finite() || f0.abs() > NORMALIZATION_TOL {
            return Err(Error::Construction(format!("oracle is not normalized: f(0) = {f0}")));
        }
        Ok(ValueOracle { func, cap, calls: AtomicU64::new(0) })
    }

    /// Same function and box with a zeroed call counter.
    pub fn fresh(&self) -> ValueOracle {
        ValueOracle { func: Arc::clone(&self.func), cap: self.cap.clone(), calls: AtomicU64::new(0) }
    }

    pub fn dim(&self) -> usize {
        self.cap.dim()
    }

    pub fn cap(&self) -> &LatticePoint {
        &self.cap
    }

    pub fn function(&self) -> Arc<dyn LatticeFunction> {
        Arc::clone(&self.func)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn in_box(&self, x: &[u64]) -> bool {
        x.len() == self.cap.dim() && x.iter().zip(self.cap.as_slice()).all(|(a, c)| a <= c)
    }

    pub fn eval(&self, x: &LatticePoint) -> Result<f64> {
        self.eval_slice(x.as_slice())
    }

    pub fn eval_slice(&self, x: &[u64]) -> Result<f64> {
        check_dim(self.cap.dim(), x.len())?;
        if let Some(e) = (0..x.len()).find(|&e| x[e] > self.cap[e]) {
            return Err(Error::Domain(format!(
                "point leaves the oracle box at element {e}: {} > {}",
                x[e], self.cap[e]
            )));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let v = self.func.value(x);
        if !v.is_finite() {
            return Err(Error::Domain(format!("oracle returned a non-finite value {v}")));
        }
        Ok(v)
    }
}

impl std::fmt::Debug for ValueOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueOracle").field("cap", &self.cap).field("calls", &self.calls()).finish()
    }
}

/// f(delta | y) = f(y + delta) - f(y).
pub fn marginal(f: &ValueOracle, delta: &LatticePoint, y: &LatticePoint) -> Result<f64> {
    check_dim(y.dim(), delta.dim())?;
    if delta.is_zero() {
        check_dim(f.dim(), y.dim())?;
        if !f.in_box(y.as_slice()) {
            return Err(Error::Domain("base point leaves the oracle box".into()));
        }
        return Ok(0.0);
    }
    let top = f.eval(&y.checked_add(delta)?)?;
    let base = f.eval(y)?;
    Ok(top - base)
}
