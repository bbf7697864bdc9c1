//! C ABI for the latmax solvers.
//!
//! Objects are opaque handles created by `latmax_*_new*` functions and
//! released with the matching `*_free`. Every fallible function returns a
//! [`LatmaxStatus`]; the message of the last error on the calling thread is
//! available through [`latmax_last_error`].

use std::cell::RefCell;
use std::ffi::c_void;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use latmax::cardinality::{maximize_dr_cardinality, maximize_lattice_cardinality, CardinalityConstraint};
use latmax::instances::{make_budget_allocation, make_lattice_nondr, make_separable_concave};
use latmax::knapsack::{maximize_knapsack, KnapsackInstance};
use latmax::polymatroid::{maximize_polymatroid, PartitionPolymatroid, PolymatroidOracle, UniformPolymatroid};
use latmax::{Error, LatticeFunction, LatticePoint, SolverConfig, SolverOutcome, ValueOracle};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatmaxStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    Domain = 3,
    Precondition = 4,
    Capacity = 5,
    Config = 6,
    Construction = 7,
    Panic = 8,
}

impl From<&Error> for LatmaxStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => LatmaxStatus::DimensionMismatch,
            Error::Domain(_) => LatmaxStatus::Domain,
            Error::Precondition(_) => LatmaxStatus::Precondition,
            Error::Capacity(_) => LatmaxStatus::Capacity,
            Error::Config(_) => LatmaxStatus::Config,
            Error::Construction(_) => LatmaxStatus::Construction,
        }
    }
}

/// A value oracle over a box of the integer lattice.
pub struct LatmaxOracle {
    inner: ValueOracle,
}

pub struct LatmaxPolymatroid {
    inner: PolymatroidOracle,
}

/// Solution, value and oracle-call count of a solver run.
pub struct LatmaxResult {
    inner: SolverOutcome,
}

/// Callback returning f(x) for a lattice point `x` of length `n`. It may be
/// invoked from several threads at once and must return a finite value.
pub type LatmaxValueFn = Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const u64, n: usize) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct NullArg(&'static str);

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<NullArg> for Failure {
    fn from(n: NullArg) -> Self {
        Failure::Null(n.0)
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LatmaxStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LatmaxStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            LatmaxStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            LatmaxStatus::from(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            LatmaxStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &'static str) -> Result<&'a [T], NullArg> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(NullArg(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &'static str) -> Result<&'a T, NullArg> {
    ptr.as_ref().ok_or(NullArg(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn latmax_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// f(x) = Σ coeffs[e]·x_e^powers[e] on the box [0, cap].
///
/// # Safety
/// Array arguments must point to `n` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_new_separable_concave(
    n: usize,
    coeffs: *const f64,
    powers: *const f64,
    cap: *const u64,
    out: *mut *mut LatmaxOracle,
) -> LatmaxStatus {
    guard(|| {
        let (a, p) = (slice(coeffs, n, "coeffs")?, slice(powers, n, "powers")?);
        let cap = LatticePoint::from_vec(slice(cap, n, "cap")?.to_vec());
        emit(out, LatmaxOracle { inner: make_separable_concave(a, p, cap)? })
    })
}

/// Budget allocation on `n` sources: edge i joins `sources[i]` to
/// `targets[i]` with activation probability `probs[i]`.
///
/// # Safety
/// `cap` must hold `n` elements and the edge arrays `n_edges` elements.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_new_budget_allocation(
    n: usize,
    cap: *const u64,
    n_edges: usize,
    sources: *const usize,
    targets: *const usize,
    probs: *const f64,
    out: *mut *mut LatmaxOracle,
) -> LatmaxStatus {
    guard(|| {
        let cap = LatticePoint::from_vec(slice(cap, n, "cap")?.to_vec());
        let s = slice(sources, n_edges, "sources")?;
        let t = slice(targets, n_edges, "targets")?;
        let q = slice(probs, n_edges, "probs")?;
        let edges: Vec<_> = (0..n_edges).map(|i| (s[i], t[i], q[i])).collect();
        emit(out, LatmaxOracle { inner: make_budget_allocation(&edges, cap)? })
    })
}

/// Monotone lattice-submodular lookup table over [0, cap] in lexicographic
/// order (last coordinate fastest). The table is checked on construction.
///
/// # Safety
/// `cap` must hold `n` elements and `values` `n_values` elements.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_new_table(
    n: usize,
    cap: *const u64,
    values: *const f64,
    n_values: usize,
    out: *mut *mut LatmaxOracle,
) -> LatmaxStatus {
    guard(|| {
        let cap = LatticePoint::from_vec(slice(cap, n, "cap")?.to_vec());
        let values = slice(values, n_values, "values")?.to_vec();
        emit(out, LatmaxOracle { inner: make_lattice_nondr(cap, values)?.oracle })
    })
}

struct Callback {
    func: unsafe extern "C" fn(*mut c_void, *const u64, usize) -> f64,
    user_data: *mut c_void,
}

// The caller promises the callback and its user data are thread-safe.
unsafe impl Send for Callback {}
unsafe impl Sync for Callback {}

impl LatticeFunction for Callback {
    fn value(&self, x: &[u64]) -> f64 {
        unsafe { (self.func)(self.user_data, x.as_ptr(), x.len()) }
    }
}

/// Oracle backed by a C callback. The callback must satisfy f(0) = 0 and
/// stay valid, together with `user_data`, until the oracle is freed.
///
/// # Safety
/// `cap` must hold `n` elements; see [`LatmaxValueFn`] for the callback.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_new_callback(
    n: usize,
    cap: *const u64,
    func: LatmaxValueFn,
    user_data: *mut c_void,
    out: *mut *mut LatmaxOracle,
) -> LatmaxStatus {
    guard(|| {
        let func = func.ok_or(NullArg("func"))?;
        let cap = LatticePoint::from_vec(slice(cap, n, "cap")?.to_vec());
        let cb: Arc<dyn LatticeFunction> = Arc::new(Callback { func, user_data });
        emit(out, LatmaxOracle { inner: ValueOracle::from_arc(cb, cap)? })
    })
}

/// # Safety
/// `oracle` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_free(oracle: *mut LatmaxOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Ground-set size, or 0 for a null handle.
///
/// # Safety
/// `oracle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_dim(oracle: *const LatmaxOracle) -> usize {
    oracle.as_ref().map_or(0, |o| o.inner.dim())
}

/// Evaluates f at `x` (counted as an oracle call).
///
/// # Safety
/// `x` must hold `n` elements; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latmax_oracle_eval(
    oracle: *const LatmaxOracle,
    x: *const u64,
    n: usize,
    value: *mut f64,
) -> LatmaxStatus {
    guard(|| {
        let o = handle(oracle, "oracle")?;
        let x = slice(x, n, "x")?;
        let v = o.inner.eval_slice(x)?;
        *value.as_mut().ok_or(NullArg("value"))? = v;
        Ok(())
    })
}

/// Uniform polymatroid: x_e ≤ per_element and Σ x ≤ total.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latmax_polymatroid_new_uniform(
    n: usize,
    per_element: u64,
    total: u64,
    out: *mut *mut LatmaxPolymatroid,
) -> LatmaxStatus {
    guard(|| {
        let p = PolymatroidOracle::new(UniformPolymatroid::new(n, per_element, total))?;
        emit(out, LatmaxPolymatroid { inner: p })
    })
}

/// Partition polymatroid: element e lies in part `part_of[e]`,
/// x_e ≤ caps[part_of[e]], and the sum over part j is at most `totals[j]`
/// (unbounded when `totals` is null).
///
/// # Safety
/// `part_of` must hold `n` elements; `caps` and `totals` (if non-null)
/// `n_parts` elements.
#[no_mangle]
pub unsafe extern "C" fn latmax_polymatroid_new_partition(
    n: usize,
    part_of: *const usize,
    n_parts: usize,
    caps: *const u64,
    totals: *const u64,
    out: *mut *mut LatmaxPolymatroid,
) -> LatmaxStatus {
    guard(|| {
        let part_of = slice(part_of, n, "part_of")?.to_vec();
        let caps = slice(caps, n_parts, "caps")?.to_vec();
        let totals = if totals.is_null() { None } else { Some(slice(totals, n_parts, "totals")?.to_vec()) };
        let p = PolymatroidOracle::new(PartitionPolymatroid::new(part_of, caps, totals)?)?;
        emit(out, LatmaxPolymatroid { inner: p })
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn latmax_polymatroid_free(p: *mut LatmaxPolymatroid) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn solve(out: *mut *mut LatmaxResult, run: impl FnOnce() -> latmax::Result<SolverOutcome>) -> LatmaxStatus {
    guard(|| unsafe { emit(out, LatmaxResult { inner: run()? }) })
}

/// Cardinality-constrained maximization of a DR-submodular oracle:
/// Σ x ≤ budget within the oracle box.
///
/// # Safety
/// `oracle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn latmax_solve_dr_cardinality(
    oracle: *const LatmaxOracle,
    budget: u64,
    epsilon: f64,
    out: *mut *mut LatmaxResult,
) -> LatmaxStatus {
    let Some(o) = oracle.as_ref() else { return guard(|| Err(Failure::Null("oracle"))) };
    solve(out, || {
        let f = o.inner.fresh();
        let cst = CardinalityConstraint::new(f.cap().clone(), budget);
        maximize_dr_cardinality(&f, &cst, &SolverConfig::new(epsilon, 0)?)
    })
}

/// Cardinality-constrained maximization of a lattice-submodular oracle.
///
/// # Safety
/// `oracle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn latmax_solve_lattice_cardinality(
    oracle: *const LatmaxOracle,
    budget: u64,
    epsilon: f64,
    out: *mut *mut LatmaxResult,
) -> LatmaxStatus {
    let Some(o) = oracle.as_ref() else { return guard(|| Err(Failure::Null("oracle"))) };
    solve(out, || {
        let f = o.inner.fresh();
        let cst = CardinalityConstraint::new(f.cap().clone(), budget);
        maximize_lattice_cardinality(&f, &cst, &SolverConfig::new(epsilon, 0)?)
    })
}

/// Maximization over the lattice points of a polymatroid. Randomized; the
/// result is a function of `seed`.
///
/// # Safety
/// `oracle` and `p` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn latmax_solve_polymatroid(
    oracle: *const LatmaxOracle,
    p: *const LatmaxPolymatroid,
    epsilon: f64,
    seed: u64,
    out: *mut *mut LatmaxResult,
) -> LatmaxStatus {
    let (Some(o), Some(p)) = (oracle.as_ref(), p.as_ref()) else {
        return guard(|| Err(Failure::Null("oracle or polymatroid")));
    };
    solve(out, || maximize_polymatroid(&o.inner.fresh(), &p.inner.fresh(), &SolverConfig::new(epsilon, seed)?))
}

/// Knapsack-constrained maximization: Σ weights[e]·x_e ≤ 1 within the
/// oracle box, weights in (0, 1].
///
/// # Safety
/// `weights` must hold as many elements as the oracle's dimension.
#[no_mangle]
pub unsafe extern "C" fn latmax_solve_knapsack(
    oracle: *const LatmaxOracle,
    weights: *const f64,
    epsilon: f64,
    out: *mut *mut LatmaxResult,
) -> LatmaxStatus {
    let Some(o) = oracle.as_ref() else { return guard(|| Err(Failure::Null("oracle"))) };
    let w = match slice(weights, o.inner.dim(), "weights") {
        Ok(w) => w.to_vec(),
        Err(e) => return guard(|| Err(e.into())),
    };
    solve(out, || {
        let f = o.inner.fresh();
        let inst = KnapsackInstance::new(w, f.cap().clone())?;
        Ok(maximize_knapsack(&f, &inst, &SolverConfig::new(epsilon, 0)?)?.best)
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latmax_result_value(r: *const LatmaxResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.value)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latmax_result_oracle_calls(r: *const LatmaxResult) -> u64 {
    r.as_ref().map_or(0, |r| r.inner.oracle_calls)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latmax_result_dim(r: *const LatmaxResult) -> usize {
    r.as_ref().map_or(0, |r| r.inner.solution.dim())
}

/// Copies the solution into `buf`, which must hold `len` ≥ dim elements.
///
/// # Safety
/// `r` must be a live handle and `buf` point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn latmax_result_solution(r: *const LatmaxResult, buf: *mut u64, len: usize) -> LatmaxStatus {
    guard(|| {
        let r = handle(r, "result")?;
        let sol = r.inner.solution.as_slice();
        if len < sol.len() {
            return Err(Error::DimensionMismatch { expected: sol.len(), found: len }.into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        std::ptr::copy_nonoverlapping(sol.as_ptr(), buf, sol.len());
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn latmax_result_free(r: *mut LatmaxResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
