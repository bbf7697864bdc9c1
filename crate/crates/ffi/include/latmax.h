#ifndef LATMAX_H
#define LATMAX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum LatmaxStatus {
  LATMAX_STATUS_OK = 0,
  LATMAX_STATUS_NULL_POINTER = 1,
  LATMAX_STATUS_DIMENSION_MISMATCH = 2,
  LATMAX_STATUS_DOMAIN = 3,
  LATMAX_STATUS_PRECONDITION = 4,
  LATMAX_STATUS_CAPACITY = 5,
  LATMAX_STATUS_CONFIG = 6,
  LATMAX_STATUS_CONSTRUCTION = 7,
  LATMAX_STATUS_PANIC = 8,
} LatmaxStatus;

// A value oracle over a box of the integer lattice.
typedef struct LatmaxOracle LatmaxOracle;

typedef struct LatmaxPolymatroid LatmaxPolymatroid;

// Solution, value and oracle-call count of a solver run.
typedef struct LatmaxResult LatmaxResult;

// Callback returning f(x) for a lattice point `x` of length `n`. It may be
// invoked from several threads at once and must return a finite value.
typedef double (*LatmaxValueFn)(void *user_data, const uint64_t *x, size_t n);

// Copies the last error message on this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns the full message length.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t latmax_last_error(char *buf, size_t len);

// f(x) = Σ coeffs[e]·x_e^powers[e] on the box [0, cap].
//
// # Safety
// Array arguments must point to `n` readable elements; `out` must be writable.
enum LatmaxStatus latmax_oracle_new_separable_concave(size_t n,
                                                      const double *coeffs,
                                                      const double *powers,
                                                      const uint64_t *cap,
                                                      struct LatmaxOracle **out);

// Budget allocation on `n` sources: edge i joins `sources[i]` to
// `targets[i]` with activation probability `probs[i]`.
//
// # Safety
// `cap` must hold `n` elements and the edge arrays `n_edges` elements.
enum LatmaxStatus latmax_oracle_new_budget_allocation(size_t n,
                                                      const uint64_t *cap,
                                                      size_t n_edges,
                                                      const size_t *sources,
                                                      const size_t *targets,
                                                      const double *probs,
                                                      struct LatmaxOracle **out);

// Monotone lattice-submodular lookup table over [0, cap] in lexicographic
// order (last coordinate fastest). The table is checked on construction.
//
// # Safety
// `cap` must hold `n` elements and `values` `n_values` elements.
enum LatmaxStatus latmax_oracle_new_table(size_t n,
                                          const uint64_t *cap,
                                          const double *values,
                                          size_t n_values,
                                          struct LatmaxOracle **out);

// Oracle backed by a C callback. The callback must satisfy f(0) = 0 and
// stay valid, together with `user_data`, until the oracle is freed.
//
// # Safety
// `cap` must hold `n` elements; see [`LatmaxValueFn`] for the callback.
enum LatmaxStatus latmax_oracle_new_callback(size_t n,
                                             const uint64_t *cap,
                                             LatmaxValueFn func,
                                             void *user_data,
                                             struct LatmaxOracle **out);

// # Safety
// `oracle` must be null or a handle not yet freed.
void latmax_oracle_free(struct LatmaxOracle *oracle);

// Ground-set size, or 0 for a null handle.
//
// # Safety
// `oracle` must be null or a live handle.
size_t latmax_oracle_dim(const struct LatmaxOracle *oracle);

// Evaluates f at `x` (counted as an oracle call).
//
// # Safety
// `x` must hold `n` elements; `value` must be writable.
enum LatmaxStatus latmax_oracle_eval(const struct LatmaxOracle *oracle,
                                     const uint64_t *x,
                                     size_t n,
                                     double *value);

// Uniform polymatroid: x_e ≤ per_element and Σ x ≤ total.
//
// # Safety
// `out` must be writable.
enum LatmaxStatus latmax_polymatroid_new_uniform(size_t n,
                                                 uint64_t per_element,
                                                 uint64_t total,
                                                 struct LatmaxPolymatroid **out);

// Partition polymatroid: element e lies in part `part_of[e]`,
// x_e ≤ caps[part_of[e]], and the sum over part j is at most `totals[j]`
// (unbounded when `totals` is null).
//
// # Safety
// `part_of` must hold `n` elements; `caps` and `totals` (if non-null)
// `n_parts` elements.
enum LatmaxStatus latmax_polymatroid_new_partition(size_t n,
                                                   const size_t *part_of,
                                                   size_t n_parts,
                                                   const uint64_t *caps,
                                                   const uint64_t *totals,
                                                   struct LatmaxPolymatroid **out);

// # Safety
// `p` must be null or a handle not yet freed.
void latmax_polymatroid_free(struct LatmaxPolymatroid *p);

// Cardinality-constrained maximization of a DR-submodular oracle:
// Σ x ≤ budget within the oracle box.
//
// # Safety
// `oracle` must be a live handle and `out` writable.
enum LatmaxStatus latmax_solve_dr_cardinality(const struct LatmaxOracle *oracle,
                                              uint64_t budget,
                                              double epsilon,
                                              struct LatmaxResult **out);

// Cardinality-constrained maximization of a lattice-submodular oracle.
//
// # Safety
// `oracle` must be a live handle and `out` writable.
enum LatmaxStatus latmax_solve_lattice_cardinality(const struct LatmaxOracle *oracle,
                                                   uint64_t budget,
                                                   double epsilon,
                                                   struct LatmaxResult **out);

// Maximization over the lattice points of a polymatroid. Randomized; the
// result is a function of `seed`.
//
// # Safety
// `oracle` and `p` must be live handles and `out` writable.
enum LatmaxStatus latmax_solve_polymatroid(const struct LatmaxOracle *oracle,
                                           const struct LatmaxPolymatroid *p,
                                           double epsilon,
                                           uint64_t seed,
                                           struct LatmaxResult **out);

// Knapsack-constrained maximization: Σ weights[e]·x_e ≤ 1 within the
// oracle box, weights in (0, 1].
//
// # Safety
// `weights` must hold as many elements as the oracle's dimension.
enum LatmaxStatus latmax_solve_knapsack(const struct LatmaxOracle *oracle,
                                        const double *weights,
                                        double epsilon,
                                        struct LatmaxResult **out);

// # Safety
// `r` must be null or a live handle.
double latmax_result_value(const struct LatmaxResult *r);

// # Safety
// `r` must be null or a live handle.
uint64_t latmax_result_oracle_calls(const struct LatmaxResult *r);

// # Safety
// `r` must be null or a live handle.
size_t latmax_result_dim(const struct LatmaxResult *r);

// Copies the solution into `buf`, which must hold `len` ≥ dim elements.
//
// # Safety
// `r` must be a live handle and `buf` point to `len` writable elements.
enum LatmaxStatus latmax_result_solution(const struct LatmaxResult *r, uint64_t *buf, size_t len);

// # Safety
// `r` must be null or a handle not yet freed.
void latmax_result_free(struct LatmaxResult *r);

#endif  /* LATMAX_H */
