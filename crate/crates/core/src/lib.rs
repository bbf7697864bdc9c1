//! Maximization of monotone submodular functions on the integer lattice.
//!
//! The crate provides threshold-greedy solvers for cardinality, polymatroid
//! and knapsack constraints, a brute-force reference solver, standard
//! instance families and a batch experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bruteforce;
pub mod cardinality;
pub mod error;
pub mod harness;
pub mod instances;
pub mod knapsack;
pub mod lattice;
pub mod oracle;
pub mod polymatroid;
pub mod properties;
mod search;
pub mod solver;

pub use error::{Error, Result};
pub use lattice::{FractionalPoint, GroundSet, LatticePoint};
pub use oracle::{LatticeFunction, ValueOracle};
pub use search::effective_epsilon;
pub use solver::{GreedyTrace, SolverConfig, SolverOutcome, TraceStep};
