//! Deterministic solvers for zero-sum and constrained short-solution
//! problems over prime fields.
//!
//! Given m vectors in F_q^n, the solvers here find nontrivial linear
//! combinations summing to zero whose coefficients are constrained: to a
//! balanced interval (short integer solutions in the infinity norm), to
//! {0,1} (subset sums), or to an arbitrary allowed set A (constrained
//! integer solutions). Every solver is exact, deterministic, and routes
//! its output through the verifier in [`problem`]; the brute-force
//! [`oracle`] provides ground truth at desk scale.

pub mod arith;
pub mod avgcase;
mod derand;
pub mod error;
pub mod f3;
pub mod field;
pub mod general;
pub mod halving;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod sample;
pub mod thresholds;

pub use error::{Error, Result};
