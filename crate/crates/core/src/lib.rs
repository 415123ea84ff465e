//! Decision-tree induction over read-once DNF targets under product
//! distributions, with exact optimality diagnostics.
//!
//! The crate grows trees with the TopDown, BestFirst and recursive-ID3
//! greedy policies using exact distribution probabilities, computes the
//! minimal achievable test error `OPT(F, t)` for every tree size `t` by
//! dynamic programming over canonical formula signatures, and reports the
//! per-iteration optimality gaps `eps_t` together with their running mean
//! (the MIC score). A finite-sample mode replaces exact probabilities by
//! plug-in estimates for train/test experiments.
//!
//! Entry points:
//! - [`dnf`]: formulas, distributions, entropy and cost primitives.
//! - [`tree`]: decision trees with exact per-leaf bookkeeping.
//! - [`greedy`]: the three growth policies and their traces.
//! - [`opt`]: `OPT(F, t)` tables and a brute-force optimal-tree oracle.
//! - [`mic`]: gap series, formula-family enumeration and sweep reports.
//! - [`sample`]: dataset sampling and empirical (finite-sample) growth.
//! - [`harness`]: run manifests, theory verification, atomic output files.

pub mod dnf;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod mic;
pub mod opt;
pub mod sample;
pub mod tree;

pub use dnf::{cost, entropy, ProductDistribution, ReadOnceDnf, Term};
pub use error::Error;
pub use greedy::{GrowthTrace, Policy, TieMode};
pub use tree::DecisionTree;

/// Absolute tolerance for probability and error comparisons.
pub const PROB_TOL: f64 = 1e-12;

/// Absolute tolerance used when comparing split gains; gains closer than
/// this count as ties.
pub const GAIN_TOL: f64 = 1e-12;
