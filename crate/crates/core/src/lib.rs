//! Solvers for two-stage stochastic radius-based supplier problems under a
//! budget, together with the machinery they need: a vertex-solution LP
//! engine, matroid and multi-knapsack oracles, greedy ball clustering, a
//! generic reduction to robust-outlier instances, a scenario-discarding
//! sample-average-approximation driver, and brute-force ground-truth
//! oracles for desk-scale verification.

pub mod bruteforce;
pub mod cli;
pub mod cluster;
pub mod gen;
pub mod lp;
pub mod matroid;
pub mod model;
pub mod reduction;
pub mod robust_outlier;
pub mod saa;
pub mod sup_rounding;
