//! Independent ground truths: the truncated master equation and exact
//! stochastic simulation.

pub mod compare;
pub mod master;
pub mod ssa;

pub use compare::{compare_report, ComparisonReport};
pub use master::{initial_state_cap, integrate_master, TruncatedDistribution};
pub use ssa::{ssa_ensemble, ssa_trajectory, substream, SsaEnsemble};
