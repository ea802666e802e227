//! Deterministic off-policy policy gradients (DD-OPG).
//!
//! Deterministic neural-network policies are rolled out without action
//! noise. Past trajectories are kept in a replay buffer and reweighted under
//! a fixed-covariance Gaussian evaluation density, which yields an
//! importance-sampled surrogate of the expected return. The surrogate is
//! penalized by its effective sample size and fully optimized with Adam on a
//! softmax-prioritized subset of the buffer after every rollout.
//!
//! A REINFORCE baseline, native classic-control environments and an
//! experiment harness round out the crate.

pub mod agents;
pub mod curve;
pub mod error;
pub mod envs;
pub mod estimators;
pub mod harness;
pub mod numkit;
pub mod optim;
pub mod policy;
pub mod records;
pub mod replay;
pub mod rollout;

pub use error::{Error, Result};
