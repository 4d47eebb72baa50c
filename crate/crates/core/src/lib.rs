//! Noisy twenty questions over a binary symmetric channel.
//!
//! A player estimates a hidden value `x` in `[0, 1)` by asking an oracle
//! whether `x` lies in chosen subsets of the unit interval; every answer is
//! passed through a BSC. This crate implements four querying policies:
//!
//! - adaptive bisection in its analyzable grid form ([`policy_adaptive`]),
//! - non-adaptive repetition with unequal error protection ([`policy_repetition`]),
//! - non-adaptive random block coding ([`policy_block`]),
//! - non-adaptive superposition coding with unequal error protection ([`policy_block`]).
//!
//! [`exponents`] evaluates the analytic error-exponent curves and
//! [`harness`] runs seeded Monte Carlo comparisons of the policies.

pub mod channel;
pub mod cli;
pub mod error;
pub mod exponents;
pub mod harness;
pub mod numerics;
pub mod policy_adaptive;
pub mod policy_block;
pub mod policy_repetition;
pub mod target;

pub use error::{Error, Result};
