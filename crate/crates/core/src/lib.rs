//! Executable generic-chaining tail bounds for families of processes
//! `X^ε` indexed by `[0, 1]`, together with exact samplers for two model
//! families and a seeded Monte Carlo harness that confronts the bound with
//! empirical suprema.
//!
//! Layout:
//!
//! - [`metric`]: covering numbers, dyadic partitions, nets and the chaining
//!   pair sets `H_n`.
//! - [`chaining`]: chaining weights, entropy sums and the explicit tail bound.
//! - [`processes`]: the indicator process `1{t < U <= t + ε}` and a
//!   compensated Poisson integral with power-law intensity.
//! - [`montecarlo`]: replicated sup-probability estimates, Wilson intervals
//!   and ε-sweeps.
//! - [`cli`]: config parsing and the `bound` / `sweep` / `audit` commands.

// `!(x > 0.0)` style guards are how NaN gets rejected here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaining;
pub mod cli;
pub mod error;
pub mod metric;
pub mod montecarlo;
pub mod processes;

pub use error::{Error, Result};
