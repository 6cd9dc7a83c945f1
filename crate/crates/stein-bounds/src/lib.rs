//! Central moment and concentration bounds for random variables that admit a
//! Stein coupling, together with a parallel Monte Carlo engine that checks the
//! bounds against simulation.
//!
//! The library has two halves:
//!
//! * **Bounds** ([`bounds`]): every coupling moment inequality and tail bound
//!   as a deterministic numeric function of [`coupling::CouplingParams`], with
//!   explicit applicability preconditions reported as values.
//! * **Simulation** ([`models`], [`mc`]): four built-in Stein coupling
//!   samplers (independent sums, local-dependence runs, size-bias runs,
//!   Erdős–Rényi neighbourhood statistics) and batch-means estimators of
//!   central moments, tails, and the coupling identity, reproducible for any
//!   worker count.
//!
//! The runnable programs in `examples/` demonstrate each capability; the
//! `stein-bounds` binary exposes `bound`, `simulate` and `verify` commands.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod coupling;
pub mod error;
pub mod graph;
pub mod mc;
pub mod models;
pub mod norms;
pub mod report;
pub mod statistic;
pub mod streams;

pub use error::{Error, Result};
