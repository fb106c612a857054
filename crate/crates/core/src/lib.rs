//! Subgradient methods with Polyak stepsizes whose level value is raised
//! whenever a linear stepsize-violation system becomes infeasible.
//!
//! The crate provides the feasibility oracle ([`linfeas`]), the detector
//! windows ([`detectors`]), level controllers and baseline stepsize rules
//! ([`levels`]), the exact and approximate-subgradient loops ([`solver`]),
//! benchmark problem families ([`problems`]) and the command-line harness
//! ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod detectors;
pub mod error;
pub mod levels;
pub mod linfeas;
pub mod problems;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use solver::{run_approximate, run_exact, Method, RunConfig, RunResult, StopReason};
pub use types::{
    project, to_minimization, ApproximateOracle, DenseVector, FeasibleRegion, FnOracle, Oracle,
    Sense, SubgradientReport, TraceRecord,
};
