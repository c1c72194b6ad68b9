//! Relaxed Ryu three-operator splitting for
//!
//! ```text
//! minimize f1(x) + f2(x) + f3(x)
//! ```
//!
//! with `f1`, `f2` convex and `L`-smooth and `f3` proper, lsc and possibly
//! nonconvex. Includes the envelope merit function, a stepsize planner, an
//! adaptive-stepsize variant, a Davis–Yin baseline and a nonnegative matrix
//! completion benchmark with a spectral MCP penalty.

pub mod baselines;
pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod planner;
pub mod problem;
pub mod prox;
pub mod splitting;
pub mod vector;

pub use error::{Error, Result};
pub use exec::Execution;
pub use planner::{plan, AdaptiveController, StepsizePlan};
pub use problem::{CompositeProblem, ProxTerm, SmoothTerm};
pub use splitting::{run_ryu, RelaxationParams, SplitState, StoppingRule};
pub use vector::{RealVector, Shape};
