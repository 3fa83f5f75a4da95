//! Optimal drift-rate control of a reflected Brownian processing system.
//!
//! A buffer `Z` on `[0, b]` receives Brownian input with variance `σ²` and is
//! drained at a controlled rate `θ(Z)` chosen from an action set `A`. Running
//! at rate `x` costs `c(x)` per unit time; content pushed out at the upper
//! boundary (rejected work) costs `p` per unit. The crate computes the
//! optimal average cost `γ(p)`, the optimal policy, its rejection rate
//! `β(p)`, the penalty `p*` that meets a rejection budget, and cross-checks
//! all of it by simulation.
//!
//! ```
//! use driftrate::{bellman, cost_model::*, rejection};
//!
//! let model = validate(
//!     &ActionSet::interval(0.0, f64::INFINITY),
//!     &CostSpec::new(vec![CostPiece::exponential(1.0, 0.0)]),
//! )
//! .unwrap();
//! let params = bellman::ProblemParams::new(1.0, 1.0, 5.0).unwrap();
//! let sol = bellman::solve(&model, &params, &Default::default()).unwrap();
//! let rep = rejection::rejection_report(&model, &sol).unwrap();
//! assert!(sol.gamma >= params.p * rep.beta);
//! ```

// `!(a > b)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod cli;
pub mod config;
pub mod constrained;
pub mod cost_model;
mod error;
pub mod numerics;
pub mod output;
pub mod policy;
pub mod rejection;
pub mod simulator;

pub use error::{Error, ExitCode};
