//! Numerical laboratory for the regularized visible-invisible two-fold of
//! piecewise-smooth systems in R³.
//!
//! The crate is organised bottom-up:
//!
//! - [`pws`]: Filippov classification and sliding fields for a general pair of fields.
//! - [`normal_form`]: the piecewise-linear two-fold, its sliding node, canards and exact flows.
//! - [`regularization`] and [`charts`]: smooth regularizations `X_ε` and the coordinate charts around the fold.
//! - [`integrator`]: adaptive Dormand–Prince integration with events, plus hybrid Filippov runs.
//! - [`analysis`]: passage maps, the twist along the weak canard, return maps and limit cycles.
//! - [`scenario`]: JSON-configured experiments and their output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod charts;
pub mod integrator;
pub mod normal_form;
pub mod pws;
pub mod regularization;
pub mod scenario;

pub use normal_form::{Case, EigenData, NormalFormParams};
pub use pws::{Point, PwsSystem, Side};
pub use regularization::{PhiFamily, RegularizationFn};
