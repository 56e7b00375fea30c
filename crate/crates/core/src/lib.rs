//! Finite-horizon reversible investment: the two free boundaries of the
//! associated zero-sum stopping game, its value, an independent penalized-PDE
//! oracle, and Monte Carlo checks of the saddle point and of the reflected
//! optimal control.

// Checks are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
#[cfg(feature = "cli")]
pub mod commands;
#[cfg(feature = "cli")]
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod pde;
pub mod quadrature;
pub mod simulate;
pub mod svg;
pub mod value;

pub use boundary::{interpolate, solve_boundaries, BoundaryCurves, GridConfig};
pub use error::{Error, Result};
pub use model::{
    derived_constants, DerivedConstants, MarginalProfit, Model, ModelParams, ProductionFn,
};


pub use value::{value_at, value_grid, GridSource, ValueEvaluator, ValueGrid};
pub use pde::{extract_boundaries, solve_penalized, PdeConfig};
pub use simulate::{GameEstimate, SimConfig};
