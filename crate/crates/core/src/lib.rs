//! Bosonic Josephson junction coupled to a driven optical cavity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fixed_points;
pub mod model;
pub mod ode;
pub mod output;
pub mod quantum;
pub mod reduced;
pub mod wannier;

pub use error::{Error, Result};
pub use model::{DimensionlessParams, MeanFieldState};
