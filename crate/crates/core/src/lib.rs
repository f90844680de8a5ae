// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Placement planning for UAV base stations serving users inside a high-rise
//! building.

pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod multiuav;
pub mod optimize;
pub mod placement;
pub mod propagation;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::{Bounds3, Interval, Point3};
