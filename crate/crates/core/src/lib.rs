//! Soft-constrained reach–avoid analysis on Cartesian grids.
//!
//! A reach–avoid game asks whether a controller can steer a system into a
//! target set while staying inside hard constraints, against a bounded
//! adversarial disturbance. Here a second, soft constraint set may be left
//! for a bounded total time `Q`. The remaining allowance becomes an extra
//! state `z`, and the game is solved as a Hamilton–Jacobi–Isaacs
//! variational inequality over `(x, z)`.
//!
//! The pipeline is [`scenario`] → [`solver`] → [`sets`] / [`sim`], with
//! [`geometry`] supplying implicit sets, masks and contours on a [`grid`].

pub mod error;
pub mod grid;
pub mod format;
pub mod geometry;
pub mod dynamics;
pub mod solver;
pub mod sets;
pub mod sim;
pub mod scenario;
pub mod svg;
pub mod cli;

pub use error::{Error, Result};
