//! Generalized compressed Kalman filtering for high-dimensional Gaussian
//! state estimation.
//!
//! The crate is organised bottom-up:
//!
//! - [`gaussian`]: Gaussian beliefs and the linear-algebra primitives they need.
//! - [`filters`]: KF, EKF and UKF cores behind one interface.
//! - [`engine`]: stochastic cloning, local prediction/update, virtual
//!   likelihoods and the global update.
//! - [`partition`]: subsystem layouts and their switching schedule.
//! - [`exchange`]: inter-subsystem messages (independent input and ELSD).
//! - [`models`]: heat and Burgers testbeds, truth and observations.
//! - [`harness`]: experiment configs, runs, metrics, timing and reports.

pub mod engine;
pub mod error;
pub mod exchange;
pub mod filters;
pub mod gaussian;
pub mod harness;
pub mod models;
pub mod partition;

pub use error::{GckfError, Result};
