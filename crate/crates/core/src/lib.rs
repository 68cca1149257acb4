//! Capability models for LiDAR spoofing attacks.
//!
//! The crate simulates what a spoofer can actually do to a LiDAR frame:
//!
//! * [`injection`]: place a chosen point pattern, subject to ray-bound
//!   displacement errors, timing randomization and pulse fingerprinting;
//! * [`removal`]: remove points by pushing them inside the sensor's minimum
//!   range (PRA) or scattering them with high-frequency pulses (HFR);
//! * [`scenario`]: build target-vehicle scenarios from a background frame;
//! * [`eval`] and [`detector`]: judge attack success from detections.
//!
//! Sensor parameters for nine commercial LiDARs live in [`profiles`].

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod injection;
pub mod io;
pub mod profiles;
pub mod removal;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::{Point, PointCloud, Vec3};
