//! Kalman-filter tracking-by-detection toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`filter`]: linear Kalman filter (predict, standard/Joseph update,
//!   confidence-scaled update, Mahalanobis gating).
//! * [`motion`]: bounding-box state parameterisations and model builders.
//! * [`assoc`]: cost construction and optimal assignment.
//! * [`cmc`]: camera motion compensation from point correspondences.
//! * [`trackers`]: SORT, ByteTrack, OC-SORT, Deep OC-SORT, BoT-SORT and
//!   StrongSORT pipelines behind one stateful [`trackers::Tracker`].
//! * [`interp`]: tracklet gap filling (linear and Gaussian-process).
//! * [`metrics`]: ADE / AMD accuracy metrics, coverage and timing.
//! * [`sim`]: deterministic bouncing-ball court simulator and detection
//!   corruption model.
//! * [`harness`]: file formats, benchmark runner and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assoc;
pub mod cmc;
pub mod error;
pub mod filter;
pub mod harness;
pub mod interp;
pub mod metrics;
pub mod motion;
pub mod sim;
pub mod trackers;

pub use error::{Error, Result};
