//! Trace-driven simulation of device-to-device (D2D) traffic offloading in a
//! single cellular cell.
//!
//! The pipeline runs in four layers:
//!
//! * [`trace`] turns encounter logs into per-pair contact statistics.
//! * [`social`] fits Gamma contact-duration models, derives the closeness
//!   weight of every pair and clusters UEs into offline social networks
//!   (OffSNs) or "white" areas.
//! * [`ibp`] drives content selection with an Indian Buffet Process.
//! * [`offload`] serves every selected content either from the eNB or over a
//!   D2D link, using the SINR rate model in [`phy`].
//!
//! [`tail`] holds the analytic side: Chernoff bounds and a saddlepoint
//! approximation for the number of already-viewed contents a user selects.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod ibp;
pub mod offload;
pub mod phy;
pub mod rng;
pub mod social;
pub mod tail;
pub mod trace;

pub use error::{Error, Result};
