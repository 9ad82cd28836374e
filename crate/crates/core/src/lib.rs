//! Analytics core for hybrid battery + fuel-cell vehicle telemetry.
//!
//! The crate covers the full desk-side analysis pipeline for voltage /
//! current / power / temperature logs sampled from a small hybrid
//! powertrain (NiMH pack supplemented by a 30 W PEM fuel cell):
//!
//! - [`telemetry`]: record model, CSV log parsing/writing, sampling checks
//! - [`sigproc`]: moving-average smoothing and channel correlation
//! - [`detect`]: robust outlier scores and exact penalized segmentation
//! - [`learn`]: tree-ensemble throttle classification with grid search
//! - [`tcn`]: causal dilated convolutional voltage forecasting
//! - [`metrics`]: shared regression/classification metrics
//! - [`synth`]: physics-based scenario generator with labeled ground truth
//!
//! Everything here is pure computation over in-memory slices; file and
//! report handling lives in the companion CLI crate. The crate is
//! `no_std`-compatible (with `alloc`) when built without the default
//! `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod float;

pub mod detect;
pub mod learn;
pub mod metrics;
pub mod sigproc;
pub mod synth;
pub mod tcn;
pub mod telemetry;
