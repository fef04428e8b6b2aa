//! Gravity-weighted spatial networks built from nightlight rasters.
//!
//! The crate covers the whole chain: raster ingestion and aggregation onto a
//! coarse node lattice ([`raster`]), gravity network construction with
//! threshold sparsification and nearest-neighbour rewiring ([`gravity`]),
//! second-order biased random walks ([`walk`]), per-node step-expectation
//! features ([`features`]), survey ingestion and spatial join ([`survey`]),
//! the regression suite with its split harness ([`regress`]), modularity
//! communities and their tracking across snapshots ([`community`]), and the
//! end-to-end driver plus synthetic scenarios ([`pipeline`]).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod community;
pub mod error;
pub mod features;
pub mod gravity;
pub mod pipeline;
pub mod raster;
pub mod regress;
pub mod survey;
pub mod walk;

mod fmt;
mod rng;

pub use error::{Error, Result};
