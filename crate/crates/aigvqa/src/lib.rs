//! Filesystem, command-line and HTTP layer over [`aigvqa_core`].
//!
//! * [`store`]: AVF clip container and JSON checkpoints.
//! * [`formats`]: ratings, MOS and win-rate CSV, JSON Lines records.
//! * [`dataset`]: synthetic datasets with ground truth on disk.
//! * [`eval`]: train/test evaluation and the ten-split protocol.
//! * [`service`]: the annotation HTTP service.
//! * [`cli`]: the `aigvqa` binary.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod formats;
pub mod service;
pub mod store;

pub use aigvqa_core as core;
pub use error::{Error, Result};
