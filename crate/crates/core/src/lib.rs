//! Allocation-only algorithms for assessing AI-generated videos along four
//! perceptual dimensions.
//!
//! The crate is `no_std` and needs only `alloc`. Everything that touches the
//! filesystem, the network or the command line lives in the `aigvqa` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assessor;
pub mod dimension;
pub mod level;
pub mod metrics;
pub mod pairstudy;
pub mod rng;
pub mod split;
pub mod subjective;
pub mod synthgen;
pub mod taxonomy;
pub mod text;
pub mod video;

pub use dimension::Dimension;
pub use level::{mos_to_level, QualityLevel};
pub use video::VideoTensor;
