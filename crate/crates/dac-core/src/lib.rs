//! Divide-and-conquer training of grid radiance fields.
//!
//! Input views are split into balanced partitions ([`divide`]), one expert
//! field is trained per partition ([`train`]), and the experts are distilled
//! into a single student field that is then fine-tuned on the ground-truth
//! images ([`conquer`]). Everything here is pure computation over in-memory
//! data; file formats, dataset generation and the CLI live in the `dac`
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod checkpoint;
pub mod conquer;
pub mod divide;
pub mod error;
pub mod field;
pub mod geometry;
pub mod histogram;
pub mod image;
pub mod metrics;
pub mod rng;
pub mod scene;
pub mod train;
pub mod vec3;

pub use error::{Error, Result};
pub use geometry::{CameraPose, Ray};
pub use image::Image;
pub use vec3::{Mat3, Vec3};
