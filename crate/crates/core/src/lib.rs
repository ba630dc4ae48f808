//! Random-access JPEG textures.
//!
//! Baseline 4:2:0 JPEGs are transcoded into a container whose MCUs can be decoded
//! independently ([`transcode`], [`mcu`]). A deferred software renderer ([`render`])
//! rasterizes a G-buffer of texture coordinates, marks the visible 16x16 blocks,
//! decodes only blocks missing from a frame-coherent [`cache`], and resolves the
//! final image from cached texels. [`bench`] holds metrics and benchmark helpers.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Data-unit loops index several parallel per-unit tables.
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod cache;
pub mod error;
pub mod image;
pub mod jpeg;
pub mod mcu;
pub mod par;
pub mod pixel;
pub mod render;
pub mod transcode;

pub use error::{Error, Result};
pub use image::RgbImage;
