//! Perceptual quantisation laboratory.
//!
//! HEVC-style integer DCT/DST, three coefficient-level quantisers (uniform
//! reconstruction, rate-distortion optimised, and frequency-dependent
//! perceptual) and a small intra-only block codec that ties them together so
//! bitrate and reconstruction quality can be compared on raw YCbCr clips.

pub mod coding;
pub mod error;
pub mod experiment;
pub mod fdpq;
pub mod media_io;
pub mod metrics;
pub mod quant;
pub mod rdoq;
pub mod transform;

pub use error::{Error, Result};
