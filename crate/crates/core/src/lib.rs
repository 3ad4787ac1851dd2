//! Error-bounded lossy compression for single-snapshot N-body particle data.
//!
//! A snapshot is six parallel `f32` arrays (`xx`, `yy`, `zz`, `vx`, `vy`,
//! `vz`). Every codec in [`pipeline`] guarantees that each reconstructed
//! value lies within the resolved absolute error bound of its original,
//! matched through the particle permutation when the codec reorders.
//!
//! Codecs:
//!
//! * `SzLcf` / `SzLv`: per-field prediction (linear extrapolation or last
//!   value), linear-scaling quantization and canonical Huffman coding.
//! * `SzLvPrx`: R-index reordering with a partial radix sort, then `SzLv`.
//! * `Cpc2000`: integerization, full R-index sort, delta + adaptive
//!   variable-length coding.
//! * `SzCpc2000`: `Cpc2000` coordinates with `SzLv` velocities.

pub mod datagen;
pub mod encode;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod predict;
pub mod quantize;
pub mod rindex;

pub use error::{Error, Result};
pub use model::{ErrorBoundSpec, Field, FieldStats, ParticleSnapshot};
pub use pipeline::{CompressedArchive, CompressionMode, Settings};
pub use rindex::{Permutation, RIndexVariant};
