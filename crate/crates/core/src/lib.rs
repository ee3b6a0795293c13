//! Parametric image degradations and the measurement machinery around them.
//!
//! The crate covers five areas:
//!
//! - [`pixel`]: the [`ImageBuffer`] type, greyscale and opponent-colour conversion,
//!   centre cropping, antialiased downsampling and corpus ingestion with outlier exclusion.
//! - [`distortions`] and [`spectral`]: the twelve test manipulations (contrast, uniform and
//!   salt-and-pepper noise, Gaussian low/high-pass, rotation, eidolon disarray, phase noise,
//!   power-spectrum equalisation, ...) and the 1/f noise mask.
//! - [`taxonomy`]: the 1000 → 16 entry-level category map, decision aggregation and
//!   temperature-controlled decision sampling.
//! - [`metrics`]: accuracy, response-distribution entropy, confusion matrices, observer
//!   ranges, seven-run partitions and the temperature trade-off sweep.
//! - [`harness`] and [`session`]: model evaluation over a corpus, augmentation sampling,
//!   and a timed forced-choice session engine with an HTTP API for a browser trial runner.
//!
//! Every stochastic operation is keyed by a [`rng::StreamKey`] so that outputs are
//! bit-identical for identical inputs regardless of evaluation order.

pub mod distortions;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod pixel;
pub mod rng;
pub mod session;
pub mod spectral;
pub mod taxonomy;
pub mod trial;

pub use error::{Error, Result};
pub use pixel::ImageBuffer;
pub use taxonomy::Category;
