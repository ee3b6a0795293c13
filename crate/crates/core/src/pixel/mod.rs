//! Image representation, colour conversion, preprocessing and corpus ingestion.

mod buffer;
pub mod colour;
pub mod ingest;
pub mod io;
pub mod preprocess;

pub use buffer::{ClipReport, ImageBuffer};
pub use colour::{opponent_colour, to_greyscale, MonitorModel, LUMA_WEIGHTS};
pub use ingest::{ingest_filter, DatasetStats, ExclusionReason, IngestRules, ManifestEntry};
pub use preprocess::{center_crop_square, downsample, preprocess, scale_contrast, ResampleFilter};
