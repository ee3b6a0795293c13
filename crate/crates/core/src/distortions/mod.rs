//! Spatial-domain manipulations and the [`DistortionSpec`] dispatcher.

mod apply;
pub mod eidolon;
mod filter;
mod noise;
mod rotate;
mod spec;

pub use apply::{apply, DistortionContext, Distorted, Provenance};
pub use eidolon::{eidolon, EidolonParams, EIDOLON_VARIANT_ID};
pub use filter::{gaussian_highpass, gaussian_highpass_values, gaussian_kernel, gaussian_lowpass, DEFAULT_MEAN_GREY};
pub use noise::{salt_pepper, uniform_noise, DEFAULT_PRE_CONTRAST, SALT_PEPPER_SPLIT};
pub use rotate::rotate;
pub use spec::{grids, DistortionSpec, Seed};
